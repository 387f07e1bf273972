#ifndef LGVI_MODELS_HPP
#define LGVI_MODELS_HPP

#include <cmath>

#include "lgvi/so3.hpp"
#include "lgvi/types.hpp"

// Physical definitions of the four systems: parameters, potentials,
// forces/moments, and momentum maps.

namespace lgvi {

namespace detail {

inline void require_spd(const Mat3& m, const char* name) {
  if ((m - m.transpose()).norm() > kSkewTol) {
    throw NotSymmetric(std::string(name) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  if (es.eigenvalues().minCoeff() <= 0) {
    throw Error(std::string(name) + " is not positive-definite");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dumbbell spacecraft on SE(3): two spheres on a massless rod in a central
// gravity field. Units normalized by the dumbbell mass and a reference
// circular orbit.

struct DumbbellParams {
  double gm = 0.9835 * 0.9835;  // point-mass circular speed 0.9835 at r = 1
  double m = 1.0;
  Mat3 j = Mat3::Identity();
  Vec3 rho1 = Vec3(0.01, 0, 0);
  Vec3 rho2 = Vec3(-0.01, 0, 0);

  void validate() const {
    if (!(m > 0)) throw Error("dumbbell mass must be positive");
    detail::require_spd(j, "dumbbell inertia");
    if ((rho1 - rho2).norm() == 0) throw Error("dumbbell sphere offsets coincide");
  }
};

/// Two small spheres of radius r_s at +-rho: SPD inertia consistent with the
/// sphere offsets (point masses alone would make J singular about the rod).
inline Mat3 dumbbell_inertia(double m, const Vec3& rho, double sphere_radius) {
  const Mat3 sphere = 0.4 * m * sphere_radius * sphere_radius * Mat3::Identity();
  const Mat3 offset = m * (rho.squaredNorm() * Mat3::Identity() - rho * rho.transpose());
  return sphere + offset;
}

inline DumbbellParams default_dumbbell_params() {
  DumbbellParams p;
  p.j = dumbbell_inertia(p.m, p.rho1, 0.005);
  return p;
}

template <class S>
S dumbbell_potential_t(const Mat3T<S>& r, const Vec3T<S>& x, const DumbbellParams& p) {
  using std::sqrt;
  S u = S(0);
  for (const Vec3& rho : {p.rho1, p.rho2}) {
    const Vec3T<S> w = x + r * rho.cast<typename Mat3T<S>::Scalar>();
    const S d2 = detail::dot3(w, w);
    if (detail::real_part(d2) < 1e-18) {
      throw CollisionSingularity("dumbbell sphere at the central body singularity");
    }
    u -= S(0.5 * p.gm * p.m) / sqrt(d2);
  }
  return u;
}

inline double dumbbell_potential(const Rotation& r, const Vec3& x, const DumbbellParams& p) {
  return dumbbell_potential_t<double>(r.matrix(), x, p);
}

/// Force -dU/dx and body-frame gravity moment for the dumbbell potential.
/// With w_q = x + R rho_q and g_q = (GMm/2) w_q/|w_q|^3:
///   dU/dx = sum g_q,   M = sum (R^T g_q) x rho_q.
template <class S>
void dumbbell_gradients(const Mat3T<S>& r, const Vec3T<S>& x, const DumbbellParams& p,
                        Vec3T<S>* du_dx, Vec3T<S>* moment) {
  using std::sqrt;
  du_dx->setZero();
  moment->setZero();
  for (const Vec3& rho : {p.rho1, p.rho2}) {
    const Vec3T<S> rho_s = rho.cast<typename Mat3T<S>::Scalar>();
    const Vec3T<S> w = x + r * rho_s;
    const S d2 = detail::dot3(w, w);
    if (detail::real_part(d2) < 1e-18) {
      throw CollisionSingularity("dumbbell sphere at the central body singularity");
    }
    const S d = sqrt(d2);
    const Vec3T<S> g = (S(0.5 * p.gm * p.m) / (d2 * d)) * w;
    *du_dx += g;
    const Vec3T<S> c = r.transpose() * g;
    *moment += detail::cross3<S>(c, rho_s);
  }
}

/// Second derivatives of the dumbbell potential in variation coordinates
/// (eta, dx) with dR = R hat(eta). Outputs:
///   uxx = d(dU/dx)/dx, uxe = d(dU/dx)/deta, me = dM/deta, mx = dM/dx.
template <class S>
void dumbbell_hessians_t(const Mat3T<S>& r, const Vec3T<S>& x, const DumbbellParams& p,
                         Mat3T<S>* uxx, Mat3T<S>* uxe, Mat3T<S>* me, Mat3T<S>* mx) {
  using std::sqrt;
  uxx->setZero();
  uxe->setZero();
  me->setZero();
  mx->setZero();
  for (const Vec3& rho : {p.rho1, p.rho2}) {
    const Vec3T<S> rho_s = rho.cast<typename Mat3T<S>::Scalar>();
    const Vec3T<S> w = x + r * rho_s;
    const S d2 = detail::dot3(w, w);
    const S d = sqrt(d2);
    const S k = S(0.5 * p.gm * p.m);
    const Vec3T<S> g = (k / (d2 * d)) * w;
    const Mat3T<S> hess = (k / (d2 * d)) * Mat3T<S>::Identity() -
                          (S(3) * k / (d2 * d2 * d)) * (w * w.transpose());
    const Vec3T<S> c = r.transpose() * g;
    const Mat3T<S> rrho_hat = r * hat<S>(rho_s);
    // dw = dx - R hat(rho) eta
    *uxx += hess;
    *uxe -= hess * rrho_hat;
    // M-term: d(c x rho) = -hat(rho) dc, dc = -hat(eta) c + R^T hess dw
    *me += -hat<S>(rho_s) * (hat<S>(c) - r.transpose() * hess * rrho_hat);
    *mx += -hat<S>(rho_s) * (r.transpose() * hess);
  }
}

inline void dumbbell_hessians(const Mat3& r, const Vec3& x, const DumbbellParams& p,
                              Mat3* uxx, Mat3* uxe, Mat3* me, Mat3* mx) {
  dumbbell_hessians_t<double>(r, x, p, uxx, uxe, me, mx);
}

/// Moment from an element-wise attitude derivative of a potential:
/// hat(M) = (dU/dR)^T R - R^T (dU/dR).
inline Vec3 attitude_moment(const Rotation& r, const Mat3& du_dr) {
  return vee(du_dr.transpose() * r.matrix() - r.matrix().transpose() * du_dr);
}

// ---------------------------------------------------------------------------
// 3D pendulum on SO(3) under uniform gravity, J about the pivot.

struct PendulumParams {
  double m = 1.0;
  Mat3 j = Vec3(0.13, 0.28, 0.17).asDiagonal();
  Vec3 rho = Vec3(0, 0, 0.3);
  double g = 9.81;
  Mat3 w = Mat3::Identity();  // control weight in the quadratic cost

  void validate() const {
    if (!(m > 0)) throw Error("pendulum mass must be positive");
    detail::require_spd(j, "pendulum inertia");
    detail::require_spd(w, "pendulum control weight");
  }
};

/// Gravity moment M = m g rho x (R^T e3) of the potential U = -m g e3^T R rho.
template <class S>
Vec3T<S> pendulum_moment_t(const Mat3T<S>& r, const PendulumParams& p) {
  const Vec3T<S> c = r.transpose() * Vec3T<S>::UnitZ();
  return (p.m * p.g) * detail::cross3<S>(Vec3T<S>(p.rho.cast<typename Mat3T<S>::Scalar>()), c);
}

inline Vec3 pendulum_moment(const Rotation& r, const PendulumParams& p) {
  return pendulum_moment_t<double>(r.matrix(), p);
}

inline double pendulum_potential(const Rotation& r, const PendulumParams& p) {
  return -p.m * p.g * Vec3::UnitZ().dot(r.matrix() * p.rho);
}

/// Symmetry-respecting control moment R^T e3 x u: no component about the
/// gravity direction expressed in the body frame.
inline Vec3 pendulum_control_moment(const Rotation& r, const Vec3& u) {
  return (r.matrix().transpose() * Vec3::UnitZ()).cross(u);
}

// ---------------------------------------------------------------------------
// 3D pendulum on a 2D cart on SO(3) x R^2.

struct CartPendulumParams {
  double cart_mass = 1.0;
  double m = 1.0;
  Mat3 j = Vec3(1.03, 1.04, 0.03).asDiagonal();
  Vec3 d = Vec3(0, 0, 1);
  double g = 9.81;
  Eigen::Matrix2d w = Eigen::Matrix2d::Identity();

  void validate() const {
    if (!(cart_mass > 0) || !(m > 0)) throw Error("cart/pendulum masses must be positive");
    detail::require_spd(j, "cart-pendulum inertia");
  }
};

// ---------------------------------------------------------------------------
// Two rigid bodies joined by a ball joint on SO(3) x SO(3), mass center fixed.
// Inertias are about the joint.

struct ConnectedParams {
  double m1 = 1.5;
  double m2 = 1.0;
  Mat3 j1 = (Mat3() << 0.18, 0.32, 0.32, 0.32, 1.88, -0.06, 0.32, -0.06, 1.86).finished();
  Mat3 j2 = (Mat3() << 0.11, -0.18, -0.18, -0.18, 0.89, -0.04, -0.18, -0.04, 0.88).finished();
  Vec3 d1 = Vec3(-1.08, 0.20, 0.20);
  Vec3 d2 = Vec3(0.9, 0.2, 0.2);
  Mat3 w = Mat3::Identity();

  double alpha() const { return m1 / (m1 + m2); }
  double beta() const { return m2 / (m1 + m2); }

  void validate() const {
    if (!(m1 > 0) || !(m2 > 0)) throw Error("connected-body masses must be positive");
    detail::require_spd(j1, "body-1 inertia");
    detail::require_spd(j2, "body-2 inertia");
  }

  /// 6x6 mass matrix of the reduced system mapping (Omega1, Omega2) to (p1, p2).
  Eigen::Matrix<double, 6, 6> mass_matrix(const Mat3& r1, const Mat3& r2) const {
    Eigen::Matrix<double, 6, 6> mm;
    const Mat3 d1h = hat(d1), d2h = hat(d2);
    mm.block<3, 3>(0, 0) = j1 + alpha() * m1 * d1h * d1h;
    mm.block<3, 3>(3, 3) = j2 + beta() * m2 * d2h * d2h;
    mm.block<3, 3>(0, 3) = beta() * m1 * d1h * r1.transpose() * r2 * d2h;
    mm.block<3, 3>(3, 0) = alpha() * m2 * d2h * r2.transpose() * r1 * d1h;
    return mm;
  }
};

}  // namespace lgvi

#endif
