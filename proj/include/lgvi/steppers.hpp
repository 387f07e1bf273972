#ifndef LGVI_STEPPERS_HPP
#define LGVI_STEPPERS_HPP

#include "lgvi/attitude_solver.hpp"
#include "lgvi/models.hpp"
#include "lgvi/so3.hpp"
#include "lgvi/types.hpp"

// Discrete-time flow maps (Lie group variational integrators) for the four
// models. Rotations are updated by group operations only; the group structure
// is preserved by construction and never reprojected.

namespace lgvi {

// ---------------------------------------------------------------------------
// States and controls

struct DumbbellState {
  Rotation r;
  Vec3 x = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

struct PendulumState {
  Rotation r;
  Vec3 omega = Vec3::Zero();
};

struct CartPendulumState {
  Rotation r;
  double x = 0, y = 0;
  Vec3 omega = Vec3::Zero();
  double xdot = 0, ydot = 0;
};

struct ConnectedState {
  Rotation r1, r2;
  Vec3 omega1 = Vec3::Zero();
  Vec3 omega2 = Vec3::Zero();
};

struct DumbbellControl {
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
};

inline constexpr double kFixedPointTol = 1e-12;
inline constexpr int kFixedPointMaxSweeps = 100;
inline constexpr double kMassMatrixCondLimit = 1e12;

// ---------------------------------------------------------------------------
// Dumbbell spacecraft flow map (templated for complex-step differentiation)

template <class S>
struct DumbbellRaw {
  Mat3T<S> r;
  Vec3T<S> x, omega, v;
};

template <class S>
DumbbellRaw<S> step_dumbbell_raw(const DumbbellRaw<S>& s, const Vec3T<S>& u_force,
                                 const Vec3T<S>& u_moment, const DumbbellParams& p,
                                 const Mat3& jd, double h,
                                 AttitudeSolveStats* stats = nullptr) {
  const Mat3T<S> j = p.j.cast<typename Mat3T<S>::Scalar>();
  const Vec3T<S> jw = j * s.omega;
  const Vec3T<S> f = solve_attitude_alg<S>(jw, jd, h, stats);
  const Mat3T<S> fk = exp_so3<S>(f);

  DumbbellRaw<S> out;
  out.r = advance_rotation<S>(s.r, f);
  out.x = s.x + S(h) * s.v;

  Vec3T<S> du_dx, moment;
  dumbbell_gradients<S>(out.r, out.x, p, &du_dx, &moment);
  out.omega = j.fullPivLu().solve(Vec3T<S>(fk.transpose() * jw + S(h) * (moment + u_moment)));
  out.v = s.v + (S(h) / S(p.m)) * (u_force - du_dx);
  return out;
}

inline DumbbellState step_dumbbell(const DumbbellState& s, const DumbbellControl& u,
                                   const DumbbellParams& p, double h,
                                   AttitudeSolveStats* stats = nullptr) {
  const Mat3 jd = nonstandard_inertia(p.j);
  DumbbellRaw<double> raw{s.r.matrix(), s.x, s.omega, s.v};
  const DumbbellRaw<double> next = step_dumbbell_raw<double>(raw, u.force, u.moment, p, jd, h, stats);
  return DumbbellState{Rotation::trusted(next.r), next.x, next.omega, next.v};
}

inline double dumbbell_energy(const DumbbellState& s, const DumbbellParams& p) {
  return 0.5 * p.m * s.v.squaredNorm() + 0.5 * s.omega.dot(p.j * s.omega) +
         dumbbell_potential(s.r, s.x, p);
}

inline Vec3 dumbbell_spatial_momentum(const DumbbellState& s, const DumbbellParams& p) {
  return s.r.matrix() * (p.j * s.omega);
}

// ---------------------------------------------------------------------------
// 3D pendulum flow map (templated)

template <class S>
struct PendulumRaw {
  Mat3T<S> r;
  Vec3T<S> omega;
};

template <class S>
PendulumRaw<S> step_pendulum_raw(const PendulumRaw<S>& s, const Vec3T<S>& u,
                                 const PendulumParams& p, const Mat3& jd, double h,
                                 AttitudeSolveStats* stats = nullptr) {
  const Mat3T<S> j = p.j.cast<typename Mat3T<S>::Scalar>();
  const Vec3T<S> jw = j * s.omega;
  const Vec3T<S> f = solve_attitude_alg<S>(jw, jd, h, stats);
  const Mat3T<S> fk = exp_so3<S>(f);

  PendulumRaw<S> out;
  out.r = advance_rotation<S>(s.r, f);
  const Vec3T<S> c = out.r.transpose() * Vec3T<S>::UnitZ();
  const Vec3T<S> rhs = fk.transpose() * jw + S(h) * pendulum_moment_t<S>(out.r, p) +
                       S(h) * detail::cross3<S>(c, u);
  out.omega = j.fullPivLu().solve(rhs);
  return out;
}

inline PendulumState step_pendulum(const PendulumState& s, const Vec3& u,
                                   const PendulumParams& p, double h,
                                   AttitudeSolveStats* stats = nullptr) {
  const Mat3 jd = nonstandard_inertia(p.j);
  PendulumRaw<double> raw{s.r.matrix(), s.omega};
  const PendulumRaw<double> next = step_pendulum_raw<double>(raw, u, p, jd, h, stats);
  return PendulumState{Rotation::trusted(next.r), next.omega};
}

inline double pendulum_energy(const PendulumState& s, const PendulumParams& p) {
  return 0.5 * s.omega.dot(p.j * s.omega) + pendulum_potential(s.r, p);
}

inline double vertical_momentum(const PendulumState& s, const PendulumParams& p) {
  return Vec3::UnitZ().dot(s.r.matrix() * (p.j * s.omega));
}

// ---------------------------------------------------------------------------
// Pendulum-on-cart flow map: fixed-point iteration on the attitude update

inline Eigen::Matrix<double, 5, 5> cart_mass_matrix(const Mat3& r,
                                                    const CartPendulumParams& p) {
  Eigen::Matrix<double, 5, 5> mm = Eigen::Matrix<double, 5, 5>::Zero();
  const Mat3 dh = hat(p.d);
  mm.block<3, 3>(0, 0) = p.j;
  mm.block<3, 1>(0, 3) = p.m * dh * r.transpose() * Vec3::UnitX();
  mm.block<3, 1>(0, 4) = p.m * dh * r.transpose() * Vec3::UnitY();
  mm.block<1, 3>(3, 0) = -p.m * Vec3::UnitX().transpose() * r * dh;
  mm.block<1, 3>(4, 0) = -p.m * Vec3::UnitY().transpose() * r * dh;
  mm(3, 3) = mm(4, 4) = p.cart_mass + p.m;
  return mm;
}

namespace detail {

template <int N>
Eigen::Matrix<double, N, 1> solve_mass_system(const Eigen::Matrix<double, N, N>& mm,
                                              const Eigen::Matrix<double, N, 1>& rhs) {
  Eigen::JacobiSVD<Eigen::Matrix<double, N, N>> svd(
      mm, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double cond =
      svd.singularValues()(0) / svd.singularValues()(N - 1);
  if (!(cond < kMassMatrixCondLimit)) {
    throw SingularMassMatrix("momentum system condition number " + std::to_string(cond));
  }
  return svd.solve(rhs);
}

}  // namespace detail

inline CartPendulumState step_cart_pendulum(const CartPendulumState& s, const Vec2& u,
                                            const CartPendulumParams& p, double h,
                                            AttitudeSolveStats* stats = nullptr,
                                            int* sweeps_out = nullptr) {
  const Mat3 jd = nonstandard_inertia(p.j);
  const Mat3 r = s.r.matrix();
  const Mat3 dh = hat(p.d);
  const double mt = p.cart_mass + p.m;

  Eigen::Matrix<double, 5, 1> vel;
  vel << s.omega, s.xdot, s.ydot;
  const Eigen::Matrix<double, 5, 1> mom = cart_mass_matrix(r, p) * vel;
  const Vec3 p_omega = mom.head<3>();
  const double px = mom(3), py = mom(4);

  // Fixed-point sweep: guess R_{k+1}, recover (x,y) increments, solve the
  // attitude update, recompose.
  Mat3 r_next = r;
  Mat3 fk = Mat3::Identity();
  double dx = 0, dy = 0;
  int sweep = 0;
  AttitudeSolveStats att_stats;
  for (;; ++sweep) {
    if (sweep > kFixedPointMaxSweeps) {
      throw NoConvergence("cart-pendulum fixed-point iteration stalled");
    }
    dx = (h * px - p.m * Vec3::UnitX().dot((r_next - r) * p.d)) / mt;
    dy = (h * py - p.m * Vec3::UnitY().dot((r_next - r) * p.d)) / mt;
    const Vec3 zeta = (p.m / h) * dx * dh * r.transpose() * Vec3::UnitX() +
                      (p.m / h) * dy * dh * r.transpose() * Vec3::UnitY() -
                      0.5 * h * p.m * p.g * dh * r.transpose() * Vec3::UnitZ();
    const Vec3 f = solve_attitude_alg<double>(p_omega - zeta, jd, h, &att_stats);
    fk = exp_so3(f);
    const Mat3 r_new = advance_rotation<double>(r, f);
    const double incr = log_so3(Mat3(r_next.transpose() * r_new)).norm();
    r_next = r_new;
    if (incr <= kFixedPointTol) break;
  }
  if (stats) *stats = att_stats;
  if (sweeps_out) *sweeps_out = sweep + 1;

  const Vec3 zeta_next = (p.m / h) * dx * dh * r_next.transpose() * Vec3::UnitX() +
                         (p.m / h) * dy * dh * r_next.transpose() * Vec3::UnitY() +
                         0.5 * h * p.m * p.g * dh * r_next.transpose() * Vec3::UnitZ();
  const Vec3 p_omega_next = (1.0 / h) * 2.0 * vee_skew_part<double>(Mat3(jd * fk)) + zeta_next;
  const double px_next = px + h * u(0);
  const double py_next = py + h * u(1);

  Eigen::Matrix<double, 5, 1> mom_next;
  mom_next << p_omega_next, px_next, py_next;
  const Eigen::Matrix<double, 5, 1> vel_next =
      detail::solve_mass_system<5>(cart_mass_matrix(r_next, p), mom_next);

  CartPendulumState out;
  out.r = Rotation::trusted(r_next);
  out.x = s.x + dx;
  out.y = s.y + dy;
  out.omega = vel_next.head<3>();
  out.xdot = vel_next(3);
  out.ydot = vel_next(4);
  return out;
}

inline double cart_pendulum_energy(const CartPendulumState& s, const CartPendulumParams& p) {
  const Mat3 r = s.r.matrix();
  const Vec3 pivot_vel(s.xdot, s.ydot, 0.0);
  const double kin = 0.5 * (p.cart_mass + p.m) * (s.xdot * s.xdot + s.ydot * s.ydot) +
                     0.5 * s.omega.dot(p.j * s.omega) +
                     p.m * pivot_vel.dot(r * s.omega.cross(p.d));
  return kin - p.m * p.g * Vec3::UnitZ().dot(r * p.d);
}

// ---------------------------------------------------------------------------
// Connected rigid bodies flow map: coupled 6-dimensional Newton solve

inline ConnectedState step_connected(const ConnectedState& s, const Vec3& u,
                                     const ConnectedParams& p, double h,
                                     int* newton_iters = nullptr) {
  const double a = p.alpha(), b = p.beta();
  const Mat3 k1 = nonstandard_inertia(p.j1) - a * p.m1 * p.d1 * p.d1.transpose();
  const Mat3 k2 = nonstandard_inertia(p.j2) - b * p.m2 * p.d2 * p.d2.transpose();
  const Mat3 r1 = s.r1.matrix(), r2 = s.r2.matrix();
  const Mat3 e = r1.transpose() * r2;

  Eigen::Matrix<double, 6, 1> om;
  om << s.omega1, s.omega2;
  const Eigen::Matrix<double, 6, 1> mom = p.mass_matrix(r1, r2) * om;
  const Vec3 p1 = mom.head<3>(), p2 = mom.tail<3>();

  const Mat3 c12 = b * p.m1 * e;                // with d2 d1^T factors below
  const Mat3 c21 = a * p.m2 * e.transpose();    // with d1 d2^T factors below

  auto residual = [&](const Vec3& f1, const Vec3& f2, Vec3* out1, Vec3* out2) {
    const Mat3 f1m = exp_so3(f1), f2m = exp_so3(f2);
    const Mat3 x1 = f1m * k1 - c12 * f2m * p.d2 * p.d1.transpose() +
                    c12 * p.d2 * p.d1.transpose();
    const Mat3 x2 = f2m * k2 - c21 * f1m * p.d1 * p.d2.transpose() +
                    c21 * p.d1 * p.d2.transpose();
    *out1 = 2.0 * vee_skew_part<double>(x1) - h * p1;
    *out2 = 2.0 * vee_skew_part<double>(x2) - h * p2;
  };

  Vec3 f1 = h * s.omega1, f2 = h * s.omega2;
  Vec3 res1, res2;
  residual(f1, f2, &res1, &res2);
  int it = 0;
  while (std::max(res1.lpNorm<Eigen::Infinity>(), res2.lpNorm<Eigen::Infinity>()) > 1e-13) {
    if (++it > kAttitudeMaxIters) {
      throw NoConvergence("connected-body implicit update: Newton stalled");
    }
    const Mat3 f1m = exp_so3(f1), f2m = exp_so3(f2);
    const Mat3 jr1 = right_jacobian<double>(f1), jr2 = right_jacobian<double>(f2);
    Eigen::Matrix<double, 6, 6> jac;
    for (int i = 0; i < 3; ++i) {
      const Mat3 eh = hat(Vec3(Mat3::Identity().col(i)));
      jac.block<3, 1>(0, i) = 2.0 * vee_skew_part<double>(Mat3(f1m * eh * k1));
      jac.block<3, 1>(3, i) =
          2.0 * vee_skew_part<double>(Mat3(-c21 * f1m * eh * p.d1 * p.d2.transpose()));
      jac.block<3, 1>(0, 3 + i) =
          2.0 * vee_skew_part<double>(Mat3(-c12 * f2m * eh * p.d2 * p.d1.transpose()));
      jac.block<3, 1>(3, 3 + i) = 2.0 * vee_skew_part<double>(Mat3(f2m * eh * k2));
    }
    Eigen::Matrix<double, 6, 6> jr = Eigen::Matrix<double, 6, 6>::Zero();
    jr.block<3, 3>(0, 0) = jr1;
    jr.block<3, 3>(3, 3) = jr2;
    jac = jac * jr;
    Eigen::Matrix<double, 6, 1> res;
    res << res1, res2;
    const Eigen::Matrix<double, 6, 1> delta = jac.fullPivLu().solve(res);
    f1 -= delta.head<3>();
    f2 -= delta.tail<3>();
    residual(f1, f2, &res1, &res2);
  }
  if (newton_iters) *newton_iters = it;

  const Mat3 f1m = exp_so3(f1), f2m = exp_so3(f2);
  const Mat3 r1n = advance_rotation<double>(r1, f1);
  const Mat3 r2n = advance_rotation<double>(r2, f2);

  const Vec3 joint_shift = -a * r1 * (f1m - Mat3::Identity()) * p.d1 -
                           b * r2 * (f2m - Mat3::Identity()) * p.d2;
  const Mat3 b1 = (p.m1 / h) * ((f1m - Mat3::Identity()) * p.d1) *
                  joint_shift.transpose() * r1;
  const Mat3 b2 = (p.m2 / h) * ((f2m - Mat3::Identity()) * p.d2) *
                  joint_shift.transpose() * r2;

  const Vec3 p1n = f1m.transpose() * (p1 - 2.0 * vee_skew_part<double>(b1)) +
                   h * r1n.transpose() * u;
  const Vec3 p2n = f2m.transpose() * (p2 - 2.0 * vee_skew_part<double>(b2)) -
                   h * r2n.transpose() * u;

  Eigen::Matrix<double, 6, 1> mom_next;
  mom_next << p1n, p2n;
  const Eigen::Matrix<double, 6, 1> om_next =
      detail::solve_mass_system<6>(p.mass_matrix(r1n, r2n), mom_next);

  ConnectedState out;
  out.r1 = Rotation::trusted(r1n);
  out.r2 = Rotation::trusted(r2n);
  out.omega1 = om_next.head<3>();
  out.omega2 = om_next.tail<3>();
  return out;
}

inline double connected_energy(const ConnectedState& s, const ConnectedParams& p) {
  Eigen::Matrix<double, 6, 1> om;
  om << s.omega1, s.omega2;
  return 0.5 * om.dot(p.mass_matrix(s.r1.matrix(), s.r2.matrix()) * om);
}

inline Vec3 total_angular_momentum(const ConnectedState& s, const ConnectedParams& p) {
  Eigen::Matrix<double, 6, 1> om;
  om << s.omega1, s.omega2;
  const Eigen::Matrix<double, 6, 1> mom = p.mass_matrix(s.r1.matrix(), s.r2.matrix()) * om;
  return s.r1.matrix() * mom.head<3>() + s.r2.matrix() * mom.tail<3>();
}

}  // namespace lgvi

#endif
