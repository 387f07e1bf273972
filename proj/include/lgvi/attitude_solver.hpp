#ifndef LGVI_ATTITUDE_SOLVER_HPP
#define LGVI_ATTITUDE_SOLVER_HPP

#include <limits>

#include "lgvi/so3.hpp"
#include "lgvi/types.hpp"

// Implicit attitude update shared by all integrators: solve
//
//     h * hat(p) = F J_d - J_d F^T,   F in SO(3),
//
// for F by Newton iteration on f in R^3 with F = exp(f). The residual is
// G(f) = vee(exp(f) J_d - J_d exp(f)^T) - h p, which is exactly skew so the
// vee is taken without a tolerance check.

namespace lgvi {

inline constexpr double kAttitudeResidualTol = 1e-14;
inline constexpr int kAttitudeMaxIters = 50;

template <class S>
Vec3T<S> attitude_residual(const Vec3T<S>& f, const Mat3T<S>& jd) {
  const Mat3T<S> F = exp_so3<S>(f);
  const Mat3T<S> m = F * jd;
  return S(2) * vee_skew_part<S>(m);  // vee(m - m^T) for m = F J_d
}

/// Analytic Jacobian of f -> vee(exp(f) J_d - J_d exp(f)^T).
///
/// With dF = F hat(Jr(f) e_i), the directional derivative of the residual is
/// vee(F hat(w) J_d + J_d hat(w) F^T) for w = Jr(f) e_i.
template <class S>
Mat3T<S> attitude_residual_jacobian(const Vec3T<S>& f, const Mat3T<S>& jd) {
  const Mat3T<S> F = exp_so3<S>(f);
  const Mat3T<S> jr = right_jacobian<S>(f);
  Mat3T<S> out;
  for (int i = 0; i < 3; ++i) {
    const Mat3T<S> ei_hat = hat<S>(Vec3T<S>(Mat3T<S>::Identity().col(i)));
    const Mat3T<S> m = F * ei_hat * jd;
    out.col(i) = S(2) * vee_skew_part<S>(Mat3T<S>(m));  // m + J_d ei_hat F^T = m - m^T
  }
  return out * jr;
}

struct AttitudeSolveStats {
  int iterations = 0;
  double residual = 0.0;
};

/// Solve vee(F J_d - J_d F^T) = h p for f with F = exp(f). Initial guess
/// f0 = h J^{-1} p (J reconstructed from J_d) is exact to O(h^2), which keeps
/// the iteration count at two or three.
template <class S>
Vec3T<S> solve_attitude_alg(const Vec3T<S>& p, const Mat3& jd, double h,
                            AttitudeSolveStats* stats = nullptr) {
  const Mat3 j = standard_inertia(jd);
  const Vec3T<S> rhs = S(h) * p;
  Vec3T<S> f = S(h) * (j.inverse().cast<typename Vec3T<S>::Scalar>() * p);
  const Mat3T<S> jd_s = jd.template cast<typename Mat3T<S>::Scalar>();

  auto res_norm = [](const Vec3T<S>& r) {
    double m = 0;
    for (int i = 0; i < 3; ++i) m = std::max(m, std::abs(r(i)));
    return m;
  };

  // The residual scales with J_d, so for small inertias the absolute tolerance
  // must shrink with it or f retains errors of order tol / ||J_d|| per step.
  const double tol =
      kAttitudeResidualTol * std::min(1.0, jd.cwiseAbs().maxCoeff());

  Vec3T<S> r = attitude_residual<S>(f, jd_s) - rhs;
  int it = 0;
  double prev = std::numeric_limits<double>::infinity();
  while (res_norm(r) > tol) {
    const double rn = res_norm(r);
    if (rn >= prev && rn <= kAttitudeResidualTol) break;  // rounding floor
    prev = rn;
    if (++it > kAttitudeMaxIters) {
      throw NoConvergence(
          "attitude update: Newton residual " + std::to_string(rn) + " after " +
          std::to_string(kAttitudeMaxIters) +
          " iterations (step size too large for this momentum)");
    }
    const Mat3T<S> jac = attitude_residual_jacobian<S>(f, jd_s);
    f -= jac.fullPivLu().solve(r);
    r = attitude_residual<S>(f, jd_s) - rhs;
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = res_norm(r);
  }
  return f;
}

/// Public form returning the group element.
inline Rotation solve_attitude_step(const Vec3& p, const Mat3& jd, double h,
                                    AttitudeSolveStats* stats = nullptr) {
  if (!(h > 0)) throw Error("solve_attitude_step: timestep must be positive");
  const Vec3 f = solve_attitude_alg<double>(p, jd, h, stats);
  return Rotation::trusted(exp_so3(f));
}

}  // namespace lgvi

#endif
