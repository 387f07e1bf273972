#ifndef LGVI_INDIRECT_HPP
#define LGVI_INDIRECT_HPP

#include <complex>
#include <utility>
#include <vector>

#include "lgvi/attitude_solver.hpp"
#include "lgvi/models.hpp"
#include "lgvi/scenarios.hpp"
#include "lgvi/steppers.hpp"

// Indirect optimal control by the neighboring-extremal method: discrete
// multiplier propagation alongside the variational integrator, control
// extraction from the discrete optimality conditions, sensitivity assembly by
// complex-step differentiation of the coupled (state, multiplier) flow, and
// Newton-Armijo shooting on the unknown initial multipliers.
//
// Each integrator step is written as a set of constraint residuals
// c_k(state_k, state_{k+1}, u) = 0 with variation blocks
//
//     delta c_k = P_k z_k + Q_k z_{k+1} + S_k delta u,
//
// where z is the Lie-algebra/vector state variation. Stationarity of the
// augmented cost in z_{k+1} gives the forward multiplier recursion
//
//     lambda_{k+1} = -P_{k+1}^{-T} Q_k^T lambda_k,
//
// and stationarity in u gives the control law (u = -W^{-1} lambda-component,
// lifted through the control-injection map where the model has one).
//
// The multi-block matrices here are dynamic-size on purpose: fixed-size
// complex 12x12/24x24 expressions make the compiler unroll enormous amounts
// of code for no measurable runtime benefit.

namespace lgvi {

template <class S> using MatXT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S> using VecXT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

double condition_number(const MatX& m);

/// lambda_k = A_{k+1}^T lambda_{k+1} (backward costate propagation given the
/// closed-loop state linearization A).
VecX multiplier_step(const MatX& a, const VecX& lambda_next);

/// S = (psi + psi^T)/2, K = (psi - psi^T)/2.
std::pair<MatX, MatX> decompose_sensitivity(const MatX& psi12);

// ---------------------------------------------------------------------------
// Shared shooting plumbing

struct ShootingOptions {
  double tol = 1e-12;
  int max_outer = 100;
  double armijo_decrease = 1e-4;  // sufficient-decrease factor
  int max_backtracks = 30;
  double ill_conditioned_limit = 1e12;
};

struct ShootingIterate {
  VecX lambda0;
  double violation = 0;
  double step_length = 0;
  double cond_solved = 0;  // condition number of the system actually solved
  double cond_full = 0;    // condition number of the full Newton matrix
};

template <class State>
struct ShootingResult {
  std::vector<ShootingIterate> history;
  bool converged = false;
  double cost = 0;
  VecX lambda0;
  std::vector<State> states;
  std::vector<VecX> controls;
};

namespace detail {

inline constexpr double kComplexStep = 1e-100;

/// Inverse left Jacobian of SO(3) at a: d/d eta log(exp(-eta) exp(a))|_0
/// equals -J_l(a)^{-1}, with J_l(a) = J_r(-a) = J_r(a)^T.
inline Mat3 left_jacobian_inverse(const Vec3& a) {
  return right_jacobian<double>(a).transpose().inverse();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pendulum extremal flow: z = (eta, dOmega), lambda = (l1, l2) in R^6.
//
// Constraint residuals for one step with F = F(Omega_k) from the implicit
// attitude update and c = R_{k+1}^T e3:
//   c1 = log(F^T R_k^T R_{k+1})^v                       (attitude)
//   c2 = F^T J Omega_k + h M(R_{k+1}) + h c x u - J Omega_{k+1}

template <class S>
struct PendulumCostate {
  Mat3T<S> r;
  Vec3T<S> omega;
  Vec3T<S> l1, l2;
};

/// P_k = d c_k / d z_k, evaluated from the attitude increment f = f(Omega_k).
template <class S>
MatXT<S> pendulum_p_block(const Vec3T<S>& f, const Vec3T<S>& omega,
                          const PendulumParams& p, const Mat3& jd, double h) {
  const Mat3T<S> j = p.j.cast<typename Mat3T<S>::Scalar>();
  const Mat3T<S> fk = exp_so3<S>(f);
  const Mat3T<S> jr = right_jacobian<S>(f);
  // Implicit sensitivity of f to Omega_k: G(f) df = h J dOmega.
  const Mat3T<S> d =
      attitude_residual_jacobian<S>(f, jd).partialPivLu().solve(Mat3T<S>(S(h) * j));
  const Vec3T<S> ftjw = fk.transpose() * (j * omega);
  MatXT<S> out = MatXT<S>::Zero(6, 6);
  out.block(0, 0, 3, 3) = -fk.transpose();
  out.block(0, 3, 3, 3) = -jr * d;
  out.block(3, 3, 3, 3) = hat<S>(ftjw) * jr * d + fk.transpose() * j;
  return out;
}

/// Q_k = d c_k / d z_{k+1}, evaluated at R_{k+1} with the step's control.
template <class S>
MatXT<S> pendulum_q_block(const Mat3T<S>& r_next, const Vec3T<S>& u,
                          const PendulumParams& p, double h) {
  const Mat3T<S> j = p.j.cast<typename Mat3T<S>::Scalar>();
  const Vec3T<S> c = r_next.transpose() * Vec3T<S>::UnitZ();
  const Vec3T<S> rho = p.rho.cast<typename Mat3T<S>::Scalar>();
  MatXT<S> out = MatXT<S>::Zero(6, 6);
  out.block(0, 0, 3, 3) = Mat3T<S>::Identity();
  out.block(3, 0, 3, 3) = S(h) * (S(p.m * p.g) * hat<S>(rho) - hat<S>(u)) * hat<S>(c);
  out.block(3, 3, 3, 3) = -j;
  return out;
}

/// Optimality-condition control u = W^{-1}(R^T e3 x lambda2).
inline Vec3 pendulum_extract_control(const Rotation& r, const Vec3& lambda2,
                                     const PendulumParams& p) {
  const Vec3 c = r.matrix().transpose() * Vec3::UnitZ();
  return p.w.inverse() * c.cross(lambda2);
}

/// One step of the coupled (state, multiplier) extremal flow.
template <class S>
PendulumCostate<S> pendulum_extremal_step(const PendulumCostate<S>& s,
                                          const PendulumParams& p, const Mat3& jd,
                                          double h, Vec3T<S>* u_out = nullptr) {
  const Mat3T<S> j = p.j.cast<typename Mat3T<S>::Scalar>();
  const Mat3 w_inv = p.w.inverse();
  const Vec3T<S> jw = j * s.omega;
  const Vec3T<S> f = solve_attitude_alg<S>(jw, jd, h);
  const Mat3T<S> fk = exp_so3<S>(f);

  PendulumCostate<S> out;
  out.r = advance_rotation<S>(s.r, f);
  const Vec3T<S> c = out.r.transpose() * Vec3T<S>::UnitZ();
  const Vec3T<S> u =
      w_inv.cast<typename Vec3T<S>::Scalar>() * detail::cross3<S>(c, s.l2);
  if (u_out) *u_out = u;
  const Vec3T<S> rhs = fk.transpose() * jw + S(h) * pendulum_moment_t<S>(out.r, p) +
                       S(h) * detail::cross3<S>(c, u);
  out.omega = j.partialPivLu().solve(rhs);

  // lambda_{k+1} = -P_{k+1}^{-T} Q_k^T lambda_k, with P_{k+1} built from the
  // attitude increment at the new state.
  const Vec3T<S> f_next = solve_attitude_alg<S>(Vec3T<S>(j * out.omega), jd, h);
  const MatXT<S> q = pendulum_q_block<S>(out.r, u, p, h);
  const MatXT<S> p_next = pendulum_p_block<S>(f_next, out.omega, p, jd, h);
  VecXT<S> lam(6);
  lam << s.l1, s.l2;
  const VecXT<S> lam_next =
      p_next.transpose().partialPivLu().solve(VecXT<S>(-q.transpose() * lam));
  out.l1 = lam_next.segment(0, 3);
  out.l2 = lam_next.segment(3, 3);
  return out;
}

/// Jacobian of the coupled extremal step in (z, dlambda) coordinates, by
/// complex-step differentiation (exact to round-off; all templated code paths
/// avoid conjugating operations).
MatX pendulum_coupled_jacobian(const PendulumCostate<double>& s,
                                      const PendulumParams& p, const Mat3& jd,
                                      double h);

/// Closed-loop state linearization A_k (z-to-z block of the coupled step).
MatX pendulum_state_jacobian(const PendulumCostate<double>& s,
                                    const PendulumParams& p, const Mat3& jd,
                                    double h);

/// As pendulum_state_jacobian, but cross-validated against central finite
/// differences of the control-substituted step along exp-perturbations.
/// Throws LinearizationMismatch beyond 1e-5 relative disagreement.
MatX linearize_pendulum_step(const PendulumCostate<double>& s,
                             const PendulumParams& p, double h);

struct PendulumExtremal {
  std::vector<PendulumCostate<double>> points;  // N+1 coupled points
  std::vector<Vec3> controls;                   // u_{k+1}, k = 0..N-1
  double cost = 0;
};

PendulumExtremal propagate_pendulum_extremal(const PendulumScenario& sc,
                                                    const Vec6& lambda0);

/// Terminal violation [log(R_N^T R^f)^v; Omega^f - Omega_N].
Vec6 pendulum_terminal_violation(const PendulumCostate<double>& end,
                                        const PendulumScenario& sc);

/// Psi = Phi_{N-1} ... Phi_0 for the coupled variational flow; with z_0 = 0,
/// z_N = Psi^{12} dlambda_0.
MatX pendulum_assemble_sensitivity(const PendulumExtremal& ext,
                                          const PendulumParams& p, double h);

/// Newton-Armijo shooting on lambda_0. The pendulum's control cannot change
/// the angular momentum about gravity, which makes the full Newton matrix
/// structurally rank-deficient; the update therefore solves with the
/// anti-symmetric part of the sensitivity, which stays well conditioned.
ShootingResult<PendulumState> shoot_pendulum(
    const PendulumScenario& sc, const Vec6& lambda0_guess = Vec6::Zero(),
    const ShootingOptions& opt = {});
// ---------------------------------------------------------------------------
// Dumbbell extremal flow: z = (eta, dx, dOmega, dv), lambda = (l1..l4) in R^12.
//
// Constraint residuals, with U_x and M the potential gradient and moment at
// (R_{k+1}, x_{k+1}):
//   c1 = x_k + h v_k - x_{k+1}
//   c2 = m v_k + h (u^f - U_x) - m v_{k+1}
//   c3 = log(F^T R_k^T R_{k+1})^v
//   c4 = F^T J Omega_k + h (M + u^m) - J Omega_{k+1}
//
// Variation ordering z = [eta; dx; dOmega; dv], residual ordering
// [c1; c2; c3; c4].

template <class S>
struct DumbbellCostate {
  Mat3T<S> r;
  Vec3T<S> x, omega, v;
  Vec3T<S> l1, l2, l3, l4;
};

template <class S>
MatXT<S> dumbbell_p_block(const Vec3T<S>& f, const Vec3T<S>& omega,
                          const DumbbellParams& p, const Mat3& jd, double h) {
  const Mat3T<S> j = p.j.cast<typename Mat3T<S>::Scalar>();
  const Mat3T<S> fk = exp_so3<S>(f);
  const Mat3T<S> jr = right_jacobian<S>(f);
  const Mat3T<S> d =
      attitude_residual_jacobian<S>(f, jd).partialPivLu().solve(Mat3T<S>(S(h) * j));
  const Vec3T<S> ftjw = fk.transpose() * (j * omega);
  MatXT<S> out = MatXT<S>::Zero(12, 12);
  out.block(0, 3, 3, 3) = Mat3T<S>::Identity();
  out.block(0, 9, 3, 3) = S(h) * Mat3T<S>::Identity();
  out.block(3, 9, 3, 3) = S(p.m) * Mat3T<S>::Identity();
  out.block(6, 0, 3, 3) = -fk.transpose();
  out.block(6, 6, 3, 3) = -jr * d;
  out.block(9, 6, 3, 3) = hat<S>(ftjw) * jr * d + fk.transpose() * j;
  return out;
}

template <class S>
MatXT<S> dumbbell_q_block(const Mat3T<S>& r_next, const Vec3T<S>& x_next,
                          const DumbbellParams& p, double h) {
  const Mat3T<S> j = p.j.cast<typename Mat3T<S>::Scalar>();
  Mat3T<S> uxx, uxe, me, mx;
  dumbbell_hessians_t<S>(r_next, x_next, p, &uxx, &uxe, &me, &mx);
  MatXT<S> out = MatXT<S>::Zero(12, 12);
  out.block(0, 3, 3, 3) = -Mat3T<S>::Identity();
  out.block(3, 0, 3, 3) = -S(h) * uxe;
  out.block(3, 3, 3, 3) = -S(h) * uxx;
  out.block(3, 9, 3, 3) = -S(p.m) * Mat3T<S>::Identity();
  out.block(6, 0, 3, 3) = Mat3T<S>::Identity();
  out.block(9, 0, 3, 3) = S(h) * me;
  out.block(9, 3, 3, 3) = S(h) * mx;
  out.block(9, 6, 3, 3) = -j;
  return out;
}

/// Optimality-condition controls u^f = -W_f^{-1} l2, u^m = -W_m^{-1} l4.
inline DumbbellControl dumbbell_extract_control(const Vec3& lambda2,
                                                const Vec3& lambda4, const Mat3& wf,
                                                const Mat3& wm) {
  return DumbbellControl{-wf.inverse() * lambda2, -wm.inverse() * lambda4};
}

template <class S>
DumbbellCostate<S> dumbbell_extremal_step(const DumbbellCostate<S>& s,
                                          const DumbbellParams& p, const Mat3& wf,
                                          const Mat3& wm, const Mat3& jd, double h,
                                          Vec3T<S>* uf_out = nullptr,
                                          Vec3T<S>* um_out = nullptr) {
  using Scalar = typename Vec3T<S>::Scalar;
  const Mat3T<S> j = p.j.cast<Scalar>();
  const Vec3T<S> uf = -(wf.inverse().cast<Scalar>() * s.l2);
  const Vec3T<S> um = -(wm.inverse().cast<Scalar>() * s.l4);
  if (uf_out) *uf_out = uf;
  if (um_out) *um_out = um;

  const DumbbellRaw<S> raw{s.r, s.x, s.omega, s.v};
  const DumbbellRaw<S> next = step_dumbbell_raw<S>(raw, uf, um, p, jd, h);

  DumbbellCostate<S> out;
  out.r = next.r;
  out.x = next.x;
  out.omega = next.omega;
  out.v = next.v;

  const Vec3T<S> f_next = solve_attitude_alg<S>(Vec3T<S>(j * out.omega), jd, h);
  const MatXT<S> q = dumbbell_q_block<S>(out.r, out.x, p, h);
  const MatXT<S> p_next = dumbbell_p_block<S>(f_next, out.omega, p, jd, h);
  VecXT<S> lam(12);
  lam << s.l1, s.l2, s.l3, s.l4;
  const VecXT<S> lam_next =
      p_next.transpose().partialPivLu().solve(VecXT<S>(-q.transpose() * lam));
  out.l1 = lam_next.segment(0, 3);
  out.l2 = lam_next.segment(3, 3);
  out.l3 = lam_next.segment(6, 3);
  out.l4 = lam_next.segment(9, 3);
  return out;
}

MatX dumbbell_coupled_jacobian(const DumbbellCostate<double>& s,
                                      const DumbbellParams& p, const Mat3& wf,
                                      const Mat3& wm, const Mat3& jd, double h);

/// Closed-loop state linearization A_k (z-to-z block of the coupled step).
MatX dumbbell_state_jacobian(const DumbbellCostate<double>& s,
                             const DumbbellParams& p, const Mat3& wf,
                             const Mat3& wm, const Mat3& jd, double h);

/// As dumbbell_state_jacobian, cross-validated against central finite
/// differences; throws LinearizationMismatch beyond 1e-5 relative.
MatX linearize_dumbbell_step(const DumbbellCostate<double>& s,
                             const DumbbellParams& p, const Mat3& wf,
                             const Mat3& wm, double h);

struct DumbbellExtremal {
  std::vector<DumbbellCostate<double>> points;
  std::vector<DumbbellControl> controls;
  double cost = 0;
};

DumbbellExtremal propagate_dumbbell_extremal(const DumbbellScenario& sc,
                                                    const Vec12& lambda0);

Vec12 dumbbell_terminal_violation(const DumbbellCostate<double>& end,
                                         const DumbbellScenario& sc);

MatX dumbbell_assemble_sensitivity(const DumbbellExtremal& ext,
                                          const DumbbellScenario& sc);

ShootingResult<DumbbellState> shoot_dumbbell(
    const DumbbellScenario& sc, const Vec12& lambda0_guess = Vec12::Zero(),
    const ShootingOptions& opt = {});
}  // namespace lgvi

#endif
