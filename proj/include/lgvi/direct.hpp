#ifndef LGVI_DIRECT_HPP
#define LGVI_DIRECT_HPP

#include <functional>
#include <vector>

#include "lgvi/scenarios.hpp"
#include "lgvi/spline.hpp"

// Direct optimal control: controls parameterized by spline knot values, cost
// and terminal residuals evaluated through the variational steppers, and the
// resulting equality-constrained program solved by sequential quadratic
// programming with an l1 merit line search. The cost is an exact quadratic
// form in the knot values (the spline is linear in them), so the QP Hessian
// is assembled once and the SQP model is exact on the cost side.

namespace lgvi {

struct NlpOptions {
  int knots = 7;               // knot count per control component
  double tol = 1e-6;           // violation and stationarity target
  int max_iter = 200;
  double fd_step = 1e-6;       // central-difference step for the constraint Jacobian
  int max_backtracks = 40;
  double stall_threshold = 1e-10;  // minimum relative violation progress per window
};

struct NlpIterate {
  double cost = 0;
  double violation = 0;     // ||c||_inf of the re-propagated terminal residual
  double stationarity = 0;  // min over lambda of ||g + A^T lambda||_inf
  double step_length = 0;
};

template <class State>
struct DirectResult {
  std::vector<NlpIterate> history;
  MatX knot_values;  // components x knots
  ControlSchedule schedule;
  std::vector<State> states;    // N+1 re-propagated points under the schedule
  std::vector<VecX> controls;   // u_{k+1}, k = 0..N-1
  bool converged = false;
  double cost = 0;
  double violation = 0;  // l2 norm of the reduced terminal residual
};

/// Exact quadratic cost of a schedule: sum_k (h/2) u_{k+1}^T u_{k+1}.
double schedule_cost(const ControlSchedule& s);

/// Gradient of schedule_cost in the stacked knot vector (component-major), by
/// reverse accumulation through the linear knots-to-steps map. Matches the
/// closed-form H xi; kept separate as the finite-difference cross-check target.
VecX schedule_cost_gradient(const MatX& knots, int steps, double h);

/// steps x knots matrix B with u(t_{k+1}) = B row k applied to knot values.
MatX spline_step_basis(int knots, int steps, double h);

/// Cart model: terminal residual [log(R_N^T R^f)^v; x - x^f; y - y^f;
/// Omega - Omega^f; xdot; ydot errors], dimension 10.
VecX cart_terminal_residual(const CartPendulumState& end, const CartPendulumScenario& sc);
std::vector<CartPendulumState> propagate_cart_schedule(const CartPendulumScenario& sc,
                                                       const ControlSchedule& u);

/// Connected bodies: full terminal residual [log-rotation errors for both
/// bodies; Omega1 error; Omega2 error], dimension 12.
VecX connected_terminal_residual(const ConnectedState& end, const ConnectedScenario& sc);
std::vector<ConnectedState> propagate_connected_schedule(const ConnectedScenario& sc,
                                                         const ControlSchedule& u);

/// Rows of the full terminal residual kept as NLP constraints. The connected
/// bodies conserve total angular momentum for any internal control, so with a
/// rest-to-rest maneuver the terminal Omega2 rows are implied by the others
/// and are removed (12 -> 9). The cart model is not symmetric; its layout is
/// unchanged.
std::vector<int> cart_constraint_rows();
std::vector<int> connected_constraint_rows();

DirectResult<CartPendulumState> solve_direct_cart(const CartPendulumScenario& sc,
                                                  const NlpOptions& opt = {});
DirectResult<ConnectedState> solve_direct_connected(const ConnectedScenario& sc,
                                                    const NlpOptions& opt = {});

namespace detail {

/// Equality-constrained SQP with exact quadratic cost (h B^T B per component)
/// and finite-difference constraint Jacobian; returns the iterate history and
/// final decision vector. constraints maps the stacked knot vector to the
/// reduced residual.
struct SqpOutcome {
  VecX xi;
  std::vector<NlpIterate> history;
  bool converged = false;
};
SqpOutcome solve_sqp(const std::function<VecX(const VecX&)>& constraints,
                     int components, int steps, double h, const NlpOptions& opt);

}  // namespace detail

}  // namespace lgvi

#endif
