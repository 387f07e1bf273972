#include "lgvi/direct.hpp"

#include <algorithm>
#include <cmath>

namespace lgvi {

double schedule_cost(const ControlSchedule& s) {
  double acc = 0;
  for (int k = 0; k < s.steps(); ++k) acc += s.at_step(k).squaredNorm();
  return 0.5 * s.h() * acc;
}

MatX spline_step_basis(int knots, int steps, double h) {
  MatX b(steps, knots);
  for (int i = 0; i < knots; ++i) {
    VecX e = VecX::Zero(knots);
    e(i) = 1.0;
    const CubicSpline s(e, steps * h);
    for (int k = 0; k < steps; ++k) b(k, i) = s((k + 1) * h);
  }
  return b;
}

VecX schedule_cost_gradient(const MatX& knots, int steps, double h) {
  const int nc = static_cast<int>(knots.rows());
  const int nk = static_cast<int>(knots.cols());
  const MatX b = spline_step_basis(nk, steps, h);
  VecX g(nc * nk);
  for (int c = 0; c < nc; ++c) {
    // dJ/du_{k+1} = h u_{k+1}; pull back through the linear knot map.
    const VecX u = b * knots.row(c).transpose();
    g.segment(c * nk, nk) = b.transpose() * (h * u);
  }
  return g;
}

VecX cart_terminal_residual(const CartPendulumState& end, const CartPendulumScenario& sc) {
  VecX r(10);
  r.segment<3>(0) = log_so3(Mat3(end.r.matrix().transpose() * sc.terminal.r.matrix()));
  r(3) = end.x - sc.terminal.x;
  r(4) = end.y - sc.terminal.y;
  r.segment<3>(5) = end.omega - sc.terminal.omega;
  r(8) = end.xdot - sc.terminal.xdot;
  r(9) = end.ydot - sc.terminal.ydot;
  return r;
}

std::vector<CartPendulumState> propagate_cart_schedule(const CartPendulumScenario& sc,
                                                       const ControlSchedule& u) {
  std::vector<CartPendulumState> out;
  out.reserve(sc.steps + 1);
  out.push_back(sc.initial);
  for (int k = 0; k < sc.steps; ++k) {
    out.push_back(step_cart_pendulum(out.back(), Vec2(u.at_step(k)), sc.params, sc.h));
  }
  return out;
}

VecX connected_terminal_residual(const ConnectedState& end, const ConnectedScenario& sc) {
  VecX r(12);
  r.segment<3>(0) = log_so3(Mat3(end.r1.matrix().transpose() * sc.terminal.r1.matrix()));
  r.segment<3>(3) = log_so3(Mat3(end.r2.matrix().transpose() * sc.terminal.r2.matrix()));
  r.segment<3>(6) = end.omega1 - sc.terminal.omega1;
  r.segment<3>(9) = end.omega2 - sc.terminal.omega2;
  return r;
}

std::vector<ConnectedState> propagate_connected_schedule(const ConnectedScenario& sc,
                                                         const ControlSchedule& u) {
  std::vector<ConnectedState> out;
  out.reserve(sc.steps + 1);
  out.push_back(sc.initial);
  for (int k = 0; k < sc.steps; ++k) {
    out.push_back(step_connected(out.back(), Vec3(u.at_step(k)), sc.params, sc.h));
  }
  return out;
}

std::vector<int> cart_constraint_rows() {
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
}

// Total angular momentum is conserved for any internal control, so for a
// rest-to-rest maneuver the terminal Omega2 rows follow from the retained
// rows and are dropped.
std::vector<int> connected_constraint_rows() {
  return {0, 1, 2, 3, 4, 5, 6, 7, 8};
}

namespace detail {

SqpOutcome solve_sqp(const std::function<VecX(const VecX&)>& constraints,
                     int components, int steps, double h, const NlpOptions& opt) {
  const int nk = opt.knots;
  const int n = components * nk;
  const MatX basis = spline_step_basis(nk, steps, h);
  const MatX hc = h * basis.transpose() * basis;
  MatX hess = MatX::Zero(n, n);
  for (int c = 0; c < components; ++c) hess.block(c * nk, c * nk, nk, nk) = hc;

  VecX xi = VecX::Zero(n);
  VecX c = constraints(xi);
  const int m = static_cast<int>(c.size());
  double mu = 1.0;

  auto merit = [&](const VecX& x, const VecX& cx) {
    return 0.5 * x.dot(hess * x) + mu * cx.lpNorm<1>();
  };

  SqpOutcome out;
  double best_violation = c.lpNorm<Eigen::Infinity>();
  int stall_count = 0;

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    // Constraint Jacobian by central differences over the knot parameters.
    MatX a(m, n);
    for (int i = 0; i < n; ++i) {
      VecX xp = xi, xm = xi;
      xp(i) += opt.fd_step;
      xm(i) -= opt.fd_step;
      a.col(i) = (constraints(xp) - constraints(xm)) / (2.0 * opt.fd_step);
    }

    const VecX g = hess * xi;
    // Least-squares multipliers and reduced-gradient stationarity.
    const VecX lam = a.transpose().colPivHouseholderQr().solve(VecX(-g));
    const double stationarity = (g + a.transpose() * lam).lpNorm<Eigen::Infinity>();
    const double violation = c.lpNorm<Eigen::Infinity>();
    out.history.push_back({0.5 * xi.dot(hess * xi), violation, stationarity, 0.0});

    if (violation <= opt.tol && stationarity <= opt.tol) {
      out.xi = xi;
      out.converged = true;
      return out;
    }
    if (violation > opt.tol) {
      if (violation > best_violation * (1.0 - opt.stall_threshold)) {
        if (++stall_count > 15) {
          throw InfeasibleStall("terminal violation plateaued at " +
                                std::to_string(violation));
        }
      } else {
        stall_count = 0;
      }
      best_violation = std::min(best_violation, violation);
    }

    // KKT step for the equality-constrained quadratic model.
    MatX kkt = MatX::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = hess;
    kkt.topRightCorner(n, m) = a.transpose();
    kkt.bottomLeftCorner(m, n) = a;
    VecX rhs(n + m);
    rhs.head(n) = -g;
    rhs.tail(m) = -c;
    const VecX sol = kkt.fullPivLu().solve(rhs);
    const VecX d = sol.head(n);
    const VecX nu = sol.tail(m);

    // A numerically vanishing step at a feasible point is a stationary point
    // even if the multiplier residual sits slightly above the tolerance.
    if (violation <= opt.tol &&
        d.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + xi.lpNorm<Eigen::Infinity>())) {
      out.xi = xi;
      out.converged = true;
      return out;
    }

    mu = std::max(mu, 2.0 * nu.lpNorm<Eigen::Infinity>() + 1.0);
    const double phi0 = merit(xi, c);
    const double descent = g.dot(d) - mu * c.lpNorm<1>();
    // Absolute slack keeps the backtracking from failing once the achievable
    // merit decrease drops below the rounding noise of phi0 itself.
    const double slack = 1e-12 * (1.0 + std::abs(phi0));

    double gamma = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtracks; ++bt, gamma *= 0.5) {
      const VecX trial = xi + gamma * d;
      VecX ct;
      try {
        ct = constraints(trial);
      } catch (const NoConvergence&) {
        continue;  // step drove the implicit update out of its basin; shrink
      } catch (const SingularMassMatrix&) {
        continue;
      }
      if (merit(trial, ct) <= phi0 + 1e-4 * gamma * descent + slack) {
        xi = trial;
        c = ct;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Once the constraints sit inside the tolerance, the remaining merit
      // change is below the finite-difference noise of the Jacobian, so an
      // exhausted backtrack means the cost is no longer improvable: converged.
      if (violation <= opt.tol) {
        out.xi = xi;
        out.converged = true;
        return out;
      }
      throw LineSearchStall("no step length decreases the l1 merit function (" +
                            std::to_string(c.lpNorm<Eigen::Infinity>()) + ")");
    }
    out.history.back().step_length = gamma;
  }
  throw MaxIterations("direct solver exhausted " + std::to_string(opt.max_iter) +
                      " iterations");
}

}  // namespace detail

namespace {

MatX unstack(const VecX& xi, int components, int knots) {
  MatX k(components, knots);
  for (int c = 0; c < components; ++c) k.row(c) = xi.segment(c * knots, knots).transpose();
  return k;
}

VecX select_rows(const VecX& full, const std::vector<int>& rows) {
  VecX out(static_cast<int>(rows.size()));
  for (int i = 0; i < out.size(); ++i) out(i) = full(rows[i]);
  return out;
}

}  // namespace

DirectResult<CartPendulumState> solve_direct_cart(const CartPendulumScenario& sc,
                                                  const NlpOptions& opt) {
  const int components = 2;
  auto constraints = [&](const VecX& xi) {
    const ControlSchedule u(unstack(xi, components, opt.knots), sc.steps, sc.h);
    const auto traj = propagate_cart_schedule(sc, u);
    return select_rows(cart_terminal_residual(traj.back(), sc), cart_constraint_rows());
  };
  const detail::SqpOutcome sqp =
      detail::solve_sqp(constraints, components, sc.steps, sc.h, opt);

  DirectResult<CartPendulumState> res;
  res.history = sqp.history;
  res.knot_values = unstack(sqp.xi, components, opt.knots);
  res.schedule = ControlSchedule(res.knot_values, sc.steps, sc.h);
  res.states = propagate_cart_schedule(sc, res.schedule);
  for (int k = 0; k < sc.steps; ++k) res.controls.push_back(res.schedule.at_step(k));
  res.converged = sqp.converged;
  res.cost = schedule_cost(res.schedule);
  res.violation =
      select_rows(cart_terminal_residual(res.states.back(), sc), cart_constraint_rows())
          .norm();
  return res;
}

DirectResult<ConnectedState> solve_direct_connected(const ConnectedScenario& sc,
                                                    const NlpOptions& opt) {
  const int components = 3;
  auto constraints = [&](const VecX& xi) {
    const ControlSchedule u(unstack(xi, components, opt.knots), sc.steps, sc.h);
    const auto traj = propagate_connected_schedule(sc, u);
    return select_rows(connected_terminal_residual(traj.back(), sc),
                       connected_constraint_rows());
  };
  const detail::SqpOutcome sqp =
      detail::solve_sqp(constraints, components, sc.steps, sc.h, opt);

  DirectResult<ConnectedState> res;
  res.history = sqp.history;
  res.knot_values = unstack(sqp.xi, components, opt.knots);
  res.schedule = ControlSchedule(res.knot_values, sc.steps, sc.h);
  res.states = propagate_connected_schedule(sc, res.schedule);
  for (int k = 0; k < sc.steps; ++k) res.controls.push_back(res.schedule.at_step(k));
  res.converged = sqp.converged;
  res.cost = schedule_cost(res.schedule);
  res.violation = select_rows(connected_terminal_residual(res.states.back(), sc),
                              connected_constraint_rows())
                      .norm();
  return res;
}

}  // namespace lgvi
