#include <doctest.h>

#include <cmath>
#include <random>

#include "lgvi/direct.hpp"

using namespace lgvi;

namespace {
std::mt19937_64 rng(77002);
double unit_rand() { return std::uniform_real_distribution<double>(-1, 1)(rng); }
}  // namespace

TEST_CASE("cubic spline basics") {
  SUBCASE("fewer than two knots is rejected") {
    CHECK_THROWS_AS(CubicSpline(VecX::Ones(1), 1.0), TooFewKnots);
    CHECK_THROWS_AS(CubicSpline(VecX::Zero(0), 1.0), TooFewKnots);
  }
  SUBCASE("two knots degenerate to linear interpolation") {
    VecX y(2);
    y << 1.0, 3.0;
    const CubicSpline s(y, 2.0);
    for (double t = 0; t <= 2.0; t += 0.1) {
      CHECK(s(t) == doctest::Approx(1.0 + t).epsilon(1e-14));
    }
  }
  SUBCASE("knot values reproduced to machine precision") {
    VecX y(7);
    for (int i = 0; i < 7; ++i) y(i) = unit_rand();
    const CubicSpline s(y, 3.5);
    for (int i = 0; i < 7; ++i) {
      CHECK(std::abs(s(i * 3.5 / 6.0) - y(i)) < 1e-13);
    }
  }
  SUBCASE("seven knots track a sine to within 1 percent of amplitude") {
    const double T = 2.0;
    VecX y(7);
    for (int i = 0; i < 7; ++i) y(i) = std::sin(M_PI * (i * T / 6.0) / T);
    const CubicSpline s(y, T);
    double worst = 0;
    for (int k = 0; k <= 1000; ++k) {
      const double t = k * T / 1000.0;
      worst = std::max(worst, std::abs(s(t) - std::sin(M_PI * t / T)));
    }
    CHECK(worst <= 1e-2);
  }
  SUBCASE("interior second differences are continuous (C2)") {
    VecX y(7);
    for (int i = 0; i < 7; ++i) y(i) = unit_rand();
    const CubicSpline s(y, 1.0);
    const double eps = 1e-4;
    // Sample the second difference on both sides of each interior knot.
    for (int i = 1; i < 6; ++i) {
      const double t = i / 6.0;
      auto sd = [&](double tc) {
        return (s(tc + eps) - 2.0 * s(tc) + s(tc - eps)) / (eps * eps);
      };
      CHECK(std::abs(sd(t - 2 * eps) - sd(t + 2 * eps)) < 1e-2 * std::max(1.0, std::abs(sd(t))));
    }
  }
}

TEST_CASE("control schedule evaluation and cost identities") {
  const int steps = 50;
  const double h = 0.02;
  SUBCASE("all-zero knots give identically zero control and zero cost") {
    const ControlSchedule u(MatX::Zero(2, 7), steps, h);
    for (int k = 0; k < steps; ++k) CHECK(u.at_step(k).norm() == 0.0);
    CHECK(schedule_cost(u) == 0.0);
  }
  SUBCASE("doubling the knots exactly quadruples the cost") {
    MatX knots(2, 7);
    for (int i = 0; i < knots.size(); ++i) knots(i / 7, i % 7) = unit_rand();
    const double c1 = schedule_cost(ControlSchedule(knots, steps, h));
    const double c2 = schedule_cost(ControlSchedule(MatX(2.0 * knots), steps, h));
    CHECK(c2 == 4.0 * c1);
  }
  SUBCASE("constant control has the closed-form cost N h c^2 / 2") {
    const double c = 1.7;
    const ControlSchedule u(MatX::Constant(1, 7, c), steps, h);
    CHECK(schedule_cost(u) == doctest::Approx(steps * h * c * c / 2.0).epsilon(1e-12));
  }
  SUBCASE("deterministic: identical schedule gives bit-identical cost") {
    MatX knots(3, 7);
    for (int i = 0; i < knots.size(); ++i) knots(i / 7, i % 7) = unit_rand();
    const ControlSchedule a(knots, steps, h), b(knots, steps, h);
    CHECK(schedule_cost(a) == schedule_cost(b));
    CHECK((a.step_values() - b.step_values()).norm() == 0.0);
  }
}

TEST_CASE("cost gradient: reverse accumulation matches finite differences") {
  const int steps = 40, nk = 7, nc = 2;
  const double h = 0.01;
  MatX knots(nc, nk);
  for (int i = 0; i < knots.size(); ++i) knots(i / nk, i % nk) = unit_rand();
  const VecX g = schedule_cost_gradient(knots, steps, h);
  const double eps = 1e-6;
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < nk; ++i) {
      MatX kp = knots, km = knots;
      kp(c, i) += eps;
      km(c, i) -= eps;
      const double fd = (schedule_cost(ControlSchedule(kp, steps, h)) -
                         schedule_cost(ControlSchedule(km, steps, h))) /
                        (2 * eps);
      CHECK(std::abs(fd - g(c * nk + i)) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("constraint layouts") {
  CHECK(cart_constraint_rows().size() == 10);
  CHECK(connected_constraint_rows().size() == 9);
  // Dropped rows are exactly the terminal Omega2 block.
  for (int r : connected_constraint_rows()) CHECK(r < 9);
}

TEST_CASE("connected bodies conserve total angular momentum for any control") {
  ConnectedScenario sc = connected_rotation();
  sc.steps = 60;
  MatX knots(3, 7);
  for (int i = 0; i < knots.size(); ++i) knots(i / 7, i % 7) = 0.3 * unit_rand();
  const ControlSchedule u(knots, sc.steps, sc.h);
  const auto traj = propagate_connected_schedule(sc, u);
  const Vec3 mom0 = total_angular_momentum(traj.front(), sc.params);
  CHECK(mom0.norm() < 1e-12);  // starts at rest
  for (const auto& s : traj) {
    CHECK((total_angular_momentum(s, sc.params) - mom0).norm() < 1e-11);
  }
}

TEST_CASE("zero-control residual equals the uncontrolled terminal error") {
  CartPendulumScenario sc = cart_pendulum_swing();
  sc.steps = 40;
  const ControlSchedule u(MatX::Zero(2, 7), sc.steps, sc.h);
  const auto traj = propagate_cart_schedule(sc, u);
  CartPendulumState s = sc.initial;
  for (int k = 0; k < sc.steps; ++k) s = step_cart_pendulum(s, Vec2::Zero(), sc.params, sc.h);
  CHECK((cart_terminal_residual(traj.back(), sc) - cart_terminal_residual(s, sc)).norm() ==
        0.0);
}

TEST_CASE("direct solver returns the zero schedule when free flow already suffices") {
  CartPendulumScenario sc = cart_pendulum_swing();
  sc.steps = 30;
  const ControlSchedule zero(MatX::Zero(2, 7), sc.steps, sc.h);
  const auto traj = propagate_cart_schedule(sc, zero);
  sc.terminal = traj.back();
  const auto res = solve_direct_cart(sc);
  CHECK(res.converged);
  CHECK(res.cost == 0.0);
  CHECK(res.knot_values.norm() == 0.0);
  CHECK(res.violation < 1e-10);
}

TEST_CASE("direct solver reaches a nearby reachable cart target") {
  // Target manufactured from a known schedule so feasibility is guaranteed;
  // the solver must find some feasible stationary point, not necessarily the
  // generating schedule.
  CartPendulumScenario sc = cart_pendulum_swing();
  sc.steps = 40;
  MatX gen = MatX::Zero(2, 7);
  gen(0, 2) = 0.4;
  gen(1, 4) = -0.3;
  const auto traj = propagate_cart_schedule(sc, ControlSchedule(gen, sc.steps, sc.h));
  sc.terminal = traj.back();
  NlpOptions opt;
  const auto res = solve_direct_cart(sc, opt);
  CHECK(res.converged);
  CHECK(res.violation <= 1e-6);
  CHECK(res.history.back().stationarity <= 1e-6);
  // The reported violation is the re-propagated residual of the final schedule.
  const auto re = propagate_cart_schedule(sc, res.schedule);
  CHECK(std::abs(cart_terminal_residual(re.back(), sc).norm() - res.violation) < 1e-15);
}
