#include <doctest.h>

#include <random>

#include "lgvi/propagate.hpp"
#include "lgvi/scenarios.hpp"

using namespace lgvi;

namespace {

std::mt19937_64 rng(99001122);

Vec3 random_vec(double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

Rotation random_rotation(double scale = 2.0) {
  return Rotation::trusted(exp_so3(random_vec(scale)));
}

double attitude_distance(const Rotation& a, const Rotation& b) {
  return log_so3(Mat3(a.matrix().transpose() * b.matrix())).norm();
}

}  // namespace

TEST_CASE("force-free dumbbell conserves spatial momentum exactly") {
  DumbbellScenario sc = dumbbell_orbit_transfer();
  DumbbellModel model;
  model.params = sc.params;
  model.params.gm = 0;
  const auto traj = propagate(model, sc.initial, zero_controls(6), 10000, sc.h);
  const Vec3 p0 = dumbbell_spatial_momentum(sc.initial, model.params);
  double max_mom = 0, max_ortho = 0;
  for (const auto& d : traj.diagnostics) {
    max_mom = std::max(max_mom, (d.momentum - p0).norm());
    max_ortho = std::max(max_ortho, d.ortho_defect);
  }
  CHECK(max_mom < 1e-12 * std::max(1.0, p0.norm()));
  CHECK(max_ortho < 1e-13);
}

TEST_CASE("orbiting dumbbell energy is bounded with no secular drift") {
  const DumbbellScenario sc = dumbbell_orbit_transfer();
  DumbbellModel model;
  model.params = sc.params;
  const auto traj = propagate(model, sc.initial, zero_controls(6), 2000, sc.h);
  const double e0 = dumbbell_energy(sc.initial, sc.params);
  const int n = static_cast<int>(traj.diagnostics.size());
  double max_en = 0, sk = 0, ske = 0;
  for (int k = 0; k < n; ++k) {
    const double de = traj.diagnostics[k].energy - e0;
    max_en = std::max(max_en, std::abs(de));
    const double kc = k - 0.5 * (n - 1);
    sk += kc * kc;
    ske += kc * de;
  }
  CHECK(max_en < 1e-3);
  CHECK(std::abs(ske / sk) < 1e-7);
}

TEST_CASE("uncontrolled pendulum preserves structure") {
  PendulumModel model;
  PendulumState s0{random_rotation(), random_vec(2.0)};
  const auto traj = propagate(model, s0, zero_controls(3), 10000, 0.001);
  const double e0 = pendulum_energy(s0, model.params);
  const double pz0 = vertical_momentum(s0, model.params);
  double max_en = 0, max_pz = 0, max_ortho = 0;
  double sk = 0, ske = 0;  // least-squares accumulators for energy slope
  const int n = static_cast<int>(traj.diagnostics.size());
  for (int k = 0; k < n; ++k) {
    const auto& d = traj.diagnostics[k];
    max_en = std::max(max_en, std::abs(d.energy - e0));
    max_pz = std::max(max_pz, std::abs(d.momentum(2) - pz0));
    max_ortho = std::max(max_ortho, d.ortho_defect);
    const double kc = k - 0.5 * (n - 1);
    sk += kc * kc;
    ske += kc * (d.energy - e0);
  }
  CHECK(max_pz < 1e-12);
  CHECK(max_en < 0.05);                // bounded oscillation
  CHECK(std::abs(ske / sk) < 1e-6);    // no secular drift per step
  CHECK(max_ortho < 1e-13);
}

TEST_CASE("controlled pendulum still conserves vertical momentum exactly") {
  PendulumModel model;
  PendulumState s{random_rotation(), random_vec(1.0)};
  const double pz0 = vertical_momentum(s, model.params);
  for (int k = 0; k < 500; ++k) {
    s = model.step(s, VecX(random_vec(10.0)), 0.001);
    CHECK(std::abs(vertical_momentum(s, model.params) - pz0) < 1e-12);
  }
}

TEST_CASE("pendulum at hanging equilibrium stays put") {
  PendulumModel model;
  PendulumState s{Rotation::from_matrix(Mat3::Identity()), Vec3::Zero()};
  for (int k = 0; k < 100; ++k) s = model.step(s, VecX(VecX::Zero(3)), 0.01);
  CHECK(attitude_distance(s.r, Rotation::from_matrix(Mat3::Identity())) < 1e-14);
  CHECK(s.omega.norm() < 1e-14);
}

TEST_CASE("pendulum stepper is second-order accurate") {
  // Richardson: for a second-order method the error against a fine reference
  // scales as h^2, so err(h) / err(h/2) -> 4.
  PendulumModel model;
  model.params.g = 0;  // free body about the pivot: the self-adjoint case
  const PendulumState s0{random_rotation(1.0), random_vec(1.5)};
  const double T = 0.5;
  auto endpoint = [&](double h) {
    PendulumState s = s0;
    const int n = static_cast<int>(std::round(T / h));
    for (int k = 0; k < n; ++k) s = model.step(s, VecX(VecX::Zero(3)), h);
    return s;
  };
  const PendulumState ref = endpoint(1.0 / 65536.0);
  std::vector<double> errs;
  for (double h : {1.0 / 256.0, 1.0 / 512.0, 1.0 / 1024.0}) {
    const PendulumState s = endpoint(h);
    errs.push_back(attitude_distance(s.r, ref.r) + (s.omega - ref.omega).norm());
  }
  for (size_t i = 0; i + 1 < errs.size(); ++i) {
    const double order = std::log2(errs[i] / errs[i + 1]);
    CHECK(order == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("dumbbell stepper is second-order accurate") {
  DumbbellModel model;
  model.params.gm = 0;  // free body on SE(3): the self-adjoint case
  DumbbellState s0;
  s0.r = random_rotation(1.0);
  s0.x = Vec3(1, 0, 0);
  s0.omega = Vec3(0.2, -0.1, 0.9835);
  s0.v = Vec3(0, 0.9835, 0.05);
  const double T = 0.5;  // integer multiple of every h used below
  auto endpoint = [&](double h) {
    DumbbellState s = s0;
    const int n = static_cast<int>(std::round(T / h));
    for (int k = 0; k < n; ++k) s = model.step(s, VecX(VecX::Zero(6)), h);
    return s;
  };
  const DumbbellState ref = endpoint(1.0 / 32768.0);
  std::vector<double> errs;
  for (double h : {1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0}) {
    const DumbbellState s = endpoint(h);
    errs.push_back(attitude_distance(s.r, ref.r) + (s.x - ref.x).norm() +
                   (s.omega - ref.omega).norm() + (s.v - ref.v).norm());
  }
  for (size_t i = 0; i + 1 < errs.size(); ++i) {
    CHECK(std::log2(errs[i] / errs[i + 1]) == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("circular orbit of a balanced dumbbell stays circular") {
  // Spin-locked configuration: attitude tracks the orbit at the orbital rate.
  const DumbbellScenario sc = dumbbell_orbit_transfer();
  DumbbellModel model;
  model.params = sc.params;
  const auto traj = propagate(model, sc.initial, zero_controls(6), sc.steps, sc.h);
  for (const auto& s : traj.states) {
    CHECK(s.x.norm() == doctest::Approx(1.0).epsilon(5e-3));
  }
}

TEST_CASE("uncontrolled cart-pendulum conserves energy without drift") {
  CartPendulumModel model;
  CartPendulumState s0;
  s0.r = Rotation::trusted(exp_so3(Vec3(0.4, 0.3, 0.1)));
  s0.omega = Vec3(0.3, -0.2, 0.1);
  const auto traj = propagate(model, s0, zero_controls(2), 2000, 0.01);
  const double e0 = cart_pendulum_energy(s0, model.params);
  double max_en = 0, max_ortho = 0;
  for (const auto& d : traj.diagnostics) {
    max_en = std::max(max_en, std::abs(d.energy - e0));
    max_ortho = std::max(max_ortho, d.ortho_defect);
  }
  CHECK(max_en < 1e-3);  // bounded oscillation
  CHECK(max_ortho < 1e-12);
}

TEST_CASE("cart-pendulum hanging equilibrium is stationary") {
  CartPendulumModel model;
  CartPendulumState s;
  s.r = Rotation::trusted(Vec3(-1, 1, -1).asDiagonal().toDenseMatrix());  // d pointing down
  for (int k = 0; k < 200; ++k) s = model.step(s, VecX(VecX::Zero(2)), 0.01);
  CHECK(std::abs(s.x) + std::abs(s.y) < 1e-12);
  CHECK(s.omega.norm() < 1e-12);
}

TEST_CASE("free connected bodies conserve total angular momentum and energy") {
  ConnectedModel model;
  ConnectedState s0;
  s0.r1 = random_rotation();
  s0.r2 = random_rotation();
  s0.omega1 = random_vec(0.5);
  s0.omega2 = random_vec(0.5);
  const auto traj = propagate(model, s0, zero_controls(3), 2000, 0.01);
  const Vec3 pi0 = total_angular_momentum(s0, model.params);
  const double e0 = connected_energy(s0, model.params);
  double max_mom = 0, max_en = 0, max_ortho = 0;
  for (const auto& d : traj.diagnostics) {
    max_mom = std::max(max_mom, (d.momentum - pi0).norm());
    max_en = std::max(max_en, std::abs(d.energy - e0));
    max_ortho = std::max(max_ortho, d.ortho_defect);
  }
  CHECK(max_mom < 1e-11);
  CHECK(max_en < 1e-3);
  CHECK(max_ortho < 1e-12);
}

TEST_CASE("connected stepper is second-order accurate") {
  ConnectedModel model;
  ConnectedState s0;
  s0.r1 = Rotation::trusted(exp_so3(Vec3(0.2, 0.1, -0.3)));
  s0.r2 = Rotation::trusted(exp_so3(Vec3(-0.1, 0.4, 0.2)));
  s0.omega1 = Vec3(0.4, -0.2, 0.3);
  s0.omega2 = Vec3(-0.1, 0.3, 0.2);
  const double T = 0.5;
  auto endpoint = [&](double h) {
    ConnectedState s = s0;
    const int n = static_cast<int>(std::round(T / h));
    for (int k = 0; k < n; ++k) s = model.step(s, VecX(VecX::Zero(3)), h);
    return s;
  };
  const ConnectedState ref = endpoint(1.0 / 32768.0);
  std::vector<double> errs;
  for (double h : {1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0}) {
    const ConnectedState s = endpoint(h);
    errs.push_back(attitude_distance(s.r1, ref.r1) + attitude_distance(s.r2, ref.r2) +
                   (s.omega1 - ref.omega1).norm() + (s.omega2 - ref.omega2).norm());
  }
  for (size_t i = 0; i + 1 < errs.size(); ++i) {
    CHECK(std::log2(errs[i] / errs[i + 1]) == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("propagate validates its arguments and reports the failing step") {
  PendulumModel model;
  PendulumState s0{Rotation::from_matrix(Mat3::Identity()), Vec3::Zero()};
  CHECK_THROWS(propagate(model, s0, zero_controls(3), 0, 0.01));
  CHECK_THROWS(propagate(model, s0, zero_controls(3), 10, -0.01));
}
