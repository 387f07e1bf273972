#ifndef LGVI_SCENARIOS_HPP
#define LGVI_SCENARIOS_HPP

#include <cmath>
#include <string>

#include "lgvi/propagate.hpp"

// Canonical maneuver definitions for the four reference problems.

namespace lgvi {

struct DumbbellScenario {
  DumbbellParams params = default_dumbbell_params();
  DumbbellState initial;
  DumbbellState terminal;
  int steps = 160;
  double h = 0;
  Mat3 wf = Mat3::Identity();
  Mat3 wm = Mat3::Identity();
};

struct PendulumScenario {
  PendulumParams params;
  PendulumState initial;
  PendulumState terminal;
  int steps = 1000;
  double h = 0.001;
};

struct CartPendulumScenario {
  CartPendulumParams params;
  CartPendulumState initial;
  CartPendulumState terminal;
  int steps = 200;
  double h = 0.01;
};

struct ConnectedScenario {
  ConnectedParams params;
  ConnectedState initial;
  ConnectedState terminal;
  int steps = 400;
  double h = 0.01;
};

/// Orbit-inclination transfer of a dumbbell spacecraft in a central gravity
/// field. The maneuver time is a quarter of the initial circular orbit period;
/// boundary attitudes rotate the body tangentially along the inclined orbit.
inline DumbbellScenario dumbbell_orbit_transfer() {
  DumbbellScenario s;
  const double omega_c = 0.9835;  // circular orbit rate at radius 1
  s.initial.x = Vec3(1, 0, 0);
  s.initial.v = Vec3(0, omega_c, 0);
  s.initial.omega = Vec3(0, 0, omega_c);
  Mat3 r0;
  r0 << 0, -1, 0,
        1, 0, 0,
        0, 0, 1;
  s.initial.r = Rotation::from_matrix(r0);
  s.terminal.x = Vec3(-0.3536, 0.3536, 0.8660);
  s.terminal.v = Vec3(-0.6954, -0.6954, 0);
  s.terminal.omega = Vec3(0, 0, omega_c);
  Mat3 rf;
  rf << -0.7071, 0.3535, 0.6123,
        -0.7071, -0.3535, -0.6123,
        0, -0.8660, 0.5;
  // The published terminal attitude is rounded to 4 digits; project it back
  // onto SO(3) before use.
  Eigen::JacobiSVD<Mat3> svd(rf, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 proj = svd.matrixU() * svd.matrixV().transpose();
  if (proj.determinant() < 0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1;
    proj = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  s.terminal.r = Rotation::from_matrix(proj);
  s.steps = 160;
  s.h = (0.5 * M_PI / omega_c) / s.steps;  // quarter orbit period / N
  // The dumbbell inertia is tiny (two small spheres), so an unscaled moment
  // weight makes the attitude hyper-sensitive to the moment multiplier and the
  // shooting problem hopelessly stiff. Scaling the weight to the inertia gives
  // force and moment terms comparable influence on the cost.
  s.wm = (1.0 / s.params.j.trace()) * Mat3::Identity();
  return s;
}

/// Rest-to-rest 180 degree reorientation of the underactuated 3D pendulum
/// about the unactuated vertical axis.
inline PendulumScenario pendulum_reorientation() {
  PendulumScenario s;
  s.initial.r = Rotation::from_matrix(Mat3::Identity());
  s.initial.omega = Vec3::Zero();
  s.terminal.r = Rotation::from_matrix(Vec3(-1, -1, 1).asDiagonal().toDenseMatrix());
  s.terminal.omega = Vec3::Zero();
  s.steps = 1000;
  s.h = 0.001;
  return s;
}

/// Rest-to-rest 180 degree rotation of a pendulum on a planar cart, with the
/// cart returning to its initial location.
inline CartPendulumScenario cart_pendulum_swing() {
  CartPendulumScenario s;
  s.initial.r = Rotation::from_matrix(Mat3::Identity());
  s.terminal.r = Rotation::from_matrix(Vec3(-1, -1, 1).asDiagonal().toDenseMatrix());
  s.steps = 200;
  s.h = 0.01;
  return s;
}

/// Rest-to-rest 180 degree rotation of two joint-connected rigid bodies about
/// the x axis.
inline ConnectedScenario connected_rotation() {
  ConnectedScenario s;
  const Mat3 rf = Vec3(1, -1, -1).asDiagonal().toDenseMatrix();
  s.initial.r1 = Rotation::from_matrix(Mat3::Identity());
  s.initial.r2 = Rotation::from_matrix(Mat3::Identity());
  s.terminal.r1 = Rotation::from_matrix(rf);
  s.terminal.r2 = Rotation::from_matrix(rf);
  s.steps = 400;
  s.h = 0.01;
  return s;
}

}  // namespace lgvi

#endif
