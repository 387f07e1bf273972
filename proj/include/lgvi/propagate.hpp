#ifndef LGVI_PROPAGATE_HPP
#define LGVI_PROPAGATE_HPP

#include <functional>
#include <vector>

#include "lgvi/steppers.hpp"

// Model wrappers with a uniform interface (state, control vector, step,
// diagnostics) plus dense trajectory propagation.

namespace lgvi {

struct StepDiagnostics {
  double energy = 0;
  Vec3 momentum = Vec3::Zero();  // model-specific conserved quantity (see models)
  double ortho_defect = 0;
  int inner_iterations = 0;
};

/// Control sample for the step k -> k+1 (the paper's u_{k+1}), as a flat vector.
using ControlSampler = std::function<VecX(int step)>;

inline ControlSampler zero_controls(int dim) {
  return [dim](int) { return VecX(VecX::Zero(dim)); };
}

struct DumbbellModel {
  using State = DumbbellState;
  static constexpr int control_dim = 6;
  static constexpr int state_dim = 12;  // variation coordinates
  DumbbellParams params = default_dumbbell_params();

  State step(const State& s, const VecX& u, double h, StepDiagnostics* d = nullptr) const {
    AttitudeSolveStats st;
    DumbbellControl c{u.head<3>(), u.tail<3>()};
    const State out = step_dumbbell(s, c, params, h, &st);
    if (d) {
      d->energy = dumbbell_energy(out, params);
      d->momentum = dumbbell_spatial_momentum(out, params);
      d->ortho_defect = out.r.orthogonality_defect();
      d->inner_iterations = st.iterations;
    }
    return out;
  }
};

struct PendulumModel {
  using State = PendulumState;
  static constexpr int control_dim = 3;
  static constexpr int state_dim = 6;
  PendulumParams params;

  State step(const State& s, const VecX& u, double h, StepDiagnostics* d = nullptr) const {
    AttitudeSolveStats st;
    const State out = step_pendulum(s, Vec3(u), params, h, &st);
    if (d) {
      d->energy = pendulum_energy(out, params);
      d->momentum = Vec3(0, 0, vertical_momentum(out, params));
      d->ortho_defect = out.r.orthogonality_defect();
      d->inner_iterations = st.iterations;
    }
    return out;
  }
};

struct CartPendulumModel {
  using State = CartPendulumState;
  static constexpr int control_dim = 2;
  static constexpr int state_dim = 10;
  CartPendulumParams params;

  State step(const State& s, const VecX& u, double h, StepDiagnostics* d = nullptr) const {
    AttitudeSolveStats st;
    int sweeps = 0;
    const State out = step_cart_pendulum(s, Vec2(u), params, h, &st, &sweeps);
    if (d) {
      d->energy = cart_pendulum_energy(out, params);
      d->momentum = Vec3::Zero();
      d->ortho_defect = out.r.orthogonality_defect();
      d->inner_iterations = sweeps;
    }
    return out;
  }
};

struct ConnectedModel {
  using State = ConnectedState;
  static constexpr int control_dim = 3;
  static constexpr int state_dim = 12;
  ConnectedParams params;

  State step(const State& s, const VecX& u, double h, StepDiagnostics* d = nullptr) const {
    int iters = 0;
    const State out = step_connected(s, Vec3(u), params, h, &iters);
    if (d) {
      d->energy = connected_energy(out, params);
      d->momentum = total_angular_momentum(out, params);
      d->ortho_defect = std::max(out.r1.orthogonality_defect(), out.r2.orthogonality_defect());
      d->inner_iterations = iters;
    }
    return out;
  }
};

template <class Model>
struct Trajectory {
  std::vector<typename Model::State> states;          // N + 1 entries
  std::vector<VecX> controls;                         // N entries, u_{k+1} at index k
  std::vector<StepDiagnostics> diagnostics;           // N entries
};

template <class Model>
Trajectory<Model> propagate(const Model& model, const typename Model::State& s0,
                            const ControlSampler& controls, int steps, double h) {
  if (steps < 1) throw Error("propagate: step count must be at least 1");
  if (!(h > 0)) throw Error("propagate: timestep must be positive");
  Trajectory<Model> traj;
  traj.states.reserve(steps + 1);
  traj.controls.reserve(steps);
  traj.diagnostics.reserve(steps);
  traj.states.push_back(s0);
  for (int k = 0; k < steps; ++k) {
    const VecX u = controls ? controls(k) : VecX::Zero(Model::control_dim);
    StepDiagnostics d;
    try {
      traj.states.push_back(model.step(traj.states.back(), u, h, &d));
    } catch (const Error& e) {
      throw Error("step " + std::to_string(k) + ": " + e.what());
    }
    traj.controls.push_back(u);
    traj.diagnostics.push_back(d);
  }
  return traj;
}

}  // namespace lgvi

#endif
