#ifndef LGVI_CONFIG_HPP
#define LGVI_CONFIG_HPP

#include <string>
#include <vector>

#include "lgvi/scenarios.hpp"

// Scenario configuration for the batch front end. Configs are JSON files that
// start from one of the bundled maneuvers (or a bare model) and override
// fields; rotations are entered as 9 row-major entries or as an axis-angle
// vector, validated on load with at most 1e-9 of re-orthogonalization slack.

namespace lgvi {

struct ScenarioConfig {
  std::string model;   // dumbbell | pendulum | cart-pendulum | connected
  std::string solver = "simulate";  // simulate | indirect | direct

  // Exactly one of these is active, selected by `model`.
  PendulumScenario pendulum;
  DumbbellScenario dumbbell;
  CartPendulumScenario cart;
  ConnectedScenario connected;

  unsigned long seed = 0;
  double tol = -1;    // negative: solver default
  int max_iter = -1;  // negative: solver default
  int knots = 7;      // direct solver knot count per component
  VecX lambda0;       // indirect initial multiplier guess (empty: zero)
  double guess_scale = 0;  // scale of the seeded random guess when lambda0 empty
  std::string out_dir = "out";
};

/// Names of the bundled reference maneuvers usable as a config base.
std::vector<std::string> bundled_scenarios();

/// Parse and fully validate a config file. Throws ConfigError on any problem;
/// nothing is written to disk.
ScenarioConfig load_config(const std::string& path);

/// Run every validation check without solving; returns one message per
/// violated invariant (empty means the config is valid).
std::vector<std::string> verify_config(const std::string& path);

}  // namespace lgvi

#endif
