#include "lgvi/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace lgvi {

namespace {

using nlohmann::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return j;
}

Vec3 parse_vec3(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(name + " must be an array of 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ConfigError(name + " must contain numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

Mat3 parse_mat3(const json& j, const std::string& name) {
  if (j.is_array() && j.size() == 3) {
    return parse_vec3(j, name).asDiagonal();
  }
  if (!j.is_array() || j.size() != 9) {
    throw ConfigError(name + " must be 9 row-major entries or a 3-entry diagonal");
  }
  Mat3 m;
  for (int i = 0; i < 9; ++i) {
    if (!j[i].is_number()) throw ConfigError(name + " must contain numbers");
    m(i / 3, i % 3) = j[i].get<double>();
  }
  return m;
}

/// Rotations may be given as 9 row-major entries (validated, with at most
/// 1e-9 of re-orthogonalization slack) or as an axis-angle vector.
Rotation parse_rotation(const json& j, const std::string& name) {
  if (j.is_object() && j.contains("axis_angle")) {
    return Rotation::trusted(exp_so3(parse_vec3(j["axis_angle"], name + ".axis_angle")));
  }
  const Mat3 m = parse_mat3(j, name);
  const double defect = (m.transpose() * m - Mat3::Identity()).norm();
  if (!(defect <= 1e-9) || m.determinant() < 0) {
    throw ConfigError(name + " is not a rotation matrix (orthogonality defect " +
                      std::to_string(defect) + ", det " +
                      std::to_string(m.determinant()) + ")");
  }
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return Rotation::from_matrix(Mat3(svd.matrixU() * svd.matrixV().transpose()));
}

void require_spd_config(const Mat3& m, const std::string& name) {
  if ((m - m.transpose()).norm() > kSkewTol) {
    throw ConfigError(name + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  if (es.eigenvalues().minCoeff() <= 0) {
    throw ConfigError(name + " must be positive-definite");
  }
}

ScenarioConfig base_from_scenario(const std::string& name) {
  ScenarioConfig c;
  if (name == "pendulum-reorientation") {
    c.model = "pendulum";
    c.pendulum = pendulum_reorientation();
    c.solver = "indirect";
  } else if (name == "dumbbell-orbit-transfer") {
    c.model = "dumbbell";
    c.dumbbell = dumbbell_orbit_transfer();
    c.solver = "indirect";
  } else if (name == "cart-pendulum-swing") {
    c.model = "cart-pendulum";
    c.cart = cart_pendulum_swing();
    c.solver = "direct";
  } else if (name == "connected-rotation") {
    c.model = "connected";
    c.connected = connected_rotation();
    c.solver = "direct";
  } else {
    throw ConfigError("unknown bundled scenario: " + name);
  }
  return c;
}

void apply_state(const json& j, const std::string& who, const std::string& model,
                 ScenarioConfig* c) {
  if (model == "pendulum") {
    auto& s = who == "initial" ? c->pendulum.initial : c->pendulum.terminal;
    if (j.contains("r")) s.r = parse_rotation(j["r"], who + ".r");
    if (j.contains("omega")) s.omega = parse_vec3(j["omega"], who + ".omega");
  } else if (model == "dumbbell") {
    auto& s = who == "initial" ? c->dumbbell.initial : c->dumbbell.terminal;
    if (j.contains("r")) s.r = parse_rotation(j["r"], who + ".r");
    if (j.contains("x")) s.x = parse_vec3(j["x"], who + ".x");
    if (j.contains("omega")) s.omega = parse_vec3(j["omega"], who + ".omega");
    if (j.contains("v")) s.v = parse_vec3(j["v"], who + ".v");
  } else if (model == "cart-pendulum") {
    auto& s = who == "initial" ? c->cart.initial : c->cart.terminal;
    if (j.contains("r")) s.r = parse_rotation(j["r"], who + ".r");
    if (j.contains("x")) s.x = j["x"].get<double>();
    if (j.contains("y")) s.y = j["y"].get<double>();
    if (j.contains("omega")) s.omega = parse_vec3(j["omega"], who + ".omega");
    if (j.contains("xdot")) s.xdot = j["xdot"].get<double>();
    if (j.contains("ydot")) s.ydot = j["ydot"].get<double>();
  } else if (model == "connected") {
    auto& s = who == "initial" ? c->connected.initial : c->connected.terminal;
    if (j.contains("r1")) s.r1 = parse_rotation(j["r1"], who + ".r1");
    if (j.contains("r2")) s.r2 = parse_rotation(j["r2"], who + ".r2");
    if (j.contains("omega1")) s.omega1 = parse_vec3(j["omega1"], who + ".omega1");
    if (j.contains("omega2")) s.omega2 = parse_vec3(j["omega2"], who + ".omega2");
  }
}

void apply_params(const json& j, ScenarioConfig* c) {
  const std::string& model = c->model;
  if (model == "pendulum") {
    auto& p = c->pendulum.params;
    if (j.contains("m")) p.m = j["m"].get<double>();
    if (j.contains("j")) p.j = parse_mat3(j["j"], "params.j");
    if (j.contains("rho")) p.rho = parse_vec3(j["rho"], "params.rho");
    if (j.contains("g")) p.g = j["g"].get<double>();
    if (j.contains("w")) p.w = parse_mat3(j["w"], "params.w");
  } else if (model == "dumbbell") {
    auto& p = c->dumbbell.params;
    if (j.contains("gm")) p.gm = j["gm"].get<double>();
    if (j.contains("m")) p.m = j["m"].get<double>();
    if (j.contains("j")) p.j = parse_mat3(j["j"], "params.j");
    if (j.contains("rho1")) p.rho1 = parse_vec3(j["rho1"], "params.rho1");
    if (j.contains("rho2")) p.rho2 = parse_vec3(j["rho2"], "params.rho2");
    if (j.contains("wf")) c->dumbbell.wf = parse_mat3(j["wf"], "params.wf");
    if (j.contains("wm")) c->dumbbell.wm = parse_mat3(j["wm"], "params.wm");
  } else if (model == "cart-pendulum") {
    auto& p = c->cart.params;
    if (j.contains("cart_mass")) p.cart_mass = j["cart_mass"].get<double>();
    if (j.contains("m")) p.m = j["m"].get<double>();
    if (j.contains("j")) p.j = parse_mat3(j["j"], "params.j");
    if (j.contains("d")) p.d = parse_vec3(j["d"], "params.d");
    if (j.contains("g")) p.g = j["g"].get<double>();
  } else if (model == "connected") {
    auto& p = c->connected.params;
    if (j.contains("m1")) p.m1 = j["m1"].get<double>();
    if (j.contains("m2")) p.m2 = j["m2"].get<double>();
    if (j.contains("j1")) p.j1 = parse_mat3(j["j1"], "params.j1");
    if (j.contains("j2")) p.j2 = parse_mat3(j["j2"], "params.j2");
    if (j.contains("d1")) p.d1 = parse_vec3(j["d1"], "params.d1");
    if (j.contains("d2")) p.d2 = parse_vec3(j["d2"], "params.d2");
    if (j.contains("w")) p.w = parse_mat3(j["w"], "params.w");
  }
}

void check_invariants(const ScenarioConfig& c, const json& j,
                      std::vector<std::string>* errors) {
  auto note = [&](const std::string& msg) {
    if (errors) {
      errors->push_back(msg);
    } else {
      throw ConfigError(msg);
    }
  };

  static const std::vector<std::string> kModels = {"dumbbell", "pendulum",
                                                   "cart-pendulum", "connected"};
  if (std::find(kModels.begin(), kModels.end(), c.model) == kModels.end()) {
    note("unknown model id: " + c.model);
    return;
  }
  if (c.solver != "simulate" && c.solver != "indirect" && c.solver != "direct") {
    note("unknown solver: " + c.solver);
  }
  if ((c.solver == "indirect") &&
      (c.model == "cart-pendulum" || c.model == "connected")) {
    note("indirect solver supports the dumbbell and pendulum models only");
  }
  if ((c.solver == "direct") && (c.model == "dumbbell" || c.model == "pendulum")) {
    note("direct solver supports the cart-pendulum and connected models only");
  }

  int steps = 0;
  double h = 0;
  if (c.model == "pendulum") {
    steps = c.pendulum.steps;
    h = c.pendulum.h;
  } else if (c.model == "dumbbell") {
    steps = c.dumbbell.steps;
    h = c.dumbbell.h;
  } else if (c.model == "cart-pendulum") {
    steps = c.cart.steps;
    h = c.cart.h;
  } else {
    steps = c.connected.steps;
    h = c.connected.h;
  }
  if (!(h > 0)) note("time step h must be positive");
  if (steps < 1) note("step count must be at least 1");
  if (j.contains("T")) {
    const double t = j["T"].get<double>();
    if (h > 0 && std::abs(t - steps * h) > 1e-9 * std::max(1.0, std::abs(t))) {
      note("T does not equal steps * h (maneuver time must be an integral "
           "number of steps)");
    }
  }

  try {
    if (c.model == "pendulum") {
      c.pendulum.params.validate();
      require_spd_config(c.pendulum.params.w, "control weight W");
    } else if (c.model == "dumbbell") {
      c.dumbbell.params.validate();
      require_spd_config(c.dumbbell.wf, "control weight Wf");
      require_spd_config(c.dumbbell.wm, "control weight Wm");
    } else if (c.model == "cart-pendulum") {
      c.cart.params.validate();
    } else {
      c.connected.params.validate();
      require_spd_config(c.connected.params.w, "control weight W");
    }
  } catch (const Error& e) {
    note(e.what());
  }

  if (c.lambda0.size() != 0) {
    const int want = c.model == "pendulum" ? 6 : 12;
    if (c.model != "pendulum" && c.model != "dumbbell") {
      note("lambda0 only applies to the indirect solver models");
    } else if (c.lambda0.size() != want) {
      note("lambda0 must have " + std::to_string(want) + " entries");
    }
  }
  if (c.knots < 2) note("direct solver needs at least 2 knots per component");
  if (c.tol == 0) note("tolerance must be positive");
  if (j.contains("max_iter") && c.max_iter < 1) note("max_iter must be positive");
}

ScenarioConfig parse(const json& j, std::vector<std::string>* errors) {
  ScenarioConfig c;
  if (j.contains("scenario")) {
    c = base_from_scenario(j["scenario"].get<std::string>());
  }
  if (j.contains("model")) {
    const std::string m = j["model"].get<std::string>();
    if (!c.model.empty() && m != c.model) {
      throw ConfigError("model '" + m + "' conflicts with the bundled scenario's '" +
                        c.model + "'");
    }
    c.model = m;
  }
  if (c.model.empty()) throw ConfigError("config must name a model or a scenario");

  if (j.contains("solver")) c.solver = j["solver"].get<std::string>();
  auto set_steps = [&](int steps, double h, bool has_steps, bool has_h) {
    auto apply = [&](auto& sc) {
      if (has_steps) sc.steps = steps;
      if (has_h) sc.h = h;
    };
    if (c.model == "pendulum") apply(c.pendulum);
    if (c.model == "dumbbell") apply(c.dumbbell);
    if (c.model == "cart-pendulum") apply(c.cart);
    if (c.model == "connected") apply(c.connected);
  };
  set_steps(j.value("steps", 0), j.value("h", 0.0), j.contains("steps"), j.contains("h"));

  if (j.contains("params")) apply_params(j["params"], &c);
  if (j.contains("initial")) apply_state(j["initial"], "initial", c.model, &c);
  if (j.contains("terminal")) apply_state(j["terminal"], "terminal", c.model, &c);

  if (j.contains("seed")) c.seed = j["seed"].get<unsigned long>();
  if (j.contains("tol")) c.tol = j["tol"].get<double>();
  if (j.contains("max_iter")) c.max_iter = j["max_iter"].get<int>();
  if (j.contains("knots")) c.knots = j["knots"].get<int>();
  if (j.contains("guess_scale")) c.guess_scale = j["guess_scale"].get<double>();
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  if (j.contains("lambda0")) {
    const json& l = j["lambda0"];
    if (!l.is_array()) throw ConfigError("lambda0 must be an array");
    c.lambda0.resize(static_cast<int>(l.size()));
    for (int i = 0; i < c.lambda0.size(); ++i) c.lambda0(i) = l[i].get<double>();
  }

  check_invariants(c, j, errors);
  return c;
}

}  // namespace

std::vector<std::string> bundled_scenarios() {
  return {"pendulum-reorientation", "dumbbell-orbit-transfer", "cart-pendulum-swing",
          "connected-rotation"};
}

ScenarioConfig load_config(const std::string& path) {
  return parse(read_json(path), nullptr);
}

std::vector<std::string> verify_config(const std::string& path) {
  std::vector<std::string> errors;
  try {
    parse(read_json(path), &errors);
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  } catch (const json::exception& e) {
    errors.push_back(std::string("config parse error: ") + e.what());
  }
  return errors;
}

}  // namespace lgvi
