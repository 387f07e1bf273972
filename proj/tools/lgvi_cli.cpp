#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgvi/config.hpp"
#include "lgvi/direct.hpp"
#include "lgvi/indirect.hpp"

// Batch front end: run or validate scenario configs and emit trajectory,
// diagnostics, convergence, and summary files. Exit codes: 0 success,
// 2 config error, 3 model error, 4 solver non-convergence.

namespace {

using namespace lgvi;
namespace fs = std::filesystem;

// All numbers are printed with 17 significant digits so a rerun with the same
// config and seed is bit-identical.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Row {
  std::vector<std::string> cells;
  void add(double v) { cells.push_back(fmt(v)); }
  void add(const std::string& s) { cells.push_back(s); }
  void add(const Vec3& v) {
    for (int i = 0; i < 3; ++i) add(v(i));
  }
  void add(const Mat3& m) {  // row-major
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) add(m(i, j));
  }
};

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  Row& row() {
    rows_.emplace_back();
    return rows_.back();
  }
  void write(const fs::path& path) const {
    std::ofstream out(path);
    for (size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << "\n";
    for (const Row& r : rows_) {
      for (size_t i = 0; i < r.cells.size(); ++i) out << (i ? "," : "") << r.cells[i];
      out << "\n";
    }
  }

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

struct RunArtifacts {
  Table trajectory{{}};
  Table diagnostics{{"step", "time", "energy", "momentum_x", "momentum_y",
                     "momentum_z", "ortho_defect"}};
  Table convergence{{"iteration", "violation", "step_length", "cond_solved",
                     "cond_full"}};
  double cost = 0;
  double violation = 0;
  int iterations = 0;
  bool converged = true;
  std::string solver;
};

template <class Result>
void fill_convergence(const Result& res, RunArtifacts* art) {
  for (size_t i = 0; i < res.history.size(); ++i) {
    Row& r = art->convergence.row();
    r.add(static_cast<double>(i));
    r.add(res.history[i].violation);
    r.add(res.history[i].step_length);
    r.add(res.history[i].cond_solved);
    r.add(res.history[i].cond_full);
  }
  art->iterations = static_cast<int>(res.history.size()) - 1;
  art->converged = res.converged;
  art->cost = res.cost;
  art->violation = res.history.empty() ? 0.0 : res.history.back().violation;
}

VecX indirect_guess(const ScenarioConfig& cfg, int dim) {
  if (cfg.lambda0.size() == dim) return cfg.lambda0;
  VecX g = VecX::Zero(dim);
  if (cfg.guess_scale != 0) {
    std::mt19937_64 gen(cfg.seed);
    std::normal_distribution<double> n(0.0, cfg.guess_scale);
    for (int i = 0; i < dim; ++i) g(i) = n(gen);
  }
  return g;
}

ShootingOptions shooting_options(const ScenarioConfig& cfg) {
  ShootingOptions opt;
  if (cfg.tol > 0) opt.tol = cfg.tol;
  if (cfg.max_iter > 0) opt.max_outer = cfg.max_iter;
  return opt;
}

NlpOptions nlp_options(const ScenarioConfig& cfg) {
  NlpOptions opt;
  opt.knots = cfg.knots;
  if (cfg.tol > 0) opt.tol = cfg.tol;
  if (cfg.max_iter > 0) opt.max_iter = cfg.max_iter;
  return opt;
}

RunArtifacts run_pendulum(const ScenarioConfig& cfg) {
  RunArtifacts art;
  const PendulumScenario& sc = cfg.pendulum;
  art.trajectory = Table({"step", "time", "r00", "r01", "r02", "r10", "r11", "r12",
                          "r20", "r21", "r22", "omega_x", "omega_y", "omega_z",
                          "u_x", "u_y", "u_z"});
  std::vector<PendulumState> states;
  std::vector<VecX> controls;
  if (cfg.solver == "indirect") {
    auto res = shoot_pendulum(sc, Vec6(indirect_guess(cfg, 6)), shooting_options(cfg));
    fill_convergence(res, &art);
    states = std::move(res.states);
    controls = std::move(res.controls);
  } else {
    PendulumState s = sc.initial;
    states.push_back(s);
    for (int k = 0; k < sc.steps; ++k) {
      s = step_pendulum(s, Vec3::Zero(), sc.params, sc.h);
      states.push_back(s);
      controls.push_back(VecX::Zero(3));
    }
  }
  for (size_t k = 0; k < states.size(); ++k) {
    Row& r = art.trajectory.row();
    r.add(static_cast<double>(k));
    r.add(k * sc.h);
    r.add(states[k].r.matrix());
    r.add(states[k].omega);
    r.add(k > 0 ? Vec3(controls[k - 1]) : Vec3::Zero());
    Row& d = art.diagnostics.row();
    d.add(static_cast<double>(k));
    d.add(k * sc.h);
    d.add(pendulum_energy(states[k], sc.params));
    d.add(Vec3(0, 0, vertical_momentum(states[k], sc.params)));
    d.add(states[k].r.orthogonality_defect());
  }
  return art;
}

RunArtifacts run_dumbbell(const ScenarioConfig& cfg) {
  RunArtifacts art;
  const DumbbellScenario& sc = cfg.dumbbell;
  art.trajectory = Table({"step", "time", "r00", "r01", "r02", "r10", "r11", "r12",
                          "r20", "r21", "r22", "x_x", "x_y", "x_z", "omega_x",
                          "omega_y", "omega_z", "v_x", "v_y", "v_z", "uf_x", "uf_y",
                          "uf_z", "um_x", "um_y", "um_z"});
  std::vector<DumbbellState> states;
  std::vector<VecX> controls;
  if (cfg.solver == "indirect") {
    auto res = shoot_dumbbell(sc, Vec12(indirect_guess(cfg, 12)), shooting_options(cfg));
    fill_convergence(res, &art);
    states = std::move(res.states);
    controls = std::move(res.controls);
  } else {
    DumbbellState s = sc.initial;
    states.push_back(s);
    for (int k = 0; k < sc.steps; ++k) {
      s = step_dumbbell(s, DumbbellControl{Vec3::Zero(), Vec3::Zero()}, sc.params, sc.h);
      states.push_back(s);
      controls.push_back(VecX::Zero(6));
    }
  }
  for (size_t k = 0; k < states.size(); ++k) {
    const DumbbellState& s = states[k];
    Row& r = art.trajectory.row();
    r.add(static_cast<double>(k));
    r.add(k * sc.h);
    r.add(s.r.matrix());
    r.add(s.x);
    r.add(s.omega);
    r.add(s.v);
    const VecX u = k > 0 ? controls[k - 1] : VecX::Zero(6);
    for (int i = 0; i < 6; ++i) r.add(u(i));
    Row& d = art.diagnostics.row();
    d.add(static_cast<double>(k));
    d.add(k * sc.h);
    d.add(dumbbell_energy(s, sc.params));
    d.add(Vec3(s.x.cross(Vec3(sc.params.m * s.v)) + s.r.matrix() * (sc.params.j * s.omega)));
    d.add(s.r.orthogonality_defect());
  }
  return art;
}

RunArtifacts run_cart(const ScenarioConfig& cfg) {
  RunArtifacts art;
  const CartPendulumScenario& sc = cfg.cart;
  art.trajectory = Table({"step", "time", "r00", "r01", "r02", "r10", "r11", "r12",
                          "r20", "r21", "r22", "x", "y", "omega_x", "omega_y",
                          "omega_z", "xdot", "ydot", "u_x", "u_y"});
  std::vector<CartPendulumState> states;
  std::vector<VecX> controls;
  if (cfg.solver == "direct") {
    auto res = solve_direct_cart(sc, nlp_options(cfg));
    for (size_t i = 0; i < res.history.size(); ++i) {
      Row& r = art.convergence.row();
      r.add(static_cast<double>(i));
      r.add(res.history[i].violation);
      r.add(res.history[i].step_length);
      r.add(res.history[i].stationarity);
      r.add(res.history[i].cost);
    }
    art.iterations = static_cast<int>(res.history.size()) - 1;
    art.converged = res.converged;
    art.cost = res.cost;
    art.violation = res.violation;
    states = std::move(res.states);
    controls = std::move(res.controls);
  } else {
    CartPendulumState s = sc.initial;
    states.push_back(s);
    for (int k = 0; k < sc.steps; ++k) {
      s = step_cart_pendulum(s, Vec2::Zero(), sc.params, sc.h);
      states.push_back(s);
      controls.push_back(VecX::Zero(2));
    }
  }
  for (size_t k = 0; k < states.size(); ++k) {
    const CartPendulumState& s = states[k];
    Row& r = art.trajectory.row();
    r.add(static_cast<double>(k));
    r.add(k * sc.h);
    r.add(s.r.matrix());
    r.add(s.x);
    r.add(s.y);
    r.add(s.omega);
    r.add(s.xdot);
    r.add(s.ydot);
    const VecX u = k > 0 ? controls[k - 1] : VecX::Zero(2);
    r.add(u(0));
    r.add(u(1));
    Row& d = art.diagnostics.row();
    d.add(static_cast<double>(k));
    d.add(k * sc.h);
    d.add(cart_pendulum_energy(s, sc.params));
    d.add(Vec3(Vec3::Zero()));
    d.add(s.r.orthogonality_defect());
  }
  return art;
}

RunArtifacts run_connected(const ScenarioConfig& cfg) {
  RunArtifacts art;
  const ConnectedScenario& sc = cfg.connected;
  std::vector<std::string> head = {"step", "time"};
  for (const char* b : {"a", "b"}) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        head.push_back(std::string("r") + b + std::to_string(i) + std::to_string(j));
  }
  for (const char* n : {"omega1_x", "omega1_y", "omega1_z", "omega2_x", "omega2_y",
                        "omega2_z", "u_x", "u_y", "u_z"}) {
    head.push_back(n);
  }
  art.trajectory = Table(head);
  std::vector<ConnectedState> states;
  std::vector<VecX> controls;
  if (cfg.solver == "direct") {
    auto res = solve_direct_connected(sc, nlp_options(cfg));
    for (size_t i = 0; i < res.history.size(); ++i) {
      Row& r = art.convergence.row();
      r.add(static_cast<double>(i));
      r.add(res.history[i].violation);
      r.add(res.history[i].step_length);
      r.add(res.history[i].stationarity);
      r.add(res.history[i].cost);
    }
    art.iterations = static_cast<int>(res.history.size()) - 1;
    art.converged = res.converged;
    art.cost = res.cost;
    art.violation = res.violation;
    states = std::move(res.states);
    controls = std::move(res.controls);
  } else {
    ConnectedState s = sc.initial;
    states.push_back(s);
    for (int k = 0; k < sc.steps; ++k) {
      s = step_connected(s, Vec3::Zero(), sc.params, sc.h);
      states.push_back(s);
      controls.push_back(VecX::Zero(3));
    }
  }
  for (size_t k = 0; k < states.size(); ++k) {
    const ConnectedState& s = states[k];
    Row& r = art.trajectory.row();
    r.add(static_cast<double>(k));
    r.add(k * sc.h);
    r.add(s.r1.matrix());
    r.add(s.r2.matrix());
    r.add(s.omega1);
    r.add(s.omega2);
    r.add(k > 0 ? Vec3(controls[k - 1]) : Vec3::Zero());
    Row& d = art.diagnostics.row();
    d.add(static_cast<double>(k));
    d.add(k * sc.h);
    d.add(connected_energy(s, sc.params));
    d.add(total_angular_momentum(s, sc.params));
    d.add(std::max(s.r1.orthogonality_defect(), s.r2.orthogonality_defect()));
  }
  return art;
}

int run(const ScenarioConfig& cfg) {
  RunArtifacts art;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (cfg.model == "pendulum") {
      art = run_pendulum(cfg);
    } else if (cfg.model == "dumbbell") {
      art = run_dumbbell(cfg);
    } else if (cfg.model == "cart-pendulum") {
      art = run_cart(cfg);
    } else {
      art = run_connected(cfg);
    }
  } catch (const NoConvergence& e) {
    std::cerr << "error(solver): " << e.what() << "\n";
    return 4;
  } catch (const LineSearchStall& e) {
    std::cerr << "error(solver): " << e.what() << "\n";
    return 4;
  } catch (const IllConditioned& e) {
    std::cerr << "error(solver): " << e.what() << "\n";
    return 4;
  } catch (const MaxIterations& e) {
    std::cerr << "error(solver): " << e.what() << "\n";
    return 4;
  } catch (const InfeasibleStall& e) {
    std::cerr << "error(solver): " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error(model): " << e.what() << "\n";
    return 3;
  }
  const double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();

  fs::create_directories(cfg.out_dir);
  art.trajectory.write(fs::path(cfg.out_dir) / "trajectory.csv");
  art.diagnostics.write(fs::path(cfg.out_dir) / "diagnostics.csv");
  art.convergence.write(fs::path(cfg.out_dir) / "convergence.csv");
  {
    std::ofstream out(fs::path(cfg.out_dir) / "summary.json");
    out << "{\n"
        << "  \"model\": \"" << cfg.model << "\",\n"
        << "  \"solver\": \"" << cfg.solver << "\",\n"
        << "  \"converged\": " << (art.converged ? "true" : "false") << ",\n"
        << "  \"iterations\": " << art.iterations << ",\n"
        << "  \"cost\": " << fmt(art.cost) << ",\n"
        << "  \"violation\": " << fmt(art.violation) << ",\n"
        << "  \"wall_ms\": " << fmt(wall_ms) << "\n"
        << "}\n";
  }
  if (!art.converged && cfg.solver != "simulate") {
    std::cerr << "error(solver): did not reach the requested tolerance\n";
    return 4;
  }
  return 0;
}

int verify(const std::string& config_path) {
  const std::vector<std::string> errors = verify_config(config_path);
  if (errors.empty()) {
    std::cout << "ok: all config invariants hold\n";
    return 0;
  }
  for (const std::string& e : errors) std::cout << "violation: " << e << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid-body maneuver toolkit: variational integrators and "
               "optimal-control solvers"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::string solver_override;
  double tol = -1;
  int max_iter = -1;
  long long seed = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "scenario config file")->required();
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--seed", seed, "random seed override");
    cmd->add_option("--tol", tol, "solver tolerance override");
    cmd->add_option("--max-iter", max_iter, "solver iteration limit override");
    cmd->add_option("--solver", solver_override,
                    "solver override (simulate|indirect|direct)");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "run a scenario and write outputs");
  add_common(cmd_run);
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "validate a config without running it");
  cmd_verify->add_option("config", config_path, "scenario config file")->required();
  CLI::App* cmd_list = app.add_subcommand("list-scenarios", "list bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  if (cmd_list->parsed()) {
    for (const std::string& s : lgvi::bundled_scenarios()) std::cout << s << "\n";
    return 0;
  }
  if (cmd_verify->parsed()) return verify(config_path);

  lgvi::ScenarioConfig cfg;
  try {
    cfg = lgvi::load_config(config_path);
  } catch (const lgvi::ConfigError& e) {
    std::cerr << "error(config): " << e.what() << "\n";
    return 2;
  }
  if (!solver_override.empty()) cfg.solver = solver_override;
  if (tol > 0) cfg.tol = tol;
  if (max_iter > 0) cfg.max_iter = max_iter;
  if (seed >= 0) cfg.seed = static_cast<unsigned long>(seed);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  return run(cfg);
}
