// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is independent; an exception inside one is a
// failure for that criterion only.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lgvi/config.hpp"
#include "lgvi/direct.hpp"
#include "lgvi/indirect.hpp"

using namespace lgvi;

namespace {

int failures = 0;

void criterion(int id, const std::string& name, const std::function<std::string()>& body) {
  // body returns "" on success, or a reason on failure.
  std::string reason;
  try {
    reason = body();
  } catch (const std::exception& e) {
    reason = std::string("exception: ") + e.what();
  }
  if (reason.empty()) {
    std::printf("PASS  %2d  %s\n", id, name.c_str());
  } else {
    std::printf("FAIL  %2d  %s  [%s]\n", id, name.c_str(), reason.c_str());
    ++failures;
  }
  std::fflush(stdout);
}

std::mt19937_64 rng(424242);
double unit_rand() { return std::uniform_real_distribution<double>(-1, 1)(rng); }
Vec3 rand_vec(double s) { return Vec3(s * unit_rand(), s * unit_rand(), s * unit_rand()); }

double rotation_distance(const Mat3& a, const Mat3& b) {
  return log_so3(Mat3(a.transpose() * b)).norm();
}

// Deterministic bounded control signal for conservation checks.
Vec3 probe_control(int k) {
  return Vec3(std::sin(0.013 * k), std::cos(0.007 * k + 1.0), std::sin(0.019 * k + 2.0));
}

// Fixed multiplier guess for the pendulum reorientation (seed 1, scale 1 of
// the CLI's seeded-guess generator); the zero guess sits on a symmetry point
// where the vertical rotation is a second-order (geometric-phase) effect.
Vec6 pendulum_reference_guess() {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Vec6 g;
  for (int i = 0; i < 6; ++i) g(i) = n(gen);
  return g;
}

std::string check_superlinear_tail(const std::vector<ShootingIterate>& hist) {
  // Ratios of successive violations must fall off in the tail. Iterates below
  // 1e-11 sit at the rounding floor of the terminal error and carry no rate
  // information, so they are excluded.
  std::vector<double> v;
  for (const auto& it : hist) {
    if (it.violation > 1e-11) v.push_back(it.violation);
  }
  if (v.size() < 4) return "fewer than 4 iterates above the rounding floor";
  std::vector<double> ratios;
  for (size_t i = v.size() - 3; i < v.size(); ++i) ratios.push_back(v[i] / v[i - 1]);
  for (size_t i = 1; i < ratios.size(); ++i) {
    if (!(ratios[i] < ratios[i - 1])) {
      std::ostringstream os;
      os << "tail ratios not decreasing: " << ratios[0] << ", " << ratios[1] << ", "
         << ratios[2];
      return os.str();
    }
  }
  return "";
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main() {
  // -------------------------------------------------------------- 1
  criterion(1, "group structure: 1e4 free-body steps, defect <= 1e-13", [] {
    PendulumParams p;
    p.g = 0;  // free rigid body
    PendulumState s{Rotation(), Vec3(1.0, 0.4, -0.6)};
    double worst = 0;
    for (int k = 0; k < 10000; ++k) {
      s = step_pendulum(s, Vec3::Zero(), p, 0.001);
      worst = std::max(worst, s.r.orthogonality_defect());
    }
    if (worst > 1e-13) return "max defect " + std::to_string(worst);
    return std::string();
  });

  // -------------------------------------------------------------- 2
  criterion(2, "pendulum vertical momentum conserved <= 1e-12 under control", [] {
    const PendulumScenario sc = pendulum_reorientation();
    PendulumState s = sc.initial;
    s.omega = Vec3(0.3, -0.2, 0.5);
    const double m0 = vertical_momentum(s, sc.params);
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
      s = step_pendulum(s, probe_control(k), sc.params, sc.h);
      worst = std::max(worst, std::abs(vertical_momentum(s, sc.params) - m0));
    }
    if (worst > 1e-12) return "max drift " + std::to_string(worst);
    return std::string();
  });

  // -------------------------------------------------------------- 3
  criterion(3, "connected total angular momentum drift <= 1e-11", [] {
    const ConnectedScenario sc = connected_rotation();
    ConnectedState s = sc.initial;
    s.omega1 = Vec3(0.2, -0.1, 0.15);
    s.omega2 = Vec3(-0.1, 0.25, 0.05);
    const Vec3 m0 = total_angular_momentum(s, sc.params);
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
      s = step_connected(s, Vec3(0.1 * probe_control(k)), sc.params, sc.h);
      worst = std::max(worst, (total_angular_momentum(s, sc.params) - m0).norm());
    }
    if (worst > 1e-11) return "max drift " + std::to_string(worst);
    return std::string();
  });

  // -------------------------------------------------------------- 4
  criterion(4, "pendulum energy: bounded oscillation, drift slope <= 1e-10/step", [] {
    PendulumParams p;
    PendulumState s{Rotation::trusted(exp_so3(Vec3(0.3, 0, 0))), Vec3::Zero()};
    const double e0 = pendulum_energy(s, p);
    const int n = 100000;
    double peak = 0, sum_ke = 0, sum_e = 0;
    for (int k = 1; k <= n; ++k) {
      s = step_pendulum(s, Vec3::Zero(), p, 0.001);
      const double e = pendulum_energy(s, p) - e0;
      peak = std::max(peak, std::abs(e));
      sum_ke += static_cast<double>(k) * e;
      sum_e += e;
    }
    // Least-squares slope of e vs k for k = 1..n.
    const double kbar = 0.5 * (n + 1);
    const double sxx = static_cast<double>(n) * (n + 1.0) * (2.0 * n + 1.0) / 6.0 -
                       n * kbar * kbar;
    const double slope = (sum_ke - kbar * sum_e) / sxx;
    if (peak > 1e-4) return "peak deviation " + std::to_string(peak);
    if (std::abs(slope) > 1e-10) return "drift slope " + std::to_string(slope);
    return std::string();
  });

  // -------------------------------------------------------------- 5
  criterion(5, "observed order 2.0 +/- 0.1 on all four steppers", [] {
    auto order = [](const std::function<double(double)>& terminal_gap) {
      // terminal_gap(h) = distance(final(h), final(h/2)).
      const double e1 = terminal_gap(0.01);
      const double e2 = terminal_gap(0.005);
      return std::log2(e1 / e2);
    };
    std::ostringstream bad;

    {  // free rigid body (pendulum stepper, g = 0)
      PendulumParams p;
      p.g = 0;
      auto final_at = [&](double h) {
        PendulumState s{Rotation(), Vec3(1.0, 0.5, -0.3)};
        const int n = static_cast<int>(std::round(1.0 / h));
        for (int k = 0; k < n; ++k) s = step_pendulum(s, Vec3::Zero(), p, h);
        return s;
      };
      const double p_obs = order([&](double h) {
        const auto a = final_at(h), b = final_at(h / 2);
        return rotation_distance(a.r.matrix(), b.r.matrix()) + (a.omega - b.omega).norm();
      });
      if (std::abs(p_obs - 2.0) > 0.1) bad << "pendulum " << p_obs << "; ";
    }
    {  // dumbbell, force-free
      DumbbellParams p = default_dumbbell_params();
      p.gm = 0;
      const Mat3 jd = nonstandard_inertia(p.j);
      auto final_at = [&](double h) {
        DumbbellRaw<double> s{Mat3::Identity(), Vec3(1, 0, 0), Vec3(0.8, -0.5, 0.6),
                              Vec3(0, 0.5, 0)};
        const int n = static_cast<int>(std::round(1.0 / h));
        for (int k = 0; k < n; ++k) {
          s = step_dumbbell_raw<double>(s, Vec3::Zero(), Vec3::Zero(), p, jd, h);
        }
        return s;
      };
      const double p_obs = order([&](double h) {
        const auto a = final_at(h), b = final_at(h / 2);
        return rotation_distance(a.r, b.r) + (a.omega - b.omega).norm() +
               (a.x - b.x).norm() + (a.v - b.v).norm();
      });
      if (std::abs(p_obs - 2.0) > 0.1) bad << "dumbbell " << p_obs << "; ";
    }
    {  // cart-pendulum with gravity
      CartPendulumParams p;
      auto final_at = [&](double h) {
        CartPendulumState s;
        s.r = Rotation::trusted(exp_so3(Vec3(0.4, 0.1, 0)));
        s.omega = Vec3(0.3, -0.2, 0.1);
        const int n = static_cast<int>(std::round(0.5 / h));
        for (int k = 0; k < n; ++k) s = step_cart_pendulum(s, Vec2(0.1, -0.05), p, h);
        return s;
      };
      const double p_obs = order([&](double h) {
        const auto a = final_at(h), b = final_at(h / 2);
        return rotation_distance(a.r.matrix(), b.r.matrix()) +
               (a.omega - b.omega).norm() + std::abs(a.x - b.x) + std::abs(a.y - b.y) +
               std::abs(a.xdot - b.xdot) + std::abs(a.ydot - b.ydot);
      });
      if (std::abs(p_obs - 2.0) > 0.1) bad << "cart " << p_obs << "; ";
    }
    {  // connected bodies
      ConnectedParams p;
      auto final_at = [&](double h) {
        ConnectedState s;
        s.omega1 = Vec3(0.4, -0.2, 0.3);
        s.omega2 = Vec3(-0.3, 0.2, 0.1);
        const int n = static_cast<int>(std::round(0.5 / h));
        for (int k = 0; k < n; ++k) s = step_connected(s, Vec3(0.05, 0, -0.05), p, h);
        return s;
      };
      const double p_obs = order([&](double h) {
        const auto a = final_at(h), b = final_at(h / 2);
        return rotation_distance(a.r1.matrix(), b.r1.matrix()) +
               rotation_distance(a.r2.matrix(), b.r2.matrix()) +
               (a.omega1 - b.omega1).norm() + (a.omega2 - b.omega2).norm();
      });
      if (std::abs(p_obs - 2.0) > 0.1) bad << "connected " << p_obs << "; ";
    }
    return bad.str();
  });

  // -------------------------------------------------------------- 6
  criterion(6, "attitude solver: residual <= 1e-14 within 3 Newton iterations", [] {
    const PendulumScenario sc = pendulum_reorientation();
    PendulumState s{Rotation::trusted(exp_so3(Vec3(0.5, 0.2, 0))), Vec3(0.4, -0.3, 0.6)};
    int worst_iters = 0;
    for (int k = 0; k < 1000; ++k) {
      AttitudeSolveStats st;
      s = step_pendulum(s, Vec3::Zero(), sc.params, sc.h, &st);
      worst_iters = std::max(worst_iters, st.iterations);
      if (st.residual > 1e-14) {
        return "residual " + std::to_string(st.residual) + " at step " +
               std::to_string(k);
      }
    }
    if (worst_iters > 3) return "needed " + std::to_string(worst_iters) + " iterations";
    return std::string();
  });

  // ----------------------------------------------------------- 7 & 8
  ShootingResult<PendulumState> pend_res;
  bool pend_ok = false;
  criterion(7, "pendulum indirect: violation <= 1e-10, cost ~ 7.32, conditioning", [&] {
    const PendulumScenario sc = pendulum_reorientation();
    pend_res = shoot_pendulum(sc, pendulum_reference_guess());
    pend_ok = pend_res.converged;
    if (!pend_res.converged) return std::string("did not converge");
    const double viol = pend_res.history.back().violation;
    if (viol > 1e-10) return "violation " + std::to_string(viol);
    if (std::abs(pend_res.cost - 7.32) > 0.732) {
      return "cost " + std::to_string(pend_res.cost) + " outside 7.32 +/- 10%";
    }
    double worst_solved = 0, best_full = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < pend_res.history.size(); ++i) {
      worst_solved = std::max(worst_solved, pend_res.history[i].cond_solved);
      best_full = std::min(best_full, pend_res.history[i].cond_full);
    }
    if (worst_solved > 1e6) {
      return "decomposed condition number " + std::to_string(worst_solved);
    }
    if (best_full < 1e12) {
      return "full sensitivity condition number only " + std::to_string(best_full);
    }
    return std::string();
  });

  criterion(8, "pendulum shooting tail is superlinear", [&] {
    if (!pend_ok) return std::string("criterion-7 run unavailable");
    return check_superlinear_tail(pend_res.history);
  });

  // -------------------------------------------------------------- 9
  criterion(9, "dumbbell indirect: violation, re-propagation, frame equivariance", [] {
    const DumbbellScenario sc = dumbbell_orbit_transfer();
    const auto res = shoot_dumbbell(sc);
    if (!res.converged) return std::string("did not converge");
    const double viol = res.history.back().violation;
    if (viol > 1e-10) return "violation " + std::to_string(viol);
    const std::string tail = check_superlinear_tail(res.history);
    if (!tail.empty()) return tail;

    // Open-loop re-propagation through the plain stepper.
    DumbbellState s = sc.initial;
    for (size_t k = 0; k + 1 < res.states.size(); ++k) {
      const VecX& u = res.controls[k];
      s = step_dumbbell(s, DumbbellControl{u.head<3>(), u.tail<3>()}, sc.params, sc.h);
    }
    const double gap = rotation_distance(s.r.matrix(), res.states.back().r.matrix()) +
                       (s.x - res.states.back().x).norm() +
                       (s.omega - res.states.back().omega).norm() +
                       (s.v - res.states.back().v).norm();
    if (gap > 1e-10) return "re-propagation gap " + std::to_string(gap);

    // Rigidly rotate the whole scenario by a fixed Q: cost must be invariant.
    const Mat3 q = exp_so3(Vec3(0.3, -0.4, 0.5));
    DumbbellScenario rot = sc;
    rot.initial.r = Rotation::trusted(q * sc.initial.r.matrix());
    rot.initial.x = q * sc.initial.x;
    rot.initial.v = q * sc.initial.v;
    rot.terminal.r = Rotation::trusted(q * sc.terminal.r.matrix());
    rot.terminal.x = q * sc.terminal.x;
    rot.terminal.v = q * sc.terminal.v;
    const auto res_rot = shoot_dumbbell(rot);
    if (!res_rot.converged) return std::string("rotated scenario did not converge");
    const double rel = std::abs(res_rot.cost - res.cost) / std::max(1e-300, res.cost);
    if (rel > 1e-9) return "cost equivariance violated: rel diff " + std::to_string(rel);
    return std::string();
  });

  // ------------------------------------------------------------- 10
  criterion(10, "cart direct: violation <= 1e-6, cost within 25% of 297.43", [] {
    const CartPendulumScenario sc = cart_pendulum_swing();
    const auto res = solve_direct_cart(sc);
    if (!res.converged) return std::string("did not converge");
    if (res.violation > 1e-6) return "violation " + std::to_string(res.violation);
    if (std::abs(res.cost - 297.43) > 0.25 * 297.43) {
      return "cost " + std::to_string(res.cost);
    }
    return std::string();
  });

  // ------------------------------------------------------------- 11
  criterion(11, "connected direct: reduced violation, dropped rows, cost ~ 0.574", [] {
    const ConnectedScenario sc = connected_rotation();
    const auto res = solve_direct_connected(sc);
    if (!res.converged) return std::string("did not converge");
    if (res.violation > 1e-6) return "violation " + std::to_string(res.violation);
    const VecX full = connected_terminal_residual(res.states.back(), sc);
    const double dropped = full.segment<3>(9).norm();
    if (dropped > 1e-6) return "dropped Omega2 residual " + std::to_string(dropped);
    if (std::abs(res.cost - 0.574) > 0.25 * 0.574) {
      return "cost " + std::to_string(res.cost);
    }
    return std::string();
  });

  // ------------------------------------------------------------- 12
  criterion(12, "linearization matches finite differences on 100 random states", [] {
    PendulumParams pp;
    for (int i = 0; i < 100; ++i) {
      PendulumCostate<double> s{exp_so3(rand_vec(2.0)), rand_vec(1.0), rand_vec(1.0),
                                rand_vec(1.0)};
      linearize_pendulum_step(s, pp, 0.001);  // throws on mismatch
    }
    const DumbbellParams dp = default_dumbbell_params();
    for (int i = 0; i < 100; ++i) {
      DumbbellCostate<double> s;
      s.r = exp_so3(rand_vec(2.0));
      s.x = Vec3(1, 0, 0) + rand_vec(0.2);
      s.omega = rand_vec(0.5);
      s.v = rand_vec(0.5);
      s.l1 = rand_vec(0.1);
      s.l2 = rand_vec(0.1);
      s.l3 = rand_vec(0.1);
      s.l4 = rand_vec(0.1);
      linearize_dumbbell_step(s, dp, Mat3::Identity(), Mat3::Identity(), 0.01);
    }
    return std::string();
  });

  // ------------------------------------------------------------- 13
  criterion(13, "determinism: identical config + seed gives bit-identical outputs", [] {
#ifdef LGVI_CLI_PATH
    namespace fs = std::filesystem;
    const fs::path out_a = fs::temp_directory_path() / "lgvi_det_a";
    const fs::path out_b = fs::temp_directory_path() / "lgvi_det_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    const std::string config = std::string(LGVI_SCENARIO_DIR) +
                               "/pendulum-reorientation.json";
    for (const fs::path& out : {out_a, out_b}) {
      const std::string cmd = std::string(LGVI_CLI_PATH) + " run " + config +
                              " --solver simulate --seed 7 --out " + out.string() +
                              " > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) return "CLI run failed: " + cmd;
    }
    for (const char* f : {"trajectory.csv", "diagnostics.csv", "convergence.csv",
                          "summary.json"}) {
      const std::string a = file_bytes(out_a / f);
      const std::string b = file_bytes(out_b / f);
      if (a.empty()) return std::string(f) + " missing or empty";
      if (a != b) return std::string(f) + " differs between identical runs";
    }
    return std::string();
#else
    return std::string("CLI path not configured");
#endif
  });

  std::printf("%s: %d/13 criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED",
              13 - failures);
  return failures == 0 ? 0 : 1;
}
