#include "lgvi/indirect.hpp"

#include <limits>
#include <random>

namespace lgvi {

double condition_number(const MatX& m) {
  const Eigen::JacobiSVD<MatX> svd(m);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double smax = svd.singularValues()(0);
  if (smin <= 0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

VecX multiplier_step(const MatX& a, const VecX& lambda_next) {
  return a.transpose() * lambda_next;
}

std::pair<MatX, MatX> decompose_sensitivity(const MatX& psi12) {
  return {0.5 * (psi12 + psi12.transpose()), 0.5 * (psi12 - psi12.transpose())};
}

MatX pendulum_coupled_jacobian(const PendulumCostate<double>& s,
                                      const PendulumParams& p, const Mat3& jd,
                                      double h) {
  using C = std::complex<double>;
  const double eps = detail::kComplexStep;
  MatX out(12, 12);
  for (int d = 0; d < 12; ++d) {
    PendulumCostate<C> ps;
    ps.r = s.r.cast<C>();
    ps.omega = s.omega.cast<C>();
    ps.l1 = s.l1.cast<C>();
    ps.l2 = s.l2.cast<C>();
    if (d < 3) {
      const Mat3 e = hat<double>(Vec3(Mat3::Identity().col(d)));
      ps.r = ps.r * (Mat3T<C>::Identity() + C(0, eps) * e.cast<C>());
    } else if (d < 6) {
      ps.omega(d - 3) += C(0, eps);
    } else if (d < 9) {
      ps.l1(d - 6) += C(0, eps);
    } else {
      ps.l2(d - 9) += C(0, eps);
    }
    const PendulumCostate<C> next = pendulum_extremal_step<C>(ps, p, jd, h);
    const Mat3 r_next = next.r.real();
    const Mat3 dr = next.r.imag() / eps;
    out.block(0, d, 3, 1) = vee_skew_part<double>(Mat3(r_next.transpose() * dr));
    out.block(3, d, 3, 1) = next.omega.imag() / eps;
    out.block(6, d, 3, 1) = next.l1.imag() / eps;
    out.block(9, d, 3, 1) = next.l2.imag() / eps;
  }
  return out;
}

MatX pendulum_state_jacobian(const PendulumCostate<double>& s,
                                    const PendulumParams& p, const Mat3& jd,
                                    double h) {
  return pendulum_coupled_jacobian(s, p, jd, h).topLeftCorner(6, 6);
}

namespace {

// Deterministic unit directions for the finite-difference cross-checks.
std::vector<VecX> check_directions(int dim, int count) {
  std::mt19937_64 gen(0x5eed);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<VecX> out;
  for (int i = 0; i < count; ++i) {
    VecX v(dim);
    for (int j = 0; j < dim; ++j) v(j) = d(gen);
    out.push_back(v.normalized());
  }
  return out;
}

}  // namespace

MatX linearize_pendulum_step(const PendulumCostate<double>& s,
                             const PendulumParams& p, double h) {
  const Mat3 jd = nonstandard_inertia(p.j);
  const MatX a = pendulum_state_jacobian(s, p, jd, h);
  const PendulumCostate<double> nom = pendulum_extremal_step<double>(s, p, jd, h);
  const double eps = 1e-6;
  for (const VecX& dir : check_directions(6, 3)) {
    auto shifted = [&](double sign) {
      PendulumCostate<double> q = s;
      q.r = s.r * exp_so3(Vec3(sign * eps * dir.head<3>()));
      q.omega += sign * eps * dir.tail<3>();
      return pendulum_extremal_step<double>(q, p, jd, h);
    };
    const PendulumCostate<double> fp = shifted(1.0), fm = shifted(-1.0);
    VecX fd(6);
    fd.head<3>() = (log_so3(Mat3(nom.r.transpose() * fp.r)) -
                    log_so3(Mat3(nom.r.transpose() * fm.r))) /
                   (2 * eps);
    fd.tail<3>() = (fp.omega - fm.omega) / (2 * eps);
    const VecX an = a * dir;
    if ((fd - an).norm() > 1e-5 * std::max(1.0, fd.norm())) {
      throw LinearizationMismatch(
          "pendulum state linearization disagrees with finite differences by " +
          std::to_string((fd - an).norm()));
    }
  }
  return a;
}

PendulumExtremal propagate_pendulum_extremal(const PendulumScenario& sc,
                                                    const Vec6& lambda0) {
  const Mat3 jd = nonstandard_inertia(sc.params.j);
  PendulumExtremal out;
  out.points.reserve(sc.steps + 1);
  out.controls.reserve(sc.steps);
  PendulumCostate<double> s{sc.initial.r.matrix(), sc.initial.omega,
                            lambda0.head<3>(), lambda0.tail<3>()};
  out.points.push_back(s);
  for (int k = 0; k < sc.steps; ++k) {
    Vec3 u;
    s = pendulum_extremal_step<double>(s, sc.params, jd, sc.h, &u);
    out.points.push_back(s);
    out.controls.push_back(u);
    out.cost += 0.5 * sc.h * u.dot(sc.params.w * u);
  }
  return out;
}

Vec6 pendulum_terminal_violation(const PendulumCostate<double>& end,
                                        const PendulumScenario& sc) {
  Vec6 m;
  m.head<3>() = log_so3(Mat3(end.r.transpose() * sc.terminal.r.matrix()));
  m.tail<3>() = sc.terminal.omega - end.omega;
  return m;
}

MatX pendulum_assemble_sensitivity(const PendulumExtremal& ext,
                                          const PendulumParams& p, double h) {
  const Mat3 jd = nonstandard_inertia(p.j);
  MatX psi = MatX::Identity(12, 12);
  for (size_t k = 0; k + 1 < ext.points.size(); ++k) {
    psi = pendulum_coupled_jacobian(ext.points[k], p, jd, h) * psi;
  }
  return psi;
}

ShootingResult<PendulumState> shoot_pendulum(
    const PendulumScenario& sc, const Vec6& lambda0_guess,
    const ShootingOptions& opt) {
  ShootingResult<PendulumState> res;
  Vec6 lambda0 = lambda0_guess;

  PendulumExtremal ext = propagate_pendulum_extremal(sc, lambda0);
  Vec6 m = pendulum_terminal_violation(ext.points.back(), sc);
  res.history.push_back({lambda0, m.norm(), 0.0, 0.0, 0.0});

  for (int outer = 0; outer < opt.max_outer && m.norm() > opt.tol; ++outer) {
    const MatX psi = pendulum_assemble_sensitivity(ext, sc.params, sc.h);
    const MatX psi12 = psi.topRightCorner(6, 6);
    const Vec3 a = m.head<3>();
    MatX dm = MatX::Zero(6, 6);
    dm.topLeftCorner(3, 3) = -detail::left_jacobian_inverse(a);
    dm.bottomRightCorner(3, 3) = -Mat3::Identity();
    const MatX newton = dm * psi12;
    // Decompose in the symplectic pairing of the multiplier blocks: there the
    // conserved-vertical-momentum degeneracy lands in the symmetric part (its
    // null directions no longer coincide), so the anti-symmetric part stays
    // well-conditioned even though the full matrix is near-singular.
    MatX pairing = MatX::Zero(6, 6);
    pairing.topRightCorner(3, 3) = Mat3::Identity();
    pairing.bottomLeftCorner(3, 3) = -Mat3::Identity();
    const auto [sym, anti] = decompose_sensitivity(MatX(newton * pairing));
    const double cond_solved = condition_number(anti);
    const double cond_full = condition_number(newton);

    double gamma = 1.0;
    bool accepted = false;
    auto try_direction = [&](const Vec6& dlam) {
      gamma = 1.0;
      for (int bt = 0; bt <= opt.max_backtracks; ++bt, gamma *= 0.5) {
        const Vec6 trial = lambda0 + gamma * dlam;
        PendulumExtremal trial_ext;
        try {
          trial_ext = propagate_pendulum_extremal(sc, trial);
        } catch (const NoConvergence&) {
          continue;  // step too aggressive for the implicit update; shrink
        }
        const Vec6 trial_m = pendulum_terminal_violation(trial_ext.points.back(), sc);
        if (trial_m.norm() <= (1.0 - opt.armijo_decrease * gamma) * m.norm()) {
          lambda0 = trial;
          ext = std::move(trial_ext);
          m = trial_m;
          return true;
        }
      }
      return false;
    };
    // Prefer the decomposed update; when it loses descent (it differs from the
    // true Newton direction by the discarded symmetric part) fall back to a
    // least-squares step on the full matrix, which moves only the reachable
    // violation components.
    if (std::isfinite(cond_solved) && cond_solved <= opt.ill_conditioned_limit) {
      accepted = try_direction(Vec6(pairing * anti.partialPivLu().solve(VecX(-m))));
    }
    if (!accepted) {
      accepted = try_direction(
          Vec6(newton.completeOrthogonalDecomposition().solve(VecX(-m))));
    }
    if (!accepted) {
      throw LineSearchStall("no Armijo step length decreases the terminal violation (" +
                            std::to_string(m.norm()) + ")");
    }
    res.history.push_back({lambda0, m.norm(), gamma, cond_solved, cond_full});
  }

  res.converged = m.norm() <= opt.tol;
  res.cost = ext.cost;
  res.lambda0 = lambda0;
  res.states.reserve(ext.points.size());
  for (const auto& pt : ext.points) {
    res.states.push_back(PendulumState{Rotation::trusted(pt.r), pt.omega});
  }
  for (const auto& u : ext.controls) res.controls.emplace_back(u);
  return res;
}

MatX dumbbell_coupled_jacobian(const DumbbellCostate<double>& s,
                                      const DumbbellParams& p, const Mat3& wf,
                                      const Mat3& wm, const Mat3& jd, double h) {
  using C = std::complex<double>;
  const double eps = detail::kComplexStep;
  MatX out(24, 24);
  for (int d = 0; d < 24; ++d) {
    DumbbellCostate<C> ps;
    ps.r = s.r.cast<C>();
    ps.x = s.x.cast<C>();
    ps.omega = s.omega.cast<C>();
    ps.v = s.v.cast<C>();
    ps.l1 = s.l1.cast<C>();
    ps.l2 = s.l2.cast<C>();
    ps.l3 = s.l3.cast<C>();
    ps.l4 = s.l4.cast<C>();
    if (d < 3) {
      const Mat3 e = hat<double>(Vec3(Mat3::Identity().col(d)));
      ps.r = ps.r * (Mat3T<C>::Identity() + C(0, eps) * e.cast<C>());
    } else {
      Vec3T<C>* fields[7] = {&ps.x, &ps.omega, &ps.v, &ps.l1, &ps.l2, &ps.l3, &ps.l4};
      fields[(d - 3) / 3]->operator()((d - 3) % 3) += C(0, eps);
    }
    const DumbbellCostate<C> next = dumbbell_extremal_step<C>(ps, p, wf, wm, jd, h);
    const Mat3 r_next = next.r.real();
    out.block(0, d, 3, 1) =
        vee_skew_part<double>(Mat3(r_next.transpose() * (next.r.imag() / eps)));
    const Vec3T<C>* outs[7] = {&next.x, &next.omega, &next.v, &next.l1,
                               &next.l2, &next.l3, &next.l4};
    for (int b = 0; b < 7; ++b) out.block(3 + 3 * b, d, 3, 1) = outs[b]->imag() / eps;
  }
  return out;
}

MatX dumbbell_state_jacobian(const DumbbellCostate<double>& s,
                             const DumbbellParams& p, const Mat3& wf,
                             const Mat3& wm, const Mat3& jd, double h) {
  return dumbbell_coupled_jacobian(s, p, wf, wm, jd, h).topLeftCorner(12, 12);
}

MatX linearize_dumbbell_step(const DumbbellCostate<double>& s,
                             const DumbbellParams& p, const Mat3& wf,
                             const Mat3& wm, double h) {
  const Mat3 jd = nonstandard_inertia(p.j);
  const MatX a = dumbbell_state_jacobian(s, p, wf, wm, jd, h);
  const DumbbellCostate<double> nom =
      dumbbell_extremal_step<double>(s, p, wf, wm, jd, h);
  const double eps = 1e-6;
  for (const VecX& dir : check_directions(12, 3)) {
    auto shifted = [&](double sign) {
      DumbbellCostate<double> q = s;
      q.r = s.r * exp_so3(Vec3(sign * eps * dir.segment<3>(0)));
      q.x += sign * eps * dir.segment<3>(3);
      q.omega += sign * eps * dir.segment<3>(6);
      q.v += sign * eps * dir.segment<3>(9);
      return dumbbell_extremal_step<double>(q, p, wf, wm, jd, h);
    };
    const DumbbellCostate<double> fp = shifted(1.0), fm = shifted(-1.0);
    VecX fd(12);
    fd.segment<3>(0) = (log_so3(Mat3(nom.r.transpose() * fp.r)) -
                        log_so3(Mat3(nom.r.transpose() * fm.r))) /
                       (2 * eps);
    fd.segment<3>(3) = (fp.x - fm.x) / (2 * eps);
    fd.segment<3>(6) = (fp.omega - fm.omega) / (2 * eps);
    fd.segment<3>(9) = (fp.v - fm.v) / (2 * eps);
    const VecX an = a * dir;
    if ((fd - an).norm() > 1e-5 * std::max(1.0, fd.norm())) {
      throw LinearizationMismatch(
          "dumbbell state linearization disagrees with finite differences by " +
          std::to_string((fd - an).norm()));
    }
  }
  return a;
}

DumbbellExtremal propagate_dumbbell_extremal(const DumbbellScenario& sc,
                                                    const Vec12& lambda0) {
  const Mat3 jd = nonstandard_inertia(sc.params.j);
  DumbbellExtremal out;
  out.points.reserve(sc.steps + 1);
  DumbbellCostate<double> s{sc.initial.r.matrix(),
                            sc.initial.x,
                            sc.initial.omega,
                            sc.initial.v,
                            lambda0.segment<3>(0),
                            lambda0.segment<3>(3),
                            lambda0.segment<3>(6),
                            lambda0.segment<3>(9)};
  out.points.push_back(s);
  for (int k = 0; k < sc.steps; ++k) {
    Vec3 uf, um;
    s = dumbbell_extremal_step<double>(s, sc.params, sc.wf, sc.wm, jd, sc.h, &uf, &um);
    out.points.push_back(s);
    out.controls.push_back(DumbbellControl{uf, um});
    out.cost += 0.5 * sc.h * (uf.dot(sc.wf * uf) + um.dot(sc.wm * um));
  }
  return out;
}

Vec12 dumbbell_terminal_violation(const DumbbellCostate<double>& end,
                                         const DumbbellScenario& sc) {
  Vec12 m;
  m.segment<3>(0) = log_so3(Mat3(end.r.transpose() * sc.terminal.r.matrix()));
  m.segment<3>(3) = sc.terminal.x - end.x;
  m.segment<3>(6) = sc.terminal.omega - end.omega;
  m.segment<3>(9) = sc.terminal.v - end.v;
  return m;
}

MatX dumbbell_assemble_sensitivity(const DumbbellExtremal& ext,
                                          const DumbbellScenario& sc) {
  const Mat3 jd = nonstandard_inertia(sc.params.j);
  MatX psi = MatX::Identity(24, 24);
  for (size_t k = 0; k + 1 < ext.points.size(); ++k) {
    psi = dumbbell_coupled_jacobian(ext.points[k], sc.params, sc.wf, sc.wm, jd, sc.h) *
          psi;
  }
  return psi;
}

ShootingResult<DumbbellState> shoot_dumbbell(
    const DumbbellScenario& sc, const Vec12& lambda0_guess,
    const ShootingOptions& opt) {
  ShootingResult<DumbbellState> res;
  Vec12 lambda0 = lambda0_guess;

  DumbbellExtremal ext = propagate_dumbbell_extremal(sc, lambda0);
  Vec12 m = dumbbell_terminal_violation(ext.points.back(), sc);
  res.history.push_back({lambda0, m.norm(), 0.0, 0.0, 0.0});

  for (int outer = 0; outer < opt.max_outer && m.norm() > opt.tol; ++outer) {
    const MatX psi = dumbbell_assemble_sensitivity(ext, sc);
    const MatX psi12 = psi.topRightCorner(12, 12);
    MatX dm = MatX::Zero(12, 12);
    dm.topLeftCorner(3, 3) = -detail::left_jacobian_inverse(Vec3(m.segment<3>(0)));
    dm.bottomRightCorner(9, 9) = -MatX::Identity(9, 9);
    const MatX newton = dm * psi12;
    const double cond_full = condition_number(newton);
    if (cond_full > opt.ill_conditioned_limit) {
      throw IllConditioned("shooting update matrix condition number " +
                           std::to_string(cond_full));
    }
    const Vec12 dlam = newton.partialPivLu().solve(VecX(-m));

    double gamma = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtracks; ++bt, gamma *= 0.5) {
      const Vec12 trial = lambda0 + gamma * dlam;
      DumbbellExtremal trial_ext;
      try {
        trial_ext = propagate_dumbbell_extremal(sc, trial);
      } catch (const NoConvergence&) {
        continue;  // step too aggressive for the implicit update; shrink
      }
      const Vec12 trial_m = dumbbell_terminal_violation(trial_ext.points.back(), sc);
      if (trial_m.norm() <= (1.0 - opt.armijo_decrease * gamma) * m.norm()) {
        lambda0 = trial;
        ext = std::move(trial_ext);
        m = trial_m;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw LineSearchStall("no Armijo step length decreases the terminal violation (" +
                            std::to_string(m.norm()) + ")");
    }
    res.history.push_back({lambda0, m.norm(), gamma, cond_full, cond_full});
  }

  res.converged = m.norm() <= opt.tol;
  res.cost = ext.cost;
  res.lambda0 = lambda0;
  for (const auto& pt : ext.points) {
    res.states.push_back(DumbbellState{Rotation::trusted(pt.r), pt.x, pt.omega, pt.v});
  }
  for (const auto& u : ext.controls) {
    VecX stacked(6);
    stacked << u.force, u.moment;
    res.controls.push_back(stacked);
  }
  return res;
}

}  // namespace lgvi
