#ifndef LGVI_SPLINE_HPP
#define LGVI_SPLINE_HPP

#include <vector>

#include "lgvi/types.hpp"

namespace lgvi {

/// Natural cubic spline through uniformly spaced knots on [0, horizon].
/// With two knots the natural end conditions force a straight line.
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(const VecX& values, double horizon) : y_(values), horizon_(horizon) {
    const int n = static_cast<int>(values.size());
    if (n < 2) throw TooFewKnots("cubic spline needs at least 2 knots");
    dt_ = horizon / (n - 1);
    // Second derivatives m from the natural-spline tridiagonal system.
    m_ = VecX::Zero(n);
    if (n > 2) {
      MatX a = MatX::Zero(n - 2, n - 2);
      VecX rhs(n - 2);
      for (int i = 0; i < n - 2; ++i) {
        a(i, i) = 2.0 * dt_ / 3.0;
        if (i > 0) a(i, i - 1) = dt_ / 6.0;
        if (i + 1 < n - 2) a(i, i + 1) = dt_ / 6.0;
        rhs(i) = (y_(i + 2) - y_(i + 1)) / dt_ - (y_(i + 1) - y_(i)) / dt_;
      }
      m_.segment(1, n - 2) = a.partialPivLu().solve(rhs);
    }
  }

  double operator()(double t) const {
    const int n = static_cast<int>(y_.size());
    int i = static_cast<int>(t / dt_);
    i = std::max(0, std::min(i, n - 2));
    const double a = t - i * dt_;
    const double b = (i + 1) * dt_ - t;
    return m_(i) * b * b * b / (6.0 * dt_) + m_(i + 1) * a * a * a / (6.0 * dt_) +
           (y_(i) / dt_ - m_(i) * dt_ / 6.0) * b +
           (y_(i + 1) / dt_ - m_(i + 1) * dt_ / 6.0) * a;
  }

  const VecX& knot_values() const { return y_; }
  double horizon() const { return horizon_; }

 private:
  VecX y_;
  VecX m_;
  double horizon_ = 0;
  double dt_ = 0;
};

/// Knot-parameterized control history: one natural cubic spline per control
/// component over [0, N h], with the values at the N step times t_1..t_N
/// cached for the cost/constraint evaluations.
class ControlSchedule {
 public:
  ControlSchedule() = default;

  /// knots is (components x knot count); the step cache holds u(t_{k+1}) for
  /// k = 0..steps-1, matching the stepper convention that the control applied
  /// over step k is indexed by its endpoint.
  ControlSchedule(const MatX& knots, int steps, double h)
      : components_(static_cast<int>(knots.rows())), steps_(steps), h_(h) {
    const double horizon = steps * h;
    splines_.reserve(components_);
    for (int c = 0; c < components_; ++c) {
      splines_.emplace_back(VecX(knots.row(c).transpose()), horizon);
    }
    cache_ = MatX::Zero(components_, steps);
    for (int k = 0; k < steps; ++k) {
      for (int c = 0; c < components_; ++c) cache_(c, k) = splines_[c]((k + 1) * h);
    }
  }

  double evaluate(int component, double t) const { return splines_[component](t); }
  /// Control vector applied over step k (value at t_{k+1}).
  VecX at_step(int k) const { return cache_.col(k); }
  const MatX& step_values() const { return cache_; }
  int components() const { return components_; }
  int steps() const { return steps_; }
  double h() const { return h_; }

 private:
  int components_ = 0;
  int steps_ = 0;
  double h_ = 0;
  std::vector<CubicSpline> splines_;
  MatX cache_;
};

}  // namespace lgvi

#endif
