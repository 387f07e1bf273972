#ifndef LGVI_SO3_HPP
#define LGVI_SO3_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <type_traits>

#include "lgvi/types.hpp"

// Exact small-matrix primitives for SO(3)/so(3) and SE(3).
//
// The templated versions accept std::complex<double> scalars so that
// downstream code can differentiate entire flow maps by the complex-step
// method. All norms below are therefore unconjugated bilinear forms, and
// branch decisions read only the real part.

namespace lgvi {

namespace detail {

inline double real_part(double x) { return x; }
inline double real_part(const std::complex<double>& x) { return x.real(); }

template <class S>
S dot3(const Vec3T<S>& a, const Vec3T<S>& b) {
  return a(0) * b(0) + a(1) * b(1) + a(2) * b(2);
}

// Eigen's cross() conjugates complex operands, which breaks complex-step
// differentiation; this is the plain bilinear cross product.
template <class S>
Vec3T<S> cross3(const Vec3T<S>& a, const Vec3T<S>& b) {
  return Vec3T<S>(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
                  a(0) * b(1) - a(1) * b(0));
}

}  // namespace detail

template <class S>
Mat3T<S> hat(const Vec3T<S>& v) {
  Mat3T<S> m;
  m << S(0), -v(2), v(1),  //
      v(2), S(0), -v(0),   //
      -v(1), v(0), S(0);
  return m;
}

inline Mat3 hat(const Vec3& v) { return hat<double>(v); }

// Reads the three independent entries of the skew part (m - m^T)/2.
template <class S>
Vec3T<S> vee_skew_part(const Mat3T<S>& m) {
  return Vec3T<S>(S(0.5) * (m(2, 1) - m(1, 2)),  //
                  S(0.5) * (m(0, 2) - m(2, 0)),  //
                  S(0.5) * (m(1, 0) - m(0, 1)));
}

inline Vec3 vee(const Mat3& m) {
  const double defect = (m + m.transpose()).norm();
  if (!(defect <= kSkewTol)) {
    throw NonSkewInput("vee: input exceeds skew tolerance, ||m + m^T|| = " +
                       std::to_string(defect));
  }
  return vee_skew_part<double>(m);
}

/// Rodrigues closed form with a series fallback below ||v|| = 1e-8.
template <class S>
Mat3T<S> exp_so3(const Vec3T<S>& v) {
  const S t2 = detail::dot3(v, v);
  S a, b;  // sin(t)/t and (1-cos(t))/t^2
  if (detail::real_part(t2) < 1e-16) {
    a = S(1) - t2 / S(6);
    b = S(0.5) - t2 / S(24);
  } else {
    using std::cos;
    using std::sin;
    using std::sqrt;
    const S t = sqrt(t2);
    a = sin(t) / t;
    b = (S(1) - cos(t)) / t2;
  }
  const Mat3T<S> vh = hat<S>(v);
  return Mat3T<S>::Identity() + a * vh + b * (vh * vh);
}

inline Mat3 exp_so3(const Vec3& v) { return exp_so3<double>(v); }

/// Logarithm map with angle in [0, pi]. The theta = pi branch recovers the
/// axis from the diagonal of (R + I)/2; sign convention: first nonzero axis
/// component positive.
/// Advance a rotation by exp(f), i.e. R * exp(hat(f)). Group elements are
/// advanced by thousands of these updates and are never reprojected, so in
/// the double path both the exponential and the product are evaluated in
/// extended precision: a double-precision exp(f) carries fixed O(1e-16)
/// orthogonality errors that repeat every step when the increment is nearly
/// constant and accumulate linearly instead of as a random walk.
template <class S>
Mat3T<S> advance_rotation(const Mat3T<S>& r, const Vec3T<S>& f) {
  if constexpr (std::is_same_v<S, double>) {
    using Ld = long double;
    using Mat3L = Eigen::Matrix<Ld, 3, 3>;
    using Vec3L = Eigen::Matrix<Ld, 3, 1>;
    const Vec3L v = f.template cast<Ld>();
    Mat3L vh;
    vh << 0, -v(2), v(1), v(2), 0, -v(0), -v(1), v(0), 0;
    const Ld t = v.norm();
    Mat3L fl;
    if (t < Ld(1e-8)) {
      fl = Mat3L::Identity() + vh + Ld(0.5) * vh * vh;
    } else {
      fl = Mat3L::Identity() + std::sin(t) / t * vh +
           (Ld(1) - std::cos(t)) / (t * t) * vh * vh;
    }
    const Mat3L out = r.template cast<Ld>() * fl;
    return out.template cast<double>();
  } else {
    return r * exp_so3<S>(f);
  }
}

inline Vec3 log_so3(const Mat3& r) {
  const Vec3 skew = vee_skew_part<double>(r);  // sin(theta) * axis
  const double s = skew.norm();
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  if (s < 1e-8 && c > 0) {
    // R ~ I + hat(v); the skew part recovers v to second order.
    return skew;
  }
  if (s >= 1e-6 || c > 0) {
    // atan2 keeps the angle well conditioned for every theta; the axis from
    // the skew part is accurate while sin(theta) is not tiny.
    return (std::atan2(s, c) / s) * skew;
  }
  // Within ~1e-6 of a half turn the skew part no longer resolves the axis;
  // recover it from the symmetric part (R + R^T)/2 + I = 2 aa^T (1 - cos) + ...
  const Mat3 b = 0.25 * (r + r.transpose()) + 0.5 * Mat3::Identity();
  int imax = 0;
  b.diagonal().maxCoeff(&imax);
  Vec3 axis;
  axis(imax) = std::sqrt(std::max(b(imax, imax), 0.0));
  for (int i = 0; i < 3; ++i) {
    if (i != imax) axis(i) = b(imax, i) / axis(imax);
  }
  axis.normalize();
  // The skew part fixes the axis sign and gives a well-conditioned angle just
  // below pi. At theta = pi it vanishes and the sign convention applies:
  // first nonzero axis component positive.
  const double sa = skew.dot(axis);
  if (std::abs(sa) < 1e-12) {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis(i)) > 1e-12) {
        if (axis(i) < 0) axis = -axis;
        break;
      }
    }
    return M_PI * axis;
  }
  if (sa < 0) axis = -axis;
  return (M_PI - std::asin(std::min(1.0, std::abs(sa)))) * axis;
}

inline Vec3 log_so3(const Rotation& r) { return log_so3(r.matrix()); }

/// Right Jacobian of SO(3): exp(v + d) = exp(v) exp(hat(Jr(v) d)) + O(d^2).
template <class S>
Mat3T<S> right_jacobian(const Vec3T<S>& v) {
  const S t2 = detail::dot3(v, v);
  const Mat3T<S> vh = hat<S>(v);
  S c1, c2;  // coefficients of hat(v), hat(v)^2
  if (detail::real_part(t2) < 1e-16) {
    c1 = S(-0.5) + t2 / S(24);
    c2 = S(1.0 / 6.0) - t2 / S(120);
  } else {
    using std::cos;
    using std::sin;
    using std::sqrt;
    const S t = sqrt(t2);
    c1 = -(S(1) - cos(t)) / t2;
    c2 = (t - sin(t)) / (t2 * t);
  }
  return Mat3T<S>::Identity() + c1 * vh + c2 * (vh * vh);
}

/// Left Jacobian: exp(v + d) = exp(hat(Jl(v) d)) exp(v) + O(d^2).
template <class S>
Mat3T<S> left_jacobian(const Vec3T<S>& v) {
  return right_jacobian<S>(Vec3T<S>(-v));
}

inline SE3Element se3_compose(const SE3Element& g, const SE3Element& f) {
  SE3Element out;
  out.rotation = Rotation::trusted(g.rotation.matrix() * f.rotation.matrix());
  out.translation = g.translation + g.rotation.matrix() * f.translation;
  return out;
}

/// Nonstandard inertia J_d = tr(J)/2 I - J used by the implicit attitude update.
inline Mat3 nonstandard_inertia(const Mat3& j) {
  if ((j - j.transpose()).norm() > kSkewTol) {
    throw NotSymmetric("nonstandard_inertia: input is not symmetric");
  }
  return 0.5 * j.trace() * Mat3::Identity() - j;
}

/// Inverse of nonstandard_inertia: J = tr(J_d) I - J_d.
inline Mat3 standard_inertia(const Mat3& jd) {
  return jd.trace() * Mat3::Identity() - jd;
}

}  // namespace lgvi

#endif
