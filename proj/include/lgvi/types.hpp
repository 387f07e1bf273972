#ifndef LGVI_TYPES_HPP
#define LGVI_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lgvi {

template <class S> using Vec3T = Eigen::Matrix<S, 3, 1>;
template <class S> using Mat3T = Eigen::Matrix<S, 3, 3>;

using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;
using Vec2 = Eigen::Vector2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Tolerances for structure validation.
inline constexpr double kOrthoTol = 1e-13;
inline constexpr double kDetTol = 1e-12;
inline constexpr double kSkewTol = 1e-10;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NonSkewInput : Error {
  explicit NonSkewInput(const std::string& w) : Error(w) {}
};
struct InvalidRotation : Error {
  explicit InvalidRotation(const std::string& w) : Error(w) {}
};
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& w) : Error(w) {}
};
struct SingularMassMatrix : Error {
  explicit SingularMassMatrix(const std::string& w) : Error(w) {}
};
struct NotSymmetric : Error {
  explicit NotSymmetric(const std::string& w) : Error(w) {}
};
struct CollisionSingularity : Error {
  explicit CollisionSingularity(const std::string& w) : Error(w) {}
};
struct LinearizationMismatch : Error {
  explicit LinearizationMismatch(const std::string& w) : Error(w) {}
};
struct IllConditioned : Error {
  explicit IllConditioned(const std::string& w) : Error(w) {}
};
struct LineSearchStall : Error {
  explicit LineSearchStall(const std::string& w) : Error(w) {}
};
struct TooFewKnots : Error {
  explicit TooFewKnots(const std::string& w) : Error(w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(w) {}
};
struct MaxIterations : Error {
  explicit MaxIterations(const std::string& w) : Error(w) {}
};
struct InfeasibleStall : Error {
  explicit InfeasibleStall(const std::string& w) : Error(w) {}
};

/// Rotation matrix with validated SO(3) structure.
///
/// Construction through the checked factory throws InvalidRotation when
/// orthogonality or determinant defects exceed the stated tolerances.
/// Integrators build rotations by group operations only, so states never
/// need reprojection.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation from_matrix(const Mat3& m) {
    const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
    const double det = m.determinant();
    if (!m.allFinite() || ortho > kOrthoTol || std::abs(det - 1.0) > kDetTol) {
      throw InvalidRotation("matrix is not in SO(3): orthogonality defect " +
                            std::to_string(ortho) + ", det " + std::to_string(det));
    }
    Rotation r;
    r.m_ = m;
    return r;
  }

  // For group-operation results whose structure holds by construction.
  static Rotation trusted(const Mat3& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Mat3& matrix() const { return m_; }

  double orthogonality_defect() const {
    return (m_.transpose() * m_ - Mat3::Identity()).norm();
  }

 private:
  Mat3 m_;
};

struct SE3Element {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
};

}  // namespace lgvi

#endif
