#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace vgfm {

using Matrix34 = Eigen::Matrix<double, 3, 4>;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Vector10 = Eigen::Matrix<double, 10, 1>;

/// Thrown on malformed geometric input (degenerate boxes, bad dimensions, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned 2D detection box in pixels.
struct BoundingBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }

  void validate() const {
    if (!(x_min < x_max) || !(y_min < y_max))
      throw InvalidInput("degenerate bounding box");
    if (!std::isfinite(x_min) || !std::isfinite(y_min) ||
        !std::isfinite(x_max) || !std::isfinite(y_max))
      throw InvalidInput("non-finite bounding box");
  }
};

/// Parametric image ellipse: center, semi-axes, orientation in [-pi/2, pi/2).
struct Ellipse2D {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double semi_axis1 = 1, semi_axis2 = 1;
  double orientation = 0;  // radians
};

/// Symmetric 3x3 dual conic. Stored as-is; normalized() rescales so (2,2) = -1.
struct DualConic {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  DualConic() = default;
  explicit DualConic(const Eigen::Matrix3d& mat) : m(mat) {}

  DualConic normalized() const;
  Vector6 vech6() const;
  /// Translational components, positions (3,5) of vech6: (-t1, -t2) when normalized.
  Eigen::Vector2d center_components() const;
};

/// Symmetric 4x4 dual quadric. normalized() rescales so (3,3) = -1.
struct DualQuadric {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();

  DualQuadric() = default;
  explicit DualQuadric(const Eigen::Matrix4d& mat) : m(mat) {}

  DualQuadric normalized() const;
  Vector10 vech10() const;
};

/// Ellipsoid in decomposed form. Axes are canonically sorted a >= b >= c > 0,
/// rotation is proper orthonormal (det = +1).
struct Ellipsoid3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d axes = Eigen::Vector3d::Ones();  // (a, b, c), a >= b >= c
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

/// Why a dual quadric failed to decompose into a valid ellipsoid.
struct Degenerate {
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();  // of the shape matrix
  std::string reason;
};

/// Known 3x4 full-rank perspective camera.
struct CameraMatrix {
  Matrix34 P = Matrix34::Zero();

  CameraMatrix() { P.leftCols<3>().setIdentity(); }
  explicit CameraMatrix(const Matrix34& mat) : P(mat) {}

  /// Camera center as the null space of P (inhomogeneous).
  Eigen::Vector3d center() const;
};

}  // namespace vgfm
