#include "vgfm/dual_geometry.hpp"

#include <cmath>

namespace vgfm {

namespace {

void check_symmetric(const Eigen::MatrixXd& m, double tol) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (((m - m.transpose()).cwiseAbs().maxCoeff()) > tol * scale)
    throw InvalidInput("matrix is not symmetric within tolerance");
}

}  // namespace

Vector6 vech(const Eigen::Matrix3d& sym, double tol) {
  check_symmetric(sym, tol);
  Vector6 v;
  v << sym(0, 0), sym(1, 0), sym(2, 0), sym(1, 1), sym(2, 1), sym(2, 2);
  return v;
}

Vector10 vech(const Eigen::Matrix4d& sym, double tol) {
  check_symmetric(sym, tol);
  Vector10 v;
  v << sym(0, 0), sym(1, 0), sym(2, 0), sym(3, 0), sym(1, 1), sym(2, 1),
      sym(3, 1), sym(2, 2), sym(3, 2), sym(3, 3);
  return v;
}

Eigen::Matrix3d unvech6(const Vector6& v) {
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2],
       v[1], v[3], v[4],
       v[2], v[4], v[5];
  return m;
}

Eigen::Matrix4d unvech10(const Vector10& v) {
  Eigen::Matrix4d m;
  m << v[0], v[1], v[2], v[3],
       v[1], v[4], v[5], v[6],
       v[2], v[5], v[7], v[8],
       v[3], v[6], v[8], v[9];
  return m;
}

DualConic DualConic::normalized() const {
  if (std::abs(m(2, 2)) < 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw NumericalError("dual conic cannot be normalized: element (2,2) ~ 0");
  return DualConic(Eigen::Matrix3d(m / -m(2, 2)));
}

Vector6 DualConic::vech6() const { return vech(m); }

Eigen::Vector2d DualConic::center_components() const {
  const Vector6 v = normalized().vech6();
  return {v[2], v[4]};
}

DualQuadric DualQuadric::normalized() const {
  if (std::abs(m(3, 3)) < 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw NumericalError("dual quadric cannot be normalized: element (3,3) ~ 0");
  return DualQuadric(Eigen::Matrix4d(m / -m(3, 3)));
}

Vector10 DualQuadric::vech10() const { return vech(m); }

Eigen::Vector3d CameraMatrix::center() const {
  Eigen::JacobiSVD<Matrix34> svd(P, Eigen::ComputeFullV);
  Eigen::Vector4d c = svd.matrixV().col(3);
  if (std::abs(c[3]) < 1e-14)
    throw NumericalError("camera center at infinity");
  return c.head<3>() / c[3];
}

Ellipse2D ellipse_from_bbox(const BoundingBox& bbox) {
  bbox.validate();
  Ellipse2D e;
  e.center = {0.5 * (bbox.x_min + bbox.x_max), 0.5 * (bbox.y_min + bbox.y_max)};
  e.semi_axis1 = 0.5 * bbox.width();
  e.semi_axis2 = 0.5 * bbox.height();
  e.orientation = 0;
  return e;
}

DualConic dual_conic_from_ellipse(const Ellipse2D& e) {
  if (!(e.semi_axis1 > 0) || !(e.semi_axis2 > 0))
    throw InvalidInput("ellipse semi-axes must be positive");
  const double c = std::cos(e.orientation), s = std::sin(e.orientation);
  Eigen::Matrix3d t;
  t << c, -s, e.center.x(),
       s,  c, e.center.y(),
       0,  0, 1;
  const Eigen::Vector3d d(e.semi_axis1 * e.semi_axis1,
                          e.semi_axis2 * e.semi_axis2, -1.0);
  return DualConic(Eigen::Matrix3d(t * d.asDiagonal() * t.transpose()));
}

Ellipse2D ellipse_from_dual_conic(const DualConic& c) {
  const Eigen::Matrix3d n = c.normalized().m;
  const Eigen::Vector2d t(-n(0, 2), -n(1, 2));
  // Centered 2x2 shape block: diag part of H C H^T with the translation removed.
  Eigen::Matrix2d shape = n.topLeftCorner<2, 2>() + t * t.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(shape);
  if (eig.eigenvalues().minCoeff() <= 0)
    throw NumericalError("dual conic is not a real ellipse");
  Ellipse2D e;
  e.center = t;
  // Eigenvalues ascend; put the major axis first.
  e.semi_axis1 = std::sqrt(eig.eigenvalues()[1]);
  e.semi_axis2 = std::sqrt(eig.eigenvalues()[0]);
  const Eigen::Vector2d major = eig.eigenvectors().col(1);
  double angle = std::atan2(major.y(), major.x());
  // Wrap into [-pi/2, pi/2): an ellipse axis is direction-free.
  while (angle >= M_PI / 2) angle -= M_PI;
  while (angle < -M_PI / 2) angle += M_PI;
  e.orientation = angle;
  return e;
}

DualQuadric compose_dual_quadric(const Ellipsoid3D& e) {
  Eigen::Matrix4d z = Eigen::Matrix4d::Identity();
  z.topLeftCorner<3, 3>() = e.rotation;
  z.topRightCorner<3, 1>() = e.center;
  Eigen::Vector4d d(e.axes.x() * e.axes.x(), e.axes.y() * e.axes.y(),
                    e.axes.z() * e.axes.z(), -1.0);
  return DualQuadric(Eigen::Matrix4d(z * d.asDiagonal() * z.transpose()));
}

DualConic project_dual_quadric(const DualQuadric& q, const CameraMatrix& cam) {
  const Eigen::Matrix3d raw = cam.P * q.m * cam.P.transpose();
  return DualConic(raw).normalized();
}

std::variant<Ellipsoid3D, Degenerate> decompose_dual_quadric(const DualQuadric& q) {
  const Eigen::Matrix4d n = q.normalized().m;
  const Eigen::Vector3d t = -n.topRightCorner<3, 1>();
  const Eigen::Matrix3d shape = n.topLeftCorner<3, 3>() + t * t.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(shape);
  const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
  const double eps_pos = 1e-9 * std::abs(shape.trace());
  if (evals.minCoeff() <= eps_pos) {
    Degenerate d;
    d.eigenvalues = evals;
    d.reason = "shape matrix not positive definite";
    return d;
  }

  Ellipsoid3D e;
  e.center = t;
  // Descending axes: a >= b >= c.
  e.axes = {std::sqrt(evals[2]), std::sqrt(evals[1]), std::sqrt(evals[0])};
  Eigen::Matrix3d r;
  r.col(0) = eig.eigenvectors().col(2);
  r.col(1) = eig.eigenvectors().col(1);
  r.col(2) = eig.eigenvectors().col(0);
  if (r.determinant() < 0) r.col(2) = -r.col(2);
  e.rotation = r;
  return e;
}

BoundingBox bbox_from_dual_conic(const DualConic& c) {
  const Eigen::Matrix3d n = c.normalized().m;
  const double t1 = -n(0, 2), t2 = -n(1, 2);
  const double dx = n(0, 0) + t1 * t1;
  const double dy = n(1, 1) + t2 * t2;
  if (dx <= 0 || dy <= 0)
    throw NumericalError("dual conic has no real axis-aligned extents");
  BoundingBox b;
  b.x_min = t1 - std::sqrt(dx);
  b.x_max = t1 + std::sqrt(dx);
  b.y_min = t2 - std::sqrt(dy);
  b.y_max = t2 + std::sqrt(dy);
  return b;
}

}  // namespace vgfm
