#pragma once

#include <optional>
#include <variant>

#include "vgfm/types.hpp"

namespace vgfm {

// vech serializes the lower triangle of a symmetric matrix in column order:
// 3x3 -> [m11,m12,m13,m22,m23,m33], 4x4 -> [m11,m12,m13,m14,m22,m23,m24,m33,m34,m44].
// This puts conic centers at positions (3,5) and quadric centers at (4,7,9)
// (1-based); the solvers rely on that layout.

Vector6 vech(const Eigen::Matrix3d& sym, double tol = 1e-9);
Vector10 vech(const Eigen::Matrix4d& sym, double tol = 1e-9);
Eigen::Matrix3d unvech6(const Vector6& v);
Eigen::Matrix4d unvech10(const Vector10& v);

/// Ellipse inscribed in a bounding box: axis-aligned, centered at the box midpoint.
Ellipse2D ellipse_from_bbox(const BoundingBox& bbox);

/// Dual conic of an ellipse, normalized so element (2,2) = -1.
DualConic dual_conic_from_ellipse(const Ellipse2D& e);

/// Parametric form of a normalized dual conic (must be a real ellipse).
Ellipse2D ellipse_from_dual_conic(const DualConic& c);

/// Dual quadric of an ellipsoid: Z diag(a^2,b^2,c^2,-1) Z^T.
DualQuadric compose_dual_quadric(const Ellipsoid3D& e);

/// Projects a dual quadric through a camera: normalize(P Q PT).
/// Throws NumericalError when the projected conic cannot be normalized.
DualConic project_dual_quadric(const DualQuadric& q, const CameraMatrix& cam);

/// Splits a dual quadric into center + shape. Returns Degenerate when the
/// centered shape matrix is not positive definite (threshold relative to its
/// trace). Throws NumericalError when Q(3,3) vanishes and the quadric cannot
/// be normalized at all.
std::variant<Ellipsoid3D, Degenerate> decompose_dual_quadric(const DualQuadric& q);

/// Axis-aligned extents of the ellipse represented by a dual conic.
BoundingBox bbox_from_dual_conic(const DualConic& c);

}  // namespace vgfm
