#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "vgfm/dual_geometry.hpp"

namespace vgfm {

enum class Method { LfD, LfDC };

const char* method_name(Method m);

/// One object's detections across frames. Indices into a shared camera list.
/// When `conics` is filled (exact synthetic observations) it is used as-is;
/// otherwise each frame's dual conic is derived as the ellipse inscribed in
/// its bounding box.
struct ObjectTrack {
  std::int64_t object_id = 0;
  std::vector<int> frame_ids;        // unique, >= 3 entries
  std::vector<BoundingBox> boxes;    // parallel to frame_ids
  std::vector<DualConic> conics;     // optional; parallel to frame_ids if set

  std::vector<DualConic> observed_conics() const;
  void validate() const;
};

struct SolveResult {
  Method method = Method::LfD;
  std::int64_t object_id = 0;
  Eigen::VectorXd w;                 // unit (10+F)-vector from the SVD
  DualQuadric quadric;               // normalized, element (3,3) = -1
  Eigen::VectorXd betas;             // per-frame scales, rescaled with the quadric
  std::variant<Ellipsoid3D, Degenerate> ellipsoid;
  double smallest_singular_value = 0;
  bool normalizable = true;          // false when |v10| ~ 0
  std::string error;                 // per-object failure captured by localize

  bool valid() const {
    return error.empty() && normalizable &&
           std::holds_alternative<Ellipsoid3D>(ellipsoid);
  }
};

/// 6x10 linearized projection: vech6(P Q PT) = G vech10(Q).
/// Built as D (P kron P) E with the duplication/elimination pair.
Eigen::Matrix<double, 6, 10> build_G(const CameraMatrix& cam);

/// 2x10 center-constraint rows: G_c vech10(Q) = -(P [t;1])_{1,2}
/// for a normalized quadric centered at t.
Eigen::Matrix<double, 2, 10> build_Gc(const CameraMatrix& cam);

/// Stacked LfD system, 6F x (10+F). Conics are normalized (last element -1)
/// before entering the system.
Eigen::MatrixXd assemble_lfd(const std::vector<DualConic>& conics,
                             const std::vector<CameraMatrix>& cams);

/// Inverse of the conic's centering transform H = [[h,0,t1],[0,h,t2],[0,0,1]]
/// with t the ellipse center and h = sqrt(l1^2 + l2^2). Applying it to the
/// conic (H^-1 C H^-T) moves the ellipse to the origin at unit scale; the
/// matching camera is H^-1 P.
Eigen::Matrix3d centering_inverse(const DualConic& conic);

/// LfDC system, 8F x (10+F): per frame the 6 projection rows followed by the
/// 2 center rows, sharing the frame's scale column. Each frame is expressed
/// in its conic's centered coordinates (H^-1 applied to conic and camera), so
/// the center rows constrain the projected quadric center toward the ellipse
/// center at the projective depth's scale.
Eigen::MatrixXd assemble_lfdc(const std::vector<DualConic>& conics,
                              const std::vector<CameraMatrix>& cams);

struct HomogeneousSolution {
  Eigen::VectorXd w;  // unit norm
  double smallest_singular_value = 0;
  bool rank_warning = false;  // more than a rank-2 gap near zero
};

/// argmin |Mw| s.t. |w| = 1 via SVD. Sign fixed so w[9] <= 0.
HomogeneousSolution solve_homogeneous(const Eigen::MatrixXd& m);

/// Splits w into quadric + betas, rescales so the quadric's (3,3) = -1,
/// and decomposes. F is the frame count.
SolveResult recover(const Eigen::VectorXd& w, int frame_count);

/// Solves one track with the given method. Cameras are the track's cameras,
/// parallel to its frames.
SolveResult solve_track(Method method, const ObjectTrack& track,
                        const std::vector<CameraMatrix>& cams);

/// Conic-level entry point (used when conics come from elsewhere than boxes).
SolveResult solve_conics(Method method, const std::vector<DualConic>& conics,
                         const std::vector<CameraMatrix>& cams);

/// Independent per-object solves, ordered by object_id. `cams[f]` is the
/// camera for frame id f as referenced by the tracks. OpenMP-parallel over
/// objects; results are identical to localize_serial.
std::vector<SolveResult> localize(Method method,
                                  const std::vector<ObjectTrack>& tracks,
                                  const std::vector<CameraMatrix>& cams);

/// Reference implementation, one object at a time.
std::vector<SolveResult> localize_serial(Method method,
                                         const std::vector<ObjectTrack>& tracks,
                                         const std::vector<CameraMatrix>& cams);

}  // namespace vgfm
