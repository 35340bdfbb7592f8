#pragma once

#include <cstdint>
#include <vector>

#include "vgfm/solvers.hpp"

namespace vgfm {

struct SceneConfig {
  int n_objects = 5;
  int n_frames = 5;
  double room_half_extent = 1.5;   // meters, objects placed in [-e, e]^3
  double axis_min = 0.2;           // meters
  double axis_max = 0.8;
  double arc_radius = 4.0;         // camera distance from scene origin
  double span_deg = 20.0;          // angle covered by the camera arc
  double focal_px = 500.0;
  int image_width = 640;
  int image_height = 480;
};

struct SyntheticScene {
  std::uint64_t seed = 0;
  SceneConfig config;
  std::vector<Ellipsoid3D> ground_truth;     // indexed by object id
  std::vector<CameraMatrix> cameras;         // indexed by frame id
  std::vector<ObjectTrack> tracks;           // exact boxes from projected conics
};

struct MetricsRecord {
  std::int64_t scene_id = 0;
  std::int64_t object_id = 0;
  Method method = Method::LfD;
  bool valid = false;
  double o3d = 0;                // [0,1]; meaningful only when valid
  double translation_error = 0;  // meters
  double axis_error = 0;         // meters
  double span_deg = 0;
};

struct MethodSummary {
  Method method = Method::LfD;
  int total = 0;
  int valid = 0;
  double validity_rate = 0;
  double mean_o3d = 0;           // over objects valid under all methods
  double median_translation_error = 0;  // ditto
  double median_axis_error = 0;         // ditto
  std::vector<double> bin_o3d;          // per-angle-bin means, NaN when empty
  std::vector<double> bin_translation;
  std::vector<double> bin_axis;
};

struct EvalSummary {
  std::vector<MethodSummary> methods;
  double bin_width_deg = 1.0;
  double bin_max_deg = 10.0;
};

/// Deterministic per (config, seed). Bounding boxes are the axis-aligned
/// extents of each object's exact projected ellipse.
SyntheticScene generate_scene(const SceneConfig& config, std::uint64_t seed);

/// Adds i.i.d. Gaussian noise (std sigma_px) to every box corner, clamped to
/// the image. sigma_px = 0 returns the input unchanged.
SyntheticScene perturb_bboxes(const SyntheticScene& scene, double sigma_px,
                              std::uint64_t seed);

/// Monte-Carlo volumetric IoU over the union's axis-aligned bounding box.
/// Symmetric by construction (both ellipsoids are tested against one shared
/// sample stream). Disjoint bounding boxes short-circuit to 0.
double iou_3d(const Ellipsoid3D& a, const Ellipsoid3D& b,
              std::int64_t n_samples = 100000, std::uint64_t seed = 0);

/// Serial reference for iou_3d; identical results on the same inputs.
double iou_3d_serial(const Ellipsoid3D& a, const Ellipsoid3D& b,
                     std::int64_t n_samples = 100000, std::uint64_t seed = 0);

/// (|t_est - t_gt|, mean |sorted axis difference|).
std::pair<double, double> pose_metrics(const Ellipsoid3D& est,
                                       const Ellipsoid3D& gt);

/// Maximum angle (degrees) subtended at the object center by camera centers.
double baseline_angle(const std::vector<CameraMatrix>& cams,
                      const Eigen::Vector3d& object_center);

struct EvalOptions {
  std::int64_t iou_samples = 100000;
  std::uint64_t iou_seed = 0;
  double bin_width_deg = 1.0;
  double bin_max_deg = 10.0;
};

/// Runs every method on every scene. O_3D / error summaries use only objects
/// valid under all methods; validity rates use everything.
std::pair<std::vector<MetricsRecord>, EvalSummary> evaluate(
    const std::vector<Method>& methods, const std::vector<SyntheticScene>& scenes,
    const EvalOptions& opts = {});

/// Mixes a master seed with a stream index into an independent sub-seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace vgfm
