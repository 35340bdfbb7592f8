#pragma once

#include <optional>
#include <string>

#include "vgfm/scene_eval.hpp"

namespace vgfm {

/// On-disk scene: cameras, detection tracks, optional ground truth.
/// JSON, schema version 1. Row-major 12 reals per camera, 9 per rotation.
struct SceneFile {
  int version = 1;
  std::vector<std::pair<int, CameraMatrix>> cameras;  // (frame_id, P)
  std::vector<ObjectTrack> tracks;
  std::vector<std::string> labels;                    // optional, parallel to tracks
  std::vector<std::pair<std::int64_t, Ellipsoid3D>> ground_truth;
  std::optional<std::string> provenance;              // config/seed echo
};

SceneFile scene_file_from_scene(const SyntheticScene& scene);

std::string scene_file_to_json(const SceneFile& s);
/// Throws InvalidInput with a field diagnostic on malformed content.
SceneFile scene_file_from_json(const std::string& text);

/// Dense camera list indexed by frame id, for the solvers.
std::vector<CameraMatrix> camera_table(const SceneFile& s);

/// Per-object solve output, including per-frame reprojected ellipses.
std::string results_to_json(const std::vector<SolveResult>& results,
                            const SceneFile& scene,
                            const std::string& provenance);

/// Ellipsoids usable for feature extraction: ground truth if present,
/// otherwise parsed from a results JSON.
std::vector<std::pair<std::int64_t, Ellipsoid3D>> ellipsoids_from_json(
    const std::string& text);

std::string metrics_to_csv(const std::vector<MetricsRecord>& records);
std::string summary_to_json(const EvalSummary& summary,
                            const std::string& provenance);

/// Pair feature records for all ordered pairs of valid ellipsoids.
std::string features_to_json(
    const std::vector<std::pair<std::int64_t, Ellipsoid3D>>& objects,
    const std::string& provenance);

}  // namespace vgfm
