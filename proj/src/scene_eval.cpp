#include "vgfm/scene_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace vgfm {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  return q.toRotationMatrix();
}

CameraMatrix look_at_camera(const Eigen::Vector3d& center, double focal,
                            double cx, double cy) {
  const Eigen::Vector3d z = (-center).normalized();  // toward the origin
  Eigen::Vector3d up(0, 1, 0);
  if (std::abs(up.dot(z)) > 0.99) up = Eigen::Vector3d(1, 0, 0);
  const Eigen::Vector3d x = up.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);

  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;

  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = k(1, 1) = focal;
  k(0, 2) = cx;
  k(1, 2) = cy;

  Matrix34 p;
  p.leftCols<3>() = r;
  p.col(3) = -r * center;
  return CameraMatrix(Matrix34(k * p));
}

bool box_inside_image(const BoundingBox& b, const SceneConfig& cfg) {
  return b.x_min >= 0 && b.y_min >= 0 && b.x_max <= cfg.image_width &&
         b.y_max <= cfg.image_height;
}

}  // namespace

SyntheticScene generate_scene(const SceneConfig& config, std::uint64_t seed) {
  if (config.n_frames < 3)
    throw InvalidInput("scene needs at least 3 frames");
  if (config.span_deg <= 0)
    throw InvalidInput("degenerate config: camera span must be positive");
  if (config.n_objects < 0) throw InvalidInput("negative object count");

  SyntheticScene scene;
  scene.seed = seed;
  scene.config = config;

  const double span = config.span_deg * M_PI / 180.0;
  for (int f = 0; f < config.n_frames; ++f) {
    const double phi =
        span * (static_cast<double>(f) / (config.n_frames - 1) - 0.5);
    const Eigen::Vector3d c(config.arc_radius * std::sin(phi), 0.2,
                            config.arc_radius * std::cos(phi));
    scene.cameras.push_back(look_at_camera(c, config.focal_px,
                                           config.image_width / 2.0,
                                           config.image_height / 2.0));
  }

  std::mt19937_64 rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> pos(-config.room_half_extent,
                                             config.room_half_extent);
  std::uniform_real_distribution<double> ax(config.axis_min, config.axis_max);

  for (int i = 0; i < config.n_objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      Ellipsoid3D e;
      e.center = {pos(rng), pos(rng), pos(rng)};
      Eigen::Vector3d axes(ax(rng), ax(rng), ax(rng));
      std::sort(axes.data(), axes.data() + 3, std::greater<double>());
      e.axes = axes;
      e.rotation = random_rotation(rng);

      const DualQuadric q = compose_dual_quadric(e);
      ObjectTrack track;
      track.object_id = i;
      bool visible = true;
      for (int f = 0; f < config.n_frames && visible; ++f) {
        const Eigen::Vector4d th = e.center.homogeneous();
        if (scene.cameras[f].P.row(2).dot(th) <= 0) {
          visible = false;
          break;
        }
        BoundingBox b;
        DualConic projected;
        try {
          projected = project_dual_quadric(q, scene.cameras[f]);
          b = bbox_from_dual_conic(projected);
        } catch (const NumericalError&) {
          visible = false;
          break;
        }
        if (!box_inside_image(b, config)) {
          visible = false;
          break;
        }
        track.frame_ids.push_back(f);
        track.boxes.push_back(b);
        // Round through vech6 so the stored matrix is bitwise symmetric and
        // survives serialization unchanged.
        track.conics.push_back(DualConic(unvech6(projected.vech6())));
      }
      if (visible) {
        scene.ground_truth.push_back(e);
        scene.tracks.push_back(std::move(track));
        placed = true;
      }
    }
    if (!placed)
      throw NumericalError(
          "scene generation failed: could not place a visible object");
  }
  return scene;
}

SyntheticScene perturb_bboxes(const SyntheticScene& scene, double sigma_px,
                              std::uint64_t seed) {
  if (sigma_px < 0) throw InvalidInput("noise sigma must be >= 0");
  if (sigma_px == 0) return scene;

  SyntheticScene out = scene;
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::normal_distribution<double> noise(0.0, sigma_px);
  const double w = scene.config.image_width, h = scene.config.image_height;

  for (auto& track : out.tracks) {
    // Noisy boxes no longer match the exact projected conics; the solvers
    // fall back to the ellipse inscribed in each perturbed box.
    track.conics.clear();
    for (auto& b : track.boxes) {
      b.x_min = std::clamp(b.x_min + noise(rng), 0.0, w);
      b.y_min = std::clamp(b.y_min + noise(rng), 0.0, h);
      b.x_max = std::clamp(b.x_max + noise(rng), 0.0, w);
      b.y_max = std::clamp(b.y_max + noise(rng), 0.0, h);
      if (b.x_min >= b.x_max) {
        const double mid = 0.5 * (b.x_min + b.x_max);
        b.x_min = mid - 0.5;
        b.x_max = mid + 0.5;
      }
      if (b.y_min >= b.y_max) {
        const double mid = 0.5 * (b.y_min + b.y_max);
        b.y_min = mid - 0.5;
        b.y_max = mid + 0.5;
      }
    }
  }
  return out;
}

namespace {

struct Aabb {
  Eigen::Vector3d lo, hi;
};

Aabb ellipsoid_aabb(const Ellipsoid3D& e) {
  Eigen::Vector3d extent;
  for (int i = 0; i < 3; ++i) {
    double s = 0;
    for (int j = 0; j < 3; ++j) {
      const double v = e.rotation(i, j) * e.axes[j];
      s += v * v;
    }
    extent[i] = std::sqrt(s);
  }
  return {e.center - extent, e.center + extent};
}

bool inside(const Ellipsoid3D& e, const Eigen::Vector3d& x) {
  const Eigen::Vector3d y = e.rotation.transpose() * (x - e.center);
  const double r = (y.array() / e.axes.array()).square().sum();
  return r <= 1.0;
}

constexpr std::int64_t kIouChunk = 8192;

// One chunk of the shared sample stream; returns (intersection, union) hits.
std::pair<std::int64_t, std::int64_t> iou_chunk(
    const Ellipsoid3D& a, const Ellipsoid3D& b, const Aabb& box,
    std::int64_t count, std::uint64_t chunk_seed) {
  std::mt19937_64 rng(chunk_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::int64_t inter = 0, uni = 0;
  for (std::int64_t s = 0; s < count; ++s) {
    Eigen::Vector3d x;
    for (int i = 0; i < 3; ++i)
      x[i] = box.lo[i] + u(rng) * (box.hi[i] - box.lo[i]);
    const bool in_a = inside(a, x);
    const bool in_b = inside(b, x);
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  return {inter, uni};
}

}  // namespace

double iou_3d_serial(const Ellipsoid3D& a, const Ellipsoid3D& b,
                     std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 10000) throw InvalidInput("iou_3d needs >= 1e4 samples");
  const Aabb ba = ellipsoid_aabb(a), bb = ellipsoid_aabb(b);
  for (int i = 0; i < 3; ++i)
    if (ba.hi[i] < bb.lo[i] || bb.hi[i] < ba.lo[i]) return 0.0;

  const Aabb joint{ba.lo.cwiseMin(bb.lo), ba.hi.cwiseMax(bb.hi)};
  const std::int64_t n_chunks = (n_samples + kIouChunk - 1) / kIouChunk;
  std::int64_t inter = 0, uni = 0;
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    const std::int64_t count = std::min(kIouChunk, n_samples - c * kIouChunk);
    auto [ci, cu] = iou_chunk(a, b, joint, count, derive_seed(seed, c));
    inter += ci;
    uni += cu;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double iou_3d(const Ellipsoid3D& a, const Ellipsoid3D& b,
              std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 10000) throw InvalidInput("iou_3d needs >= 1e4 samples");
  const Aabb ba = ellipsoid_aabb(a), bb = ellipsoid_aabb(b);
  for (int i = 0; i < 3; ++i)
    if (ba.hi[i] < bb.lo[i] || bb.hi[i] < ba.lo[i]) return 0.0;

  const Aabb joint{ba.lo.cwiseMin(bb.lo), ba.hi.cwiseMax(bb.hi)};
  const std::int64_t n_chunks = (n_samples + kIouChunk - 1) / kIouChunk;
  std::int64_t inter = 0, uni = 0;
  // Integer per-chunk tallies: the reduction order cannot change the result.
#pragma omp parallel for reduction(+ : inter, uni) schedule(static)
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    const std::int64_t count = std::min(kIouChunk, n_samples - c * kIouChunk);
    auto [ci, cu] = iou_chunk(a, b, joint, count, derive_seed(seed, c));
    inter += ci;
    uni += cu;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::pair<double, double> pose_metrics(const Ellipsoid3D& est,
                                       const Ellipsoid3D& gt) {
  const double trans = (est.center - gt.center).norm();
  // Axes are canonically sorted descending on both sides.
  const double axis = (est.axes - gt.axes).cwiseAbs().mean();
  return {trans, axis};
}

double baseline_angle(const std::vector<CameraMatrix>& cams,
                      const Eigen::Vector3d& object_center) {
  if (cams.size() < 2) throw InvalidInput("baseline angle needs >= 2 cameras");
  if (!object_center.allFinite())
    throw InvalidInput("object center must be finite");

  std::vector<Eigen::Vector3d> rays;
  rays.reserve(cams.size());
  for (const auto& cam : cams) {
    const Eigen::Vector3d d = cam.center() - object_center;
    if (d.norm() < 1e-12)
      throw InvalidInput("camera center coincides with the object center");
    rays.push_back(d.normalized());
  }
  double max_angle = 0;
  for (std::size_t i = 0; i < rays.size(); ++i)
    for (std::size_t j = i + 1; j < rays.size(); ++j) {
      const double angle =
          std::atan2(rays[i].cross(rays[j]).norm(), rays[i].dot(rays[j]));
      max_angle = std::max(max_angle, angle);
    }
  return max_angle * 180.0 / M_PI;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    m = 0.5 * (m + lo);
  }
  return m;
}

}  // namespace

std::pair<std::vector<MetricsRecord>, EvalSummary> evaluate(
    const std::vector<Method>& methods,
    const std::vector<SyntheticScene>& scenes, const EvalOptions& opts) {
  const int n_scenes = static_cast<int>(scenes.size());
  // One record vector per scene, filled independently; scenes may run in
  // parallel, the flattening below fixes the order.
  std::vector<std::vector<MetricsRecord>> per_scene(n_scenes);

#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n_scenes; ++s) {
    const SyntheticScene& scene = scenes[s];
    std::vector<MetricsRecord>& recs = per_scene[s];
    for (Method method : methods) {
      const auto results = localize_serial(method, scene.tracks, scene.cameras);
      for (const auto& res : results) {
        MetricsRecord r;
        r.scene_id = s;
        r.object_id = res.object_id;
        r.method = method;
        r.valid = res.valid();
        const Ellipsoid3D& gt = scene.ground_truth[res.object_id];
        r.span_deg = baseline_angle(scene.cameras, gt.center);
        if (r.valid) {
          const auto& est = std::get<Ellipsoid3D>(res.ellipsoid);
          r.o3d = iou_3d_serial(
              est, gt, opts.iou_samples,
              derive_seed(opts.iou_seed,
                          (static_cast<std::uint64_t>(s) << 24) ^
                              (static_cast<std::uint64_t>(res.object_id) << 4) ^
                              static_cast<std::uint64_t>(method)));
          auto [trans, axis] = pose_metrics(est, gt);
          r.translation_error = trans;
          r.axis_error = axis;
        }
        recs.push_back(r);
      }
    }
  }

  std::vector<MetricsRecord> records;
  for (auto& recs : per_scene)
    records.insert(records.end(), recs.begin(), recs.end());

  // Objects valid under all methods form the comparison set.
  std::vector<std::pair<std::int64_t, std::int64_t>> all_valid;
  {
    std::vector<std::pair<std::int64_t, std::int64_t>> keys;
    for (const auto& r : records)
      if (r.method == methods.front())
        keys.emplace_back(r.scene_id, r.object_id);
    for (const auto& key : keys) {
      bool ok = true;
      for (const auto& r : records)
        if (r.scene_id == key.first && r.object_id == key.second && !r.valid)
          ok = false;
      if (ok) all_valid.push_back(key);
    }
  }
  auto in_comparison = [&](const MetricsRecord& r) {
    return std::find(all_valid.begin(), all_valid.end(),
                     std::make_pair(r.scene_id, r.object_id)) !=
           all_valid.end();
  };

  EvalSummary summary;
  summary.bin_width_deg = opts.bin_width_deg;
  summary.bin_max_deg = opts.bin_max_deg;
  const int n_bins =
      static_cast<int>(std::ceil(opts.bin_max_deg / opts.bin_width_deg));

  for (Method method : methods) {
    MethodSummary ms;
    ms.method = method;
    std::vector<double> o3d, trans, axis;
    std::vector<std::vector<double>> bo(n_bins), bt(n_bins), bx(n_bins);
    for (const auto& r : records) {
      if (r.method != method) continue;
      ++ms.total;
      if (r.valid) ++ms.valid;
      if (!r.valid || !in_comparison(r)) continue;
      o3d.push_back(r.o3d);
      trans.push_back(r.translation_error);
      axis.push_back(r.axis_error);
      const int bin = std::min(
          n_bins - 1, static_cast<int>(r.span_deg / opts.bin_width_deg));
      bo[bin].push_back(r.o3d);
      bt[bin].push_back(r.translation_error);
      bx[bin].push_back(r.axis_error);
    }
    ms.validity_rate = ms.total ? static_cast<double>(ms.valid) / ms.total : 0;
    ms.mean_o3d =
        o3d.empty() ? std::numeric_limits<double>::quiet_NaN()
                    : std::accumulate(o3d.begin(), o3d.end(), 0.0) / o3d.size();
    ms.median_translation_error = median(trans);
    ms.median_axis_error = median(axis);
    auto bin_mean = [](const std::vector<double>& v) {
      return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    for (int b = 0; b < n_bins; ++b) {
      ms.bin_o3d.push_back(bin_mean(bo[b]));
      ms.bin_translation.push_back(bin_mean(bt[b]));
      ms.bin_axis.push_back(bin_mean(bx[b]));
    }
    summary.methods.push_back(std::move(ms));
  }
  return {std::move(records), summary};
}

}  // namespace vgfm
