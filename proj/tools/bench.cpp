// Compares the OpenMP kernels against their serial references:
// batch localization and Monte-Carlo volume overlap.

#include <chrono>
#include <iostream>

#include <omp.h>

#include "vgfm/scene_eval.hpp"

namespace {

template <typename F>
double time_ms(F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main() {
  std::cout << "threads: " << omp_get_max_threads() << "\n";

  vgfm::SceneConfig cfg;
  cfg.n_objects = 40;
  cfg.n_frames = 8;
  const auto scene = vgfm::generate_scene(cfg, 42);

  std::vector<vgfm::SolveResult> serial, parallel;
  const double t_serial = time_ms([&] {
    serial = vgfm::localize_serial(vgfm::Method::LfDC, scene.tracks,
                                   scene.cameras);
  });
  const double t_par = time_ms([&] {
    parallel = vgfm::localize(vgfm::Method::LfDC, scene.tracks, scene.cameras);
  });
  bool same = serial.size() == parallel.size();
  for (std::size_t i = 0; same && i < serial.size(); ++i)
    same = serial[i].w == parallel[i].w;
  std::cout << "localize  (40 objects): serial " << t_serial << " ms, omp "
            << t_par << " ms, identical: " << (same ? "yes" : "NO") << "\n";

  // Overlapping pair: disjoint ellipsoids would short-circuit before sampling.
  const auto& a = scene.ground_truth[0];
  vgfm::Ellipsoid3D b = a;
  b.center += 0.5 * a.axes;
  double iou_s = 0, iou_p = 0;
  const double t_ious = time_ms([&] { iou_s = vgfm::iou_3d_serial(a, b, 4000000, 1); });
  const double t_ioup = time_ms([&] { iou_p = vgfm::iou_3d(a, b, 4000000, 1); });
  std::cout << "iou_3d    (4M samples): serial " << t_ious << " ms, omp "
            << t_ioup << " ms, identical: " << (iou_s == iou_p ? "yes" : "NO")
            << "\n";
  return same && iou_s == iou_p ? 0 : 1;
}
