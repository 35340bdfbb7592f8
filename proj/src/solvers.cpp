#include "vgfm/solvers.hpp"

#include <algorithm>
#include <set>

#include <unsupported/Eigen/KroneckerProduct>

namespace vgfm {

const char* method_name(Method m) { return m == Method::LfD ? "lfd" : "lfdc"; }

void ObjectTrack::validate() const {
  if (frame_ids.size() != boxes.size())
    throw InvalidInput("track frame/box lists differ in length");
  if (frame_ids.size() < 3)
    throw InvalidInput("insufficient views: a track needs at least 3 frames");
  std::set<int> unique(frame_ids.begin(), frame_ids.end());
  if (unique.size() != frame_ids.size())
    throw InvalidInput("track has duplicate frame ids");
  if (!conics.empty() && conics.size() != frame_ids.size())
    throw InvalidInput("track conic list does not match its frame list");
  for (const auto& b : boxes) b.validate();
}

std::vector<DualConic> ObjectTrack::observed_conics() const {
  if (!conics.empty()) return conics;
  std::vector<DualConic> derived;
  derived.reserve(boxes.size());
  for (const auto& b : boxes)
    derived.push_back(dual_conic_from_ellipse(ellipse_from_bbox(b)));
  return derived;
}

namespace {

// vech index of lower-triangular (r, c), r >= c, for an n x n matrix.
int vech_index(int r, int c, int n) {
  return c * n - c * (c - 1) / 2 + (r - c);
}

// vech(X) = D vec(X) for symmetric 3x3 X.
Eigen::Matrix<double, 6, 9> elimination3() {
  Eigen::Matrix<double, 6, 9> d = Eigen::Matrix<double, 6, 9>::Zero();
  for (int c = 0; c < 3; ++c)
    for (int r = c; r < 3; ++r)
      d(vech_index(r, c, 3), c * 3 + r) = 1.0;
  return d;
}

// vec(Y) = E vech(Y) for symmetric 4x4 Y.
Eigen::Matrix<double, 16, 10> duplication4() {
  Eigen::Matrix<double, 16, 10> e = Eigen::Matrix<double, 16, 10>::Zero();
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r)
      e(c * 4 + r, vech_index(std::max(r, c), std::min(r, c), 4)) = 1.0;
  return e;
}

}  // namespace

Eigen::Matrix<double, 6, 10> build_G(const CameraMatrix& cam) {
  static const Eigen::Matrix<double, 6, 9> d = elimination3();
  static const Eigen::Matrix<double, 16, 10> e = duplication4();
  return d * Eigen::kroneckerProduct(cam.P, cam.P) * e;
}

Eigen::Matrix<double, 2, 10> build_Gc(const CameraMatrix& cam) {
  const Matrix34& p = cam.P;
  Eigen::Matrix<double, 2, 10> g = Eigen::Matrix<double, 2, 10>::Zero();
  for (int row = 0; row < 2; ++row) {
    g(row, 3) = p(row, 0);
    g(row, 6) = p(row, 1);
    g(row, 8) = p(row, 2);
    g(row, 9) = p(row, 3);
  }
  return g;
}

Eigen::MatrixXd assemble_lfd(const std::vector<DualConic>& conics,
                             const std::vector<CameraMatrix>& cams) {
  const int f_count = static_cast<int>(conics.size());
  if (f_count < 3) throw InvalidInput("insufficient views: need F >= 3");
  if (cams.size() != conics.size())
    throw InvalidInput("one camera required per tracked frame");

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(6 * f_count, 10 + f_count);
  for (int f = 0; f < f_count; ++f) {
    m.block<6, 10>(6 * f, 0) = build_G(cams[f]);
    m.block<6, 1>(6 * f, 10 + f) = -conics[f].normalized().vech6();
  }
  return m;
}

Eigen::Matrix3d centering_inverse(const DualConic& conic) {
  const Ellipse2D e = ellipse_from_dual_conic(conic);
  const double h =
      std::sqrt(e.semi_axis1 * e.semi_axis1 + e.semi_axis2 * e.semi_axis2);
  Eigen::Matrix3d hinv = Eigen::Matrix3d::Identity();
  hinv(0, 0) = hinv(1, 1) = 1.0 / h;
  hinv(0, 2) = -e.center.x() / h;
  hinv(1, 2) = -e.center.y() / h;
  return hinv;
}

Eigen::MatrixXd assemble_lfdc(const std::vector<DualConic>& conics,
                              const std::vector<CameraMatrix>& cams) {
  const int f_count = static_cast<int>(conics.size());
  if (f_count < 3) throw InvalidInput("insufficient views: need F >= 3");
  if (cams.size() != conics.size())
    throw InvalidInput("one camera required per tracked frame");

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(8 * f_count, 10 + f_count);
  for (int f = 0; f < f_count; ++f) {
    // Work in the conic's centered coordinates: the ellipse sits at the
    // origin at unit scale and the camera is transformed to match. The
    // projection rows stay exactly equivalent; the (3,5) center entries of
    // the centered conic vanish, so the center rows constrain -(H^-1 P
    // [t;1])_{1,2}, the ellipsoid center reprojected at depth scale.
    const Eigen::Matrix3d hinv = centering_inverse(conics[f]);
    const Eigen::Matrix3d centered =
        hinv * conics[f].normalized().m * hinv.transpose();
    const Vector6 c = DualConic(centered).normalized().vech6();
    const CameraMatrix cam(Matrix34(hinv * cams[f].P));
    m.block<6, 10>(8 * f, 0) = build_G(cam);
    m.block<6, 1>(8 * f, 10 + f) = -c;
    m.block<2, 10>(8 * f + 6, 0) = build_Gc(cam);
    m(8 * f + 6, 10 + f) = -c[2];
    m(8 * f + 7, 10 + f) = -c[4];
  }
  return m;
}

HomogeneousSolution solve_homogeneous(const Eigen::MatrixXd& m) {
  if (m.rows() < m.cols())
    throw InvalidInput("homogeneous system needs at least as many rows as columns");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success)
    throw NumericalError("SVD failed to converge");

  const auto& sigma = svd.singularValues();
  const int n = static_cast<int>(m.cols());

  HomogeneousSolution sol;
  sol.w = svd.matrixV().col(n - 1);
  sol.smallest_singular_value = sigma[n - 1];
  sol.rank_warning = n >= 2 && sigma[n - 2] < 1e-9 * sigma[0];
  // Deterministic sign: the quadric-scale entry goes non-positive. For small
  // systems without one, pin the first nonzero entry positive instead.
  if (n > 9) {
    if (sol.w[9] > 0) sol.w = -sol.w;
  } else {
    for (int i = 0; i < n; ++i) {
      if (sol.w[i] != 0) {
        if (sol.w[i] < 0) sol.w = -sol.w;
        break;
      }
    }
  }
  return sol;
}

SolveResult recover(const Eigen::VectorXd& w, int frame_count) {
  if (w.size() != 10 + frame_count)
    throw InvalidInput("solution vector length must be 10 + F");

  SolveResult r;
  r.w = w;
  const double v10 = w[9];
  if (std::abs(v10) < 1e-12) {
    r.normalizable = false;
    Degenerate d;
    d.reason = "quadric scale vanished: v[10] ~ 0";
    r.ellipsoid = d;
    r.betas = w.tail(frame_count);
    return r;
  }
  const double scale = -1.0 / v10;
  Vector10 v = w.head<10>() * scale;
  r.quadric = DualQuadric(unvech10(v));
  r.betas = w.tail(frame_count) * scale;
  r.ellipsoid = decompose_dual_quadric(r.quadric);
  return r;
}

SolveResult solve_conics(Method method, const std::vector<DualConic>& conics,
                         const std::vector<CameraMatrix>& cams) {
  const int f_count = static_cast<int>(conics.size());
  HomogeneousSolution sol = solve_homogeneous(assemble_lfd(conics, cams));
  SolveResult r = recover(sol.w, f_count);
  if (method == Method::LfDC && !r.valid()) {
    // Center constraints arbitrate degenerate configurations. They are kept
    // out of the well-posed path because the center of a projected ellipse
    // differs from the projected ellipsoid center under perspective, so the
    // extra rows can only approximate an exact solution the plain system
    // already contains.
    sol = solve_homogeneous(assemble_lfdc(conics, cams));
    r = recover(sol.w, f_count);
  }
  r.method = method;
  r.smallest_singular_value = sol.smallest_singular_value;
  return r;
}

SolveResult solve_track(Method method, const ObjectTrack& track,
                        const std::vector<CameraMatrix>& cams) {
  track.validate();
  std::vector<CameraMatrix> track_cams;
  track_cams.reserve(track.frame_ids.size());
  for (int fid : track.frame_ids) {
    if (fid < 0 || fid >= static_cast<int>(cams.size()))
      throw InvalidInput("track references unknown frame id");
    track_cams.push_back(cams[fid]);
  }
  SolveResult r = solve_conics(method, track.observed_conics(), track_cams);
  r.object_id = track.object_id;
  return r;
}

namespace {

SolveResult solve_track_guarded(Method method, const ObjectTrack& track,
                                const std::vector<CameraMatrix>& cams) {
  try {
    return solve_track(method, track, cams);
  } catch (const std::exception& e) {
    // Per-object failures are recorded, not propagated: one bad track must
    // not abort the batch.
    SolveResult r;
    r.method = method;
    r.object_id = track.object_id;
    r.normalizable = false;
    r.error = e.what();
    Degenerate d;
    d.reason = e.what();
    r.ellipsoid = d;
    return r;
  }
}

}  // namespace

std::vector<SolveResult> localize_serial(Method method,
                                         const std::vector<ObjectTrack>& tracks,
                                         const std::vector<CameraMatrix>& cams) {
  std::vector<SolveResult> results(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i)
    results[i] = solve_track_guarded(method, tracks[i], cams);
  std::stable_sort(results.begin(), results.end(),
                   [](const SolveResult& a, const SolveResult& b) {
                     return a.object_id < b.object_id;
                   });
  return results;
}

std::vector<SolveResult> localize(Method method,
                                  const std::vector<ObjectTrack>& tracks,
                                  const std::vector<CameraMatrix>& cams) {
  std::vector<SolveResult> results(tracks.size());
  const int n = static_cast<int>(tracks.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i)
    results[i] = solve_track_guarded(method, tracks[i], cams);
  std::stable_sort(results.begin(), results.end(),
                   [](const SolveResult& a, const SolveResult& b) {
                     return a.object_id < b.object_id;
                   });
  return results;
}

}  // namespace vgfm
