#include <doctest.h>

#include <random>

#include "vgfm/scene_eval.hpp"
#include "vgfm/solvers.hpp"

using namespace vgfm;

namespace {

Matrix34 random_camera_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix34 p;
  do {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) p(r, c) = g(rng);
  } while (Eigen::JacobiSVD<Matrix34>(p).singularValues()[2] < 0.1);
  return p;
}

Ellipsoid3D random_ellipsoid(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-1.5, 1.5);
  std::uniform_real_distribution<double> ax(0.2, 0.8);
  std::normal_distribution<double> g;
  Ellipsoid3D e;
  e.center = {pos(rng), pos(rng), pos(rng)};
  Eigen::Vector3d axes(ax(rng), ax(rng), ax(rng));
  std::sort(axes.data(), axes.data() + 3, std::greater<double>());
  e.axes = axes;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  e.rotation = q.toRotationMatrix();
  return e;
}

// Exact w for a ground-truth quadric: v normalized to v[10] = -1 and the
// betas implied by each frame's projection scale.
Eigen::VectorXd exact_solution(const DualQuadric& q,
                               const std::vector<CameraMatrix>& cams) {
  const DualQuadric qn = q.normalized();
  Eigen::VectorXd w(10 + cams.size());
  w.head<10>() = qn.vech10();
  for (std::size_t f = 0; f < cams.size(); ++f) {
    const Eigen::Matrix3d raw = cams[f].P * qn.m * cams[f].P.transpose();
    w[10 + f] = -raw(2, 2);  // scale against the (2,2) = -1 normalization
  }
  return w;
}

}  // namespace

TEST_CASE("build_G with identity camera selects quadric block positions") {
  Matrix34 p = Matrix34::Zero();
  p.leftCols<3>().setIdentity();
  const auto g = build_G(CameraMatrix(p));
  // vech10 positions {1,2,3,5,6,8} (1-based) carry the top-left 3x3 block.
  const int expected_cols[6] = {0, 1, 2, 4, 5, 7};
  for (int row = 0; row < 6; ++row)
    for (int col = 0; col < 10; ++col)
      CHECK(g(row, col) == (col == expected_cols[row] ? 1.0 : 0.0));
}

TEST_CASE("build_G first-row entries match the explicit product form") {
  std::mt19937_64 rng(2);
  const Matrix34 p = random_camera_matrix(rng);
  const auto g = build_G(CameraMatrix(p));
  CHECK(g(0, 0) == doctest::Approx(p(0, 0) * p(0, 0)));
  CHECK(g(0, 1) == doctest::Approx(2 * p(0, 1) * p(0, 0)));
  CHECK(g(0, 2) == doctest::Approx(2 * p(0, 2) * p(0, 0)));
  CHECK(g(0, 9) == doctest::Approx(p(0, 3) * p(0, 3)));
  // second row, mixed products
  CHECK(g(1, 0) == doctest::Approx(p(1, 0) * p(0, 0)));
  CHECK(g(1, 1) == doctest::Approx(p(1, 0) * p(0, 1) + p(1, 1) * p(0, 0)));
}

TEST_CASE("G reproduces the projection oracle on random pairs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix34 p = random_camera_matrix(rng);
    const DualQuadric q = compose_dual_quadric(random_ellipsoid(rng));
    const Vector6 via_g = build_G(CameraMatrix(p)) * q.vech10();
    const Vector6 direct = vech(Eigen::Matrix3d(p * q.m * p.transpose()));
    CHECK((via_g - direct).cwiseAbs().maxCoeff() <
          1e-9 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("build_Gc layout and center selection") {
  Matrix34 p = Matrix34::Zero();
  p.leftCols<3>().setIdentity();
  const auto gc = build_Gc(CameraMatrix(p));
  for (int col = 0; col < 10; ++col) {
    CHECK(gc(0, col) == (col == 3 ? 1.0 : 0.0));
    CHECK(gc(1, col) == (col == 6 ? 1.0 : 0.0));
  }

  Ellipsoid3D sphere;
  sphere.center = {1, 2, 3};
  const DualQuadric q = compose_dual_quadric(sphere).normalized();
  const Eigen::Vector2d v = gc * q.vech10();
  CHECK(v.x() == doctest::Approx(-1));
  CHECK(v.y() == doctest::Approx(-2));
}

TEST_CASE("Gc equals the homogeneous center projection on random input") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix34 p = random_camera_matrix(rng);
    const Ellipsoid3D e = random_ellipsoid(rng);
    const DualQuadric q = compose_dual_quadric(e).normalized();
    const Eigen::Vector2d via_gc = build_Gc(CameraMatrix(p)) * q.vech10();
    const Eigen::Vector3d proj = p * e.center.homogeneous();
    CHECK(via_gc.x() == doctest::Approx(-proj.x()).epsilon(1e-9));
    CHECK(via_gc.y() == doctest::Approx(-proj.y()).epsilon(1e-9));
  }
}

TEST_CASE("system shapes match the stated dimensions at F=3") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 1, .n_frames = 3}, 1);
  std::vector<DualConic> conics;
  for (const auto& b : scene.tracks[0].boxes)
    conics.push_back(dual_conic_from_ellipse(ellipse_from_bbox(b)));

  const Eigen::MatrixXd m = assemble_lfd(conics, scene.cameras);
  CHECK(m.rows() == 18);
  CHECK(m.cols() == 13);
  // column 11 is nonzero only in the first frame's rows
  CHECK(m.col(10).head(6).cwiseAbs().maxCoeff() > 0);
  CHECK(m.col(10).tail(12).cwiseAbs().maxCoeff() == 0);

  const Eigen::MatrixXd mc = assemble_lfdc(conics, scene.cameras);
  CHECK(mc.rows() == 24);
  CHECK(mc.cols() == 13);
  // rows 7-8 are [Gc_1 | -c*_1 | 0 ...] in the first conic's centered
  // coordinates, where the centered conic's (3,5) entries vanish.
  const Eigen::Matrix3d hinv = centering_inverse(conics[0]);
  const auto gc = build_Gc(CameraMatrix(Matrix34(hinv * scene.cameras[0].P)));
  CHECK((mc.block<2, 10>(6, 0) - gc).cwiseAbs().maxCoeff() == 0);
  CHECK(std::abs(mc(6, 10)) < 1e-12);
  CHECK(std::abs(mc(7, 10)) < 1e-12);
  CHECK(mc.block<2, 2>(6, 11).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("fewer than 3 views is rejected") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 1, .n_frames = 3}, 1);
  std::vector<DualConic> conics;
  for (const auto& b : scene.tracks[0].boxes)
    conics.push_back(dual_conic_from_ellipse(ellipse_from_bbox(b)));
  conics.resize(2);
  std::vector<CameraMatrix> cams(scene.cameras.begin(),
                                 scene.cameras.begin() + 2);
  CHECK_THROWS_AS(assemble_lfd(conics, cams), InvalidInput);
  CHECK_THROWS_AS(assemble_lfdc(conics, cams), InvalidInput);
}

TEST_CASE("observed_conics prefers stored conics over box-derived ones") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 1, .n_frames = 3}, 1);
  ObjectTrack with = scene.tracks[0];
  ObjectTrack without = with;
  without.conics.clear();

  const auto exact = with.observed_conics();
  const auto inscribed = without.observed_conics();
  REQUIRE(exact.size() == inscribed.size());
  for (std::size_t k = 0; k < exact.size(); ++k) {
    CHECK(exact[k].m == with.conics[k].m);
    // Same box, hence same center, but the inscribed ellipse is axis-aligned.
    const Vector6 a = exact[k].normalized().vech6();
    const Vector6 b = inscribed[k].normalized().vech6();
    CHECK(a[2] == doctest::Approx(b[2]).epsilon(1e-9));
    CHECK(a[4] == doctest::Approx(b[4]).epsilon(1e-9));
    // axis-aligned shape: element 2 reduces to -t1*t2, no h^2 c12 term
    CHECK(b[1] == doctest::Approx(-b[2] * b[4]).epsilon(1e-9));
  }
}

TEST_CASE("exact ground-truth vector annihilates the projection rows") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 3, .n_frames = 5}, 4);
  for (std::size_t t = 0; t < scene.tracks.size(); ++t) {
    const std::vector<DualConic>& conics = scene.tracks[t].conics;
    REQUIRE(conics.size() == scene.tracks[t].frame_ids.size());
    const DualQuadric q = compose_dual_quadric(scene.ground_truth[t]);
    const Eigen::VectorXd w = exact_solution(q, scene.cameras);

    const Eigen::MatrixXd m = assemble_lfd(conics, scene.cameras);
    CHECK((m * w).cwiseAbs().maxCoeff() < 1e-9 * w.norm());

    // The LfDC projection rows are annihilated too (the centering transform
    // preserves the per-frame scale). The two center rows cannot vanish
    // under perspective: an ellipse's center is not the image of the
    // ellipsoid's center, and the residual equals exactly that reprojected
    // center in the conic's centered coordinates.
    const Eigen::MatrixXd mc = assemble_lfdc(conics, scene.cameras);
    const Eigen::VectorXd rc = mc * w;
    const Eigen::Vector4d th = scene.ground_truth[t].center.homogeneous();
    for (int f = 0; f < 5; ++f) {
      CHECK(rc.segment<6>(8 * f).cwiseAbs().maxCoeff() < 1e-9 * w.norm());
      const Eigen::Vector3d proj =
          centering_inverse(conics[f]) * (scene.cameras[f].P * th);
      CHECK(rc[8 * f + 6] == doctest::Approx(-proj.x()).epsilon(1e-9));
      CHECK(rc[8 * f + 7] == doctest::Approx(-proj.y()).epsilon(1e-9));
    }
  }
}

TEST_CASE("center constraints rescue degenerate low-baseline solves") {
  SceneConfig cfg;
  cfg.n_objects = 5;
  cfg.n_frames = 5;
  cfg.span_deg = 3;
  int n_lfd = 0, n_lfdc = 0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto scene =
        perturb_bboxes(generate_scene(cfg, derive_seed(17, s)), 4.0,
                       derive_seed(18, s));
    const auto lfd = localize_serial(Method::LfD, scene.tracks, scene.cameras);
    const auto lfdc = localize_serial(Method::LfDC, scene.tracks, scene.cameras);
    for (std::size_t i = 0; i < lfd.size(); ++i) {
      n_lfd += lfd[i].valid();
      n_lfdc += lfdc[i].valid();
      // an LfD solve that is already valid is kept as-is
      if (lfd[i].valid()) CHECK(lfdc[i].quadric.m == lfd[i].quadric.m);
    }
  }
  CHECK(n_lfdc >= n_lfd);
  CHECK(n_lfdc > n_lfd);  // at this baseline some rescues must occur
}

TEST_CASE("solve_homogeneous basics") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0, 0, 0;
  auto sol2 = solve_homogeneous(m);
  CHECK(sol2.smallest_singular_value == doctest::Approx(0));
  CHECK(std::abs(sol2.w[1]) == doctest::Approx(1));
  CHECK(std::abs(sol2.w[0]) < 1e-12);

  m << 3, 0, 0, 1;  // orthogonal columns, singular values 3 and 1
  sol2 = solve_homogeneous(m);
  CHECK(sol2.smallest_singular_value == doctest::Approx(1));
  CHECK(std::abs(sol2.w[1]) == doctest::Approx(1));

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(12, 11);
  for (int i = 0; i < 11; ++i) d(i, i) = 3.0 - 0.1 * i;  // distinct, positive
  d(10, 10) = 0.05;
  const auto sol = solve_homogeneous(d);
  CHECK(sol.smallest_singular_value == doctest::Approx(0.05));
  CHECK(std::abs(sol.w[10]) == doctest::Approx(1.0));
  CHECK(sol.w.norm() == doctest::Approx(1.0));
  CHECK(sol.w[9] <= 0);

  CHECK_THROWS_AS(solve_homogeneous(Eigen::MatrixXd::Zero(3, 5)), InvalidInput);
}

TEST_CASE("noise-free multi-view system is rank deficient") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 2, .n_frames = 6}, 9);
  for (const auto& track : scene.tracks) {
    const Eigen::MatrixXd m = assemble_lfd(track.conics, scene.cameras);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    CHECK(s[s.size() - 1] <= 1e-9 * s[0]);
  }
}

TEST_CASE("recover rescales the quadric and betas by -1/v10") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(13);
  // a unit sphere at the origin scaled by -0.5, with betas (1,2,3)
  w.head<10>() << 1, 0, 0, 0, 1, 0, 0, 1, 0, -1;
  w.head<10>() *= 0.5;
  w.tail<3>() << 1, 2, 3;
  w.normalize();
  const SolveResult r = recover(w, 3);
  REQUIRE(r.valid());
  CHECK(r.quadric.m(3, 3) == doctest::Approx(-1));
  // v10 was -0.5 before unit normalization, so everything doubles.
  CHECK(r.betas[0] == doctest::Approx(2));
  CHECK(r.betas[1] == doctest::Approx(4));
  CHECK(r.betas[2] == doctest::Approx(6));
}

TEST_CASE("recover flags an unnormalizable solution") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(13);
  w[0] = 1;
  const SolveResult r = recover(w, 3);
  CHECK_FALSE(r.normalizable);
  CHECK_FALSE(r.valid());
}

TEST_CASE("noise-free synthetic round trip recovers ground truth") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 5, .n_frames = 6}, 21);
  for (Method method : {Method::LfD, Method::LfDC}) {
    const auto results = localize_serial(method, scene.tracks, scene.cameras);
    REQUIRE(results.size() == 5);
    for (const auto& r : results) {
      REQUIRE(r.valid());
      const DualQuadric gt =
          compose_dual_quadric(scene.ground_truth[r.object_id]).normalized();
      CHECK((r.quadric.m - gt.m).cwiseAbs().maxCoeff() < 1e-6);
      // all betas positive: object in front of every camera
      CHECK(r.betas.minCoeff() > 0);
    }
  }
}

TEST_CASE("both methods agree on exact data") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 5, .n_frames = 5}, 33);
  const auto lfd = localize_serial(Method::LfD, scene.tracks, scene.cameras);
  const auto lfdc = localize_serial(Method::LfDC, scene.tracks, scene.cameras);
  for (std::size_t i = 0; i < lfd.size(); ++i) {
    REQUIRE(lfd[i].valid());
    REQUIRE(lfdc[i].valid());
    CHECK((lfd[i].quadric.m - lfdc[i].quadric.m).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("per-frame conic rescaling leaves the quadric unchanged") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> lam(0.1, 10.0);
  const auto scene = generate_scene(SceneConfig{.n_objects = 2, .n_frames = 5}, 55);
  for (const auto& track : scene.tracks) {
    std::vector<DualConic> conics, scaled;
    for (const auto& b : track.boxes) {
      const DualConic c = dual_conic_from_ellipse(ellipse_from_bbox(b));
      conics.push_back(c);
      scaled.push_back(DualConic(Eigen::Matrix3d(lam(rng) * c.m)));
    }
    for (Method method : {Method::LfD, Method::LfDC}) {
      const auto a = solve_conics(method, conics, scene.cameras);
      const auto b = solve_conics(method, scaled, scene.cameras);
      CHECK((a.quadric.m - b.quadric.m).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("localize handles empty input and aggregates failures") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 2, .n_frames = 4}, 3);
  CHECK(localize(Method::LfD, {}, scene.cameras).empty());

  auto tracks = scene.tracks;
  tracks[0].frame_ids.resize(2);  // breaks the >= 3 frames invariant
  tracks[0].boxes.resize(2);
  const auto results = localize(Method::LfD, tracks, scene.cameras);
  REQUIRE(results.size() == 2);
  CHECK_FALSE(results[0].valid());
  CHECK(results[0].error.find("insufficient views") != std::string::npos);
  CHECK(results[1].valid());
}

TEST_CASE("parallel localize matches the serial reference") {
  const auto scene = generate_scene(SceneConfig{.n_objects = 8, .n_frames = 5}, 77);
  const auto a = localize(Method::LfDC, scene.tracks, scene.cameras);
  const auto b = localize_serial(Method::LfDC, scene.tracks, scene.cameras);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].object_id == b[i].object_id);
    CHECK(a[i].w == b[i].w);  // bitwise, not approximate
  }
}

TEST_CASE("rigid transform equivariance of the solvers") {
  std::mt19937_64 rng(67);
  std::normal_distribution<double> g;
  const auto scene = generate_scene(SceneConfig{.n_objects = 3, .n_frames = 5}, 88);

  Eigen::Quaterniond quat(g(rng), g(rng), g(rng), g(rng));
  quat.normalize();
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = quat.toRotationMatrix();
  t.topRightCorner<3, 1>() = Eigen::Vector3d(0.7, -0.3, 1.1);
  const Eigen::Matrix4d t_inv = t.inverse();

  std::vector<CameraMatrix> moved_cams;
  for (const auto& cam : scene.cameras)
    moved_cams.push_back(CameraMatrix(Matrix34(cam.P * t_inv)));

  for (Method method : {Method::LfD, Method::LfDC}) {
    const auto base = localize_serial(method, scene.tracks, scene.cameras);
    const auto moved = localize_serial(method, scene.tracks, moved_cams);
    for (std::size_t i = 0; i < base.size(); ++i) {
      REQUIRE(base[i].valid());
      REQUIRE(moved[i].valid());
      const Eigen::Matrix4d expected = t * base[i].quadric.m * t.transpose();
      const Eigen::Matrix4d got = moved[i].quadric.m * (expected(3, 3) / moved[i].quadric.m(3, 3));
      CHECK((got - expected).cwiseAbs().maxCoeff() <
            1e-6 * expected.cwiseAbs().maxCoeff());
    }
  }
}
