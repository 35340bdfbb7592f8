#include "vgfm/scene_io.hpp"

#include <charconv>
#include <set>

#include <nlohmann/json.hpp>

#include "vgfm/graph.hpp"

namespace vgfm {

namespace {

using nlohmann::json;

// Shortest round-trip representation keeps files diffable and byte-stable.
std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json num(double v) { return json(v); }

json camera_to_json(int frame_id, const CameraMatrix& cam) {
  std::vector<double> p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) p.push_back(cam.P(r, c));
  return {{"frame_id", frame_id}, {"P", p}};
}

CameraMatrix camera_from_json(const json& j) {
  const auto& p = j.at("P");
  if (p.size() != 12)
    throw InvalidInput("camera field 'P' must hold 12 row-major reals");
  Matrix34 m;
  int k = 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = p[k++];
  Eigen::JacobiSVD<Matrix34> svd(m);
  if (svd.singularValues()[2] < 1e-12 * svd.singularValues()[0])
    throw InvalidInput("camera matrix is rank-deficient");
  return CameraMatrix(m);
}

json ellipsoid_to_json(const Ellipsoid3D& e) {
  std::vector<double> rot;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(e.rotation(r, c));
  return {{"center", {e.center.x(), e.center.y(), e.center.z()}},
          {"axes", {e.axes.x(), e.axes.y(), e.axes.z()}},
          {"rotation", rot}};
}

Ellipsoid3D ellipsoid_from_json(const json& j) {
  Ellipsoid3D e;
  const auto& c = j.at("center");
  const auto& a = j.at("axes");
  const auto& r = j.at("rotation");
  if (c.size() != 3 || a.size() != 3 || r.size() != 9)
    throw InvalidInput("ellipsoid fields must be center[3], axes[3], rotation[9]");
  e.center = Eigen::Vector3d(c[0].get<double>(), c[1].get<double>(),
                             c[2].get<double>());
  e.axes = Eigen::Vector3d(a[0].get<double>(), a[1].get<double>(),
                           a[2].get<double>());
  int k = 0;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) e.rotation(row, col) = r[k++];
  return e;
}

json bbox_to_json(const BoundingBox& b) {
  return {b.x_min, b.y_min, b.x_max, b.y_max};
}

BoundingBox bbox_from_json(const json& j) {
  if (j.size() != 4)
    throw InvalidInput("bbox must be [x_min, y_min, x_max, y_max]");
  BoundingBox b{j[0], j[1], j[2], j[3]};
  b.validate();
  return b;
}

}  // namespace

SceneFile scene_file_from_scene(const SyntheticScene& scene) {
  SceneFile s;
  for (int f = 0; f < static_cast<int>(scene.cameras.size()); ++f)
    s.cameras.emplace_back(f, scene.cameras[f]);
  s.tracks = scene.tracks;
  for (int i = 0; i < static_cast<int>(scene.ground_truth.size()); ++i)
    s.ground_truth.emplace_back(scene.tracks[i].object_id,
                                scene.ground_truth[i]);
  return s;
}

std::string scene_file_to_json(const SceneFile& s) {
  json j;
  j["version"] = s.version;
  j["cameras"] = json::array();
  for (const auto& [fid, cam] : s.cameras)
    j["cameras"].push_back(camera_to_json(fid, cam));
  j["tracks"] = json::array();
  for (std::size_t t = 0; t < s.tracks.size(); ++t) {
    const auto& track = s.tracks[t];
    json jt;
    jt["object_id"] = track.object_id;
    if (t < s.labels.size() && !s.labels[t].empty()) jt["label"] = s.labels[t];
    jt["detections"] = json::array();
    for (std::size_t k = 0; k < track.frame_ids.size(); ++k) {
      json jd = {{"frame_id", track.frame_ids[k]},
                 {"bbox", bbox_to_json(track.boxes[k])}};
      if (!track.conics.empty()) {
        // Exact observations: record the true projected conic so a solve
        // from this file is not limited to the box-inscribed approximation.
        const Vector6 v = track.conics[k].vech6();
        jd["dual_conic"] = std::vector<double>(v.data(), v.data() + 6);
      }
      jt["detections"].push_back(jd);
    }
    j["tracks"].push_back(jt);
  }
  if (!s.ground_truth.empty()) {
    j["ground_truth"] = json::array();
    for (const auto& [oid, e] : s.ground_truth) {
      json je = ellipsoid_to_json(e);
      je["object_id"] = oid;
      j["ground_truth"].push_back(je);
    }
  }
  if (s.provenance) j["provenance"] = json::parse(*s.provenance);
  return j.dump(2) + "\n";
}

SceneFile scene_file_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("scene file parse error: ") + e.what());
  }
  SceneFile s;
  try {
    s.version = j.at("version");
    std::set<int> frame_ids;
    for (const auto& jc : j.at("cameras")) {
      const int fid = jc.at("frame_id");
      if (!frame_ids.insert(fid).second)
        throw InvalidInput("duplicate camera frame_id");
      s.cameras.emplace_back(fid, camera_from_json(jc));
    }
    for (const auto& jt : j.at("tracks")) {
      ObjectTrack track;
      track.object_id = jt.at("object_id");
      for (const auto& jd : jt.at("detections")) {
        const int fid = jd.at("frame_id");
        if (!frame_ids.count(fid))
          throw InvalidInput("track references unknown frame_id " +
                             std::to_string(fid));
        track.frame_ids.push_back(fid);
        track.boxes.push_back(bbox_from_json(jd.at("bbox")));
        if (jd.contains("dual_conic")) {
          const auto& jv = jd["dual_conic"];
          if (jv.size() != 6)
            throw InvalidInput("detection dual_conic must hold 6 reals");
          Vector6 v;
          for (int i = 0; i < 6; ++i) v[i] = jv[i].get<double>();
          track.conics.push_back(DualConic(unvech6(v)));
        }
      }
      if (!track.conics.empty() && track.conics.size() != track.frame_ids.size())
        throw InvalidInput("dual_conic must be given for all detections or none");
      track.validate();
      s.tracks.push_back(std::move(track));
      s.labels.push_back(jt.value("label", ""));
    }
    if (j.contains("ground_truth"))
      for (const auto& je : j["ground_truth"])
        s.ground_truth.emplace_back(je.at("object_id"),
                                    ellipsoid_from_json(je));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("scene file field error: ") + e.what());
  }
  return s;
}

std::vector<CameraMatrix> camera_table(const SceneFile& s) {
  int max_id = -1;
  for (const auto& [fid, cam] : s.cameras) max_id = std::max(max_id, fid);
  std::vector<CameraMatrix> cams(max_id + 1);
  for (const auto& [fid, cam] : s.cameras) cams[fid] = cam;
  return cams;
}

std::string results_to_json(const std::vector<SolveResult>& results,
                            const SceneFile& scene,
                            const std::string& provenance) {
  const auto cams = camera_table(scene);
  json j;
  j["version"] = 1;
  j["provenance"] = json::parse(provenance);
  j["objects"] = json::array();
  for (const auto& r : results) {
    json jo;
    jo["object_id"] = r.object_id;
    jo["method"] = method_name(r.method);
    jo["valid"] = r.valid();
    jo["smallest_singular_value"] = r.smallest_singular_value;
    if (!r.error.empty()) jo["error"] = r.error;
    jo["betas"] = std::vector<double>(r.betas.data(),
                                      r.betas.data() + r.betas.size());
    if (r.normalizable && r.error.empty()) {
      std::vector<double> q;
      for (int row = 0; row < 4; ++row)
        for (int col = 0; col < 4; ++col) q.push_back(r.quadric.m(row, col));
      jo["dual_quadric"] = q;
    }
    if (r.valid()) {
      const auto& e = std::get<Ellipsoid3D>(r.ellipsoid);
      jo["ellipsoid"] = ellipsoid_to_json(e);
      // Reprojections for every frame the object was tracked in.
      const ObjectTrack* track = nullptr;
      for (const auto& t : scene.tracks)
        if (t.object_id == r.object_id) track = &t;
      if (track) {
        jo["reprojections"] = json::array();
        for (int fid : track->frame_ids) {
          const Ellipse2D ell = ellipse_from_dual_conic(
              project_dual_quadric(r.quadric, cams[fid]));
          jo["reprojections"].push_back(
              {{"frame_id", fid},
               {"center", {ell.center.x(), ell.center.y()}},
               {"semi_axes", {ell.semi_axis1, ell.semi_axis2}},
               {"orientation", ell.orientation}});
        }
      }
    } else if (std::holds_alternative<Degenerate>(r.ellipsoid)) {
      const auto& d = std::get<Degenerate>(r.ellipsoid);
      jo["degenerate"] = {{"reason", d.reason},
                          {"eigenvalues",
                           {d.eigenvalues[0], d.eigenvalues[1],
                            d.eigenvalues[2]}}};
    }
    j["objects"].push_back(jo);
  }
  return j.dump(2) + "\n";
}

std::vector<std::pair<std::int64_t, Ellipsoid3D>> ellipsoids_from_json(
    const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("parse error: ") + e.what());
  }
  std::vector<std::pair<std::int64_t, Ellipsoid3D>> out;
  if (j.contains("ground_truth")) {
    for (const auto& je : j["ground_truth"])
      out.emplace_back(je.at("object_id"), ellipsoid_from_json(je));
  } else if (j.contains("objects")) {
    for (const auto& jo : j["objects"])
      if (jo.value("valid", false))
        out.emplace_back(jo.at("object_id"),
                         ellipsoid_from_json(jo.at("ellipsoid")));
  } else {
    throw InvalidInput("file holds neither ground_truth nor solver results");
  }
  return out;
}

std::string metrics_to_csv(const std::vector<MetricsRecord>& records) {
  std::string csv = "scene,object,method,valid,o3d,trans_err,axis_err,span_deg\n";
  for (const auto& r : records) {
    csv += std::to_string(r.scene_id) + "," + std::to_string(r.object_id) +
           "," + method_name(r.method) + "," + (r.valid ? "1" : "0") + "," +
           (r.valid ? fmt(r.o3d) : "") + "," +
           (r.valid ? fmt(r.translation_error) : "") + "," +
           (r.valid ? fmt(r.axis_error) : "") + "," + fmt(r.span_deg) + "\n";
  }
  return csv;
}

namespace {

json nan_safe(double v) { return std::isnan(v) ? json() : json(v); }

json vector_nan_safe(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(nan_safe(x));
  return arr;
}

}  // namespace

std::string summary_to_json(const EvalSummary& summary,
                            const std::string& provenance) {
  json j;
  j["version"] = 1;
  j["provenance"] = json::parse(provenance);
  j["bin_width_deg"] = summary.bin_width_deg;
  j["bin_max_deg"] = summary.bin_max_deg;
  j["methods"] = json::array();
  for (const auto& m : summary.methods) {
    j["methods"].push_back({{"method", method_name(m.method)},
                            {"total", m.total},
                            {"valid", m.valid},
                            {"validity_rate", m.validity_rate},
                            {"mean_o3d", nan_safe(m.mean_o3d)},
                            {"median_translation_error",
                             nan_safe(m.median_translation_error)},
                            {"median_axis_error", nan_safe(m.median_axis_error)},
                            {"bin_o3d", vector_nan_safe(m.bin_o3d)},
                            {"bin_translation", vector_nan_safe(m.bin_translation)},
                            {"bin_axis", vector_nan_safe(m.bin_axis)}});
  }
  return j.dump(2) + "\n";
}

std::string features_to_json(
    const std::vector<std::pair<std::int64_t, Ellipsoid3D>>& objects,
    const std::string& provenance) {
  json j;
  j["version"] = 1;
  j["provenance"] = json::parse(provenance);
  j["keypoint_order"] =
      "center, +a*r1, -a*r1, +b*r2, -b*r2, +c*r3, -c*r3 (object i then j)";
  j["pairs"] = json::array();
  for (const auto& [id_i, ei] : objects)
    for (const auto& [id_j, ej] : objects) {
      if (id_i == id_j) continue;
      const Eigen::VectorXd g = pair_geometric_feature(ei, ej);
      j["pairs"].push_back(
          {{"subject", id_i},
           {"object", id_j},
           {"g", std::vector<double>(g.data(), g.data() + g.size())}});
    }
  return j.dump(2) + "\n";
}

}  // namespace vgfm
