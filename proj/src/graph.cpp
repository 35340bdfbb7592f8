#include "vgfm/graph.hpp"

#include <random>

#include <nlohmann/json.hpp>

#include "vgfm/dual_geometry.hpp"

namespace vgfm {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double gate(const Eigen::VectorXd& weight, const Eigen::VectorXd& left,
            const Eigen::VectorXd& right) {
  if (weight.size() != left.size() + right.size())
    throw InvalidInput("gate weight dimension mismatch");
  return sigmoid(weight.head(left.size()).dot(left) +
                 weight.tail(right.size()).dot(right));
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng,
                              double scale) {
  std::normal_distribution<double> gauss(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = gauss(rng);
  return m;
}

}  // namespace

Eigen::VectorXd pair_geometric_feature(const Ellipsoid3D& ei,
                                       const Ellipsoid3D& ej) {
  Eigen::VectorXd g(42);
  int k = 0;
  for (const Ellipsoid3D* e : {&ei, &ej}) {
    g.segment<3>(k) = e->center;
    k += 3;
    for (int axis = 0; axis < 3; ++axis) {
      const Eigen::Vector3d dir = e->rotation.col(axis) * e->axes[axis];
      g.segment<3>(k) = e->center + dir;
      g.segment<3>(k + 3) = e->center - dir;
      k += 6;
    }
  }
  return g;
}

GruWeights GruWeights::zero(int d) {
  GruWeights w;
  w.w_z = w.w_r = w.w_h = Eigen::MatrixXd::Zero(d, 2 * d);
  w.b_z = w.b_r = w.b_h = Eigen::VectorXd::Zero(d);
  return w;
}

GruWeights GruWeights::random(int d, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  GruWeights w;
  w.w_z = random_matrix(d, 2 * d, rng, scale);
  w.w_r = random_matrix(d, 2 * d, rng, scale);
  w.w_h = random_matrix(d, 2 * d, rng, scale);
  w.b_z = random_matrix(d, 1, rng, scale);
  w.b_r = random_matrix(d, 1, rng, scale);
  w.b_h = random_matrix(d, 1, rng, scale);
  return w;
}

MessageWeights MessageWeights::zero(int d) {
  MessageWeights w;
  w.d = d;
  w.a1 = w.a2 = w.b1 = w.b2 = w.b3 = w.c1 = w.c2 =
      Eigen::VectorXd::Zero(2 * d);
  w.gru_object = GruWeights::zero(d);
  w.gru_relation = GruWeights::zero(d);
  return w;
}

MessageWeights MessageWeights::random(int d, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  MessageWeights w;
  w.d = d;
  for (Eigen::VectorXd* v : {&w.a1, &w.a2, &w.b1, &w.b2, &w.b3, &w.c1, &w.c2})
    *v = random_matrix(2 * d, 1, rng, scale);
  w.gru_object = GruWeights::random(d, rng(), scale);
  w.gru_relation = GruWeights::random(d, rng(), scale);
  return w;
}

void MessageWeights::validate() const {
  for (const Eigen::VectorXd* v : {&a1, &a2, &b1, &b2, &b3, &c1, &c2})
    if (v->size() != 2 * d) throw InvalidInput("gate vector must have length 2d");
  for (const GruWeights* g : {&gru_object, &gru_relation}) {
    if (g->w_z.rows() != d || g->w_z.cols() != 2 * d ||
        g->w_r.rows() != d || g->w_r.cols() != 2 * d ||
        g->w_h.rows() != d || g->w_h.cols() != 2 * d)
      throw InvalidInput("GRU matrices must be d x 2d");
    if (g->b_z.size() != d || g->b_r.size() != d || g->b_h.size() != d)
      throw InvalidInput("GRU biases must have length d");
  }
}

GeometricEncoder GeometricEncoder::random(int d, std::uint64_t seed,
                                          double scale) {
  std::mt19937_64 rng(seed);
  GeometricEncoder e;
  e.w = random_matrix(d, 42, rng, scale);
  e.b = random_matrix(d, 1, rng, scale);
  return e;
}

Eigen::VectorXd GeometricEncoder::encode(const Eigen::VectorXd& g42) const {
  if (g42.size() != 42) throw InvalidInput("geometric feature must be 42-dim");
  return (w * g42 + b).array().tanh();
}

GraphState GraphState::fully_connected(int n_objects, int n_frames, int d) {
  GraphState g;
  g.n_objects = n_objects;
  for (int i = 0; i < n_objects; ++i)
    for (int j = 0; j < n_objects; ++j)
      if (i != j) g.relations.emplace_back(i, j);
  g.g_relation.assign(g.relations.size(), Eigen::VectorXd::Zero(d));
  g.frames.resize(n_frames);
  for (auto& f : g.frames) {
    f.h_object.assign(n_objects, Eigen::VectorXd::Zero(d));
    f.h_relation.assign(g.relations.size(), Eigen::VectorXd::Zero(d));
  }
  return g;
}

void GraphState::validate(int d) const {
  for (const auto& [i, j] : relations)
    if (i == j || i < 0 || j < 0 || i >= n_objects || j >= n_objects)
      throw InvalidInput("relation indices out of range or self-loop");
  if (g_relation.size() != relations.size())
    throw InvalidInput("one geometric vector required per relation");
  for (const auto& g : g_relation)
    if (g.size() != d) throw InvalidInput("geometric vector dimension mismatch");
  for (const auto& f : frames) {
    if (static_cast<int>(f.h_object.size()) != n_objects ||
        f.h_relation.size() != relations.size())
      throw InvalidInput("frame state sizes inconsistent with the graph");
    for (const auto& h : f.h_object)
      if (h.size() != d) throw InvalidInput("hidden dimension mismatch");
    for (const auto& h : f.h_relation)
      if (h.size() != d) throw InvalidInput("hidden dimension mismatch");
  }
}

Eigen::VectorXd object_message(int i, const GraphState& g, int frame,
                               const MessageWeights& w) {
  const FrameState& f = g.frames.at(frame);
  const Eigen::VectorXd& h_i = f.h_object.at(i);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(h_i.size());
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    const auto& [a, b] = g.relations[r];
    const Eigen::VectorXd& h_rel = f.h_relation[r];
    if (a == i) m += gate(w.a1, h_i, h_rel) * h_rel;   // outgoing i -> j
    if (b == i) m += gate(w.a2, h_i, h_rel) * h_rel;   // incoming j -> i
  }
  return m;
}

Eigen::VectorXd relation_message(int rel_index, const GraphState& g, int frame,
                                 const MessageWeights& w) {
  const FrameState& f = g.frames.at(frame);
  const auto& [i, j] = g.relations.at(rel_index);
  const Eigen::VectorXd& h_rel = f.h_relation[rel_index];
  const Eigen::VectorXd& geo = g.g_relation[rel_index];
  return gate(w.b1, f.h_object[i], h_rel) * f.h_object[i] +
         gate(w.b2, f.h_object[j], h_rel) * f.h_object[j] +
         gate(w.b3, geo, h_rel) * geo;
}

std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>>
fusion_messages(int frame, const GraphState& g, const MessageWeights& w) {
  const int n_frames = static_cast<int>(g.frames.size());
  const FrameState& f = g.frames.at(frame);

  std::vector<Eigen::VectorXd> m_rel(g.relations.size());
  std::vector<Eigen::VectorXd> m_obj(g.n_objects);
  for (std::size_t r = 0; r < g.relations.size(); ++r)
    m_rel[r] = Eigen::VectorXd::Zero(f.h_relation[r].size());
  for (int i = 0; i < g.n_objects; ++i)
    m_obj[i] = Eigen::VectorXd::Zero(f.h_object[i].size());
  if (n_frames < 2) return {m_rel, m_obj};

  for (int l = 0; l < n_frames; ++l) {
    if (l == frame) continue;
    const FrameState& other = g.frames[l];
    for (std::size_t r = 0; r < g.relations.size(); ++r)
      m_rel[r] +=
          gate(w.c1, f.h_relation[r], other.h_relation[r]) * other.h_relation[r];
    for (int i = 0; i < g.n_objects; ++i)
      m_obj[i] += gate(w.c2, f.h_object[i], other.h_object[i]) *
                  other.h_object[i];
  }
  for (int i = 0; i < g.n_objects; ++i) m_obj[i] /= n_frames;
  return {m_rel, m_obj};
}

Eigen::VectorXd gru_update(const Eigen::VectorXd& h, const Eigen::VectorXd& m,
                           const GruWeights& w) {
  const auto d = h.size();
  if (m.size() != d || w.w_z.cols() != 2 * d)
    throw InvalidInput("GRU dimension mismatch");
  Eigen::VectorXd mh(2 * d);
  mh << m, h;
  auto sig = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return (1.0 + (-x.array()).exp()).inverse();
  };
  const Eigen::VectorXd z = sig(w.w_z * mh + w.b_z);
  const Eigen::VectorXd r = sig(w.w_r * mh + w.b_r);
  Eigen::VectorXd m_rh(2 * d);
  m_rh << m, (r.array() * h.array()).matrix();
  const Eigen::VectorXd cand = (w.w_h * m_rh + w.b_h).array().tanh();
  return ((1.0 - z.array()) * h.array() + z.array() * cand.array()).matrix();
}

GraphState run_message_passing(const GraphState& g, const MessageWeights& w,
                               int k) {
  if (k < 0) throw InvalidInput("iteration count must be >= 0");
  w.validate();
  g.validate(w.d);

  GraphState state = g;
  for (int round = 0; round < k; ++round) {
    GraphState next = state;
    const int n_frames = static_cast<int>(state.frames.size());
    for (int f = 0; f < n_frames; ++f) {
      auto [fusion_rel, fusion_obj] = fusion_messages(f, state, w);
      // All messages read the pre-round state; writes go to `next`.
#pragma omp parallel for schedule(static)
      for (int i = 0; i < state.n_objects; ++i) {
        const Eigen::VectorXd m = object_message(i, state, f, w) + fusion_obj[i];
        next.frames[f].h_object[i] =
            gru_update(state.frames[f].h_object[i], m, w.gru_object);
      }
      const int n_rel = static_cast<int>(state.relations.size());
#pragma omp parallel for schedule(static)
      for (int r = 0; r < n_rel; ++r) {
        const Eigen::VectorXd m = relation_message(r, state, f, w) + fusion_rel[r];
        next.frames[f].h_relation[r] =
            gru_update(state.frames[f].h_relation[r], m, w.gru_relation);
      }
    }
    state = std::move(next);
  }
  return state;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const int rows = j.at("rows"), cols = j.at("cols");
  const auto& data = j.at("data");
  if (static_cast<int>(data.size()) != rows * cols)
    throw InvalidInput("weight array size does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  int k = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data[k++];
  return m;
}

nlohmann::json gru_to_json(const GruWeights& g) {
  return {{"w_z", matrix_to_json(g.w_z)}, {"w_r", matrix_to_json(g.w_r)},
          {"w_h", matrix_to_json(g.w_h)}, {"b_z", matrix_to_json(g.b_z)},
          {"b_r", matrix_to_json(g.b_r)}, {"b_h", matrix_to_json(g.b_h)}};
}

GruWeights gru_from_json(const nlohmann::json& j) {
  GruWeights g;
  g.w_z = matrix_from_json(j.at("w_z"));
  g.w_r = matrix_from_json(j.at("w_r"));
  g.w_h = matrix_from_json(j.at("w_h"));
  g.b_z = matrix_from_json(j.at("b_z")).col(0);
  g.b_r = matrix_from_json(j.at("b_r")).col(0);
  g.b_h = matrix_from_json(j.at("b_h")).col(0);
  return g;
}

}  // namespace

std::string weights_to_json(const MessageWeights& w) {
  nlohmann::json j;
  j["version"] = 1;
  j["d"] = w.d;
  j["a1"] = matrix_to_json(w.a1);
  j["a2"] = matrix_to_json(w.a2);
  j["b1"] = matrix_to_json(w.b1);
  j["b2"] = matrix_to_json(w.b2);
  j["b3"] = matrix_to_json(w.b3);
  j["c1"] = matrix_to_json(w.c1);
  j["c2"] = matrix_to_json(w.c2);
  j["gru_object"] = gru_to_json(w.gru_object);
  j["gru_relation"] = gru_to_json(w.gru_relation);
  return j.dump(2);
}

MessageWeights weights_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  MessageWeights w;
  w.d = j.at("d");
  w.a1 = matrix_from_json(j.at("a1")).col(0);
  w.a2 = matrix_from_json(j.at("a2")).col(0);
  w.b1 = matrix_from_json(j.at("b1")).col(0);
  w.b2 = matrix_from_json(j.at("b2")).col(0);
  w.b3 = matrix_from_json(j.at("b3")).col(0);
  w.c1 = matrix_from_json(j.at("c1")).col(0);
  w.c2 = matrix_from_json(j.at("c2")).col(0);
  w.gru_object = gru_from_json(j.at("gru_object"));
  w.gru_relation = gru_from_json(j.at("gru_relation"));
  w.validate();
  return w;
}

}  // namespace vgfm
