#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vgfm/types.hpp"

namespace vgfm {

struct Ellipsoid3D;

/// 7 keypoints per ellipsoid (center + the 6 axis extremities), concatenated
/// for the ordered pair (i, j): 42 numbers. Order per object: center,
/// t +/- a r1, t +/- b r2, t +/- c r3 (plus before minus).
Eigen::VectorXd pair_geometric_feature(const Ellipsoid3D& ei,
                                       const Ellipsoid3D& ej);

/// Weights of one GRU family (z/r/candidate), each matrix d x 2d acting on
/// the concatenation [m, h].
struct GruWeights {
  Eigen::MatrixXd w_z, w_r, w_h;
  Eigen::VectorXd b_z, b_r, b_h;

  static GruWeights zero(int d);
  static GruWeights random(int d, std::uint64_t seed, double scale = 0.1);
};

/// Gate vectors (each 2d) plus the two shared GRU families.
struct MessageWeights {
  int d = 0;
  Eigen::VectorXd a1, a2;       // object message gates
  Eigen::VectorXd b1, b2, b3;   // relation message gates
  Eigen::VectorXd c1, c2;       // cross-image fusion gates
  GruWeights gru_object;
  GruWeights gru_relation;

  static MessageWeights zero(int d);
  static MessageWeights random(int d, std::uint64_t seed, double scale = 0.1);

  void validate() const;
};

/// Random affine-plus-tanh stand-in for the geometric encoder (42 -> d).
struct GeometricEncoder {
  Eigen::MatrixXd w;  // d x 42
  Eigen::VectorXd b;  // d

  static GeometricEncoder random(int d, std::uint64_t seed, double scale = 0.1);
  Eigen::VectorXd encode(const Eigen::VectorXd& g42) const;
};

/// Hidden states of one image's tri-partite graph. Relations are ordered
/// pairs (i, j), i != j; geometric vectors are fixed observations of
/// dimension d (already encoded).
struct FrameState {
  std::vector<Eigen::VectorXd> h_object;                // n_objects entries
  std::vector<Eigen::VectorXd> h_relation;              // parallel to `relations`
};

struct GraphState {
  int n_objects = 0;
  std::vector<std::pair<int, int>> relations;           // ordered pairs, i != j
  std::vector<Eigen::VectorXd> g_relation;              // fixed, parallel to relations
  std::vector<FrameState> frames;

  /// Fully connected relation set over n objects.
  static GraphState fully_connected(int n_objects, int n_frames, int d);
  void validate(int d) const;
};

/// Gated sum of incident relation hiddens (both edge directions).
Eigen::VectorXd object_message(int i, const GraphState& g, int frame,
                               const MessageWeights& w);

/// Gated sum of the two endpoint hiddens and the geometric vector.
Eigen::VectorXd relation_message(int rel_index, const GraphState& g, int frame,
                                 const MessageWeights& w);

/// Cross-image fusion messages for one frame: (per-relation, per-object).
std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>>
fusion_messages(int frame, const GraphState& g, const MessageWeights& w);

/// Standard GRU step on the concatenation [m, h].
Eigen::VectorXd gru_update(const Eigen::VectorXd& h, const Eigen::VectorXd& m,
                           const GruWeights& w);

/// K synchronous rounds: all messages from the pre-round state, then every
/// hidden updated through its family's GRU. Geometric vectors never change.
GraphState run_message_passing(const GraphState& g, const MessageWeights& w,
                               int k);

/// JSON weight-bundle round trip (shapes + row-major float arrays).
std::string weights_to_json(const MessageWeights& w);
MessageWeights weights_from_json(const std::string& json_text);

}  // namespace vgfm
