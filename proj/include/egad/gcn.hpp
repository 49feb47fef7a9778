#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "egad/config.hpp"
#include "egad/graph.hpp"
#include "egad/record.hpp"

namespace egad {

/// First- and second-layer weights of one GCN. W1 has one row per registered
/// node when the snapshot uses identity features.
struct GcnParams {
  Matrix w1;
  Matrix w2;
};

/// Node embeddings of one snapshot; row i belongs to nodes[i].
struct Embeddings {
  Matrix z;
  std::vector<NodeId> nodes;

  std::size_t row_of(NodeId id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it == nodes.end() || *it != id) throw LookupError("embeddings: node " + std::to_string(id.value) + " absent");
    return static_cast<std::size_t>(it - nodes.begin());
  }
  bool contains(NodeId id) const { return std::binary_search(nodes.begin(), nodes.end(), id); }
  std::span<const double> operator[](NodeId id) const { return z.row(row_of(id)); }
};

/// Node features of one snapshot: either the identity over its nodes, or an
/// explicit n_k x m matrix.
struct Features {
  std::size_t n = 0;
  std::optional<Matrix> dense;

  bool is_identity() const noexcept { return !dense.has_value(); }
  /// Width m; identity features are as wide as the node set.
  std::size_t width() const noexcept { return dense ? dense->cols() : n; }
};

inline Features identity_features(const SnapshotGraph& g) {
  if (g.features()) throw ContractError("identity_features: snapshot has explicit features");
  return Features{g.node_count(), std::nullopt};
}

/// Explicit features when the snapshot carries them, identity otherwise.
inline Features snapshot_features(const SnapshotGraph& g) {
  if (g.features()) return Features{g.node_count(), *g.features()};
  return identity_features(g);
}

/// Z = Â ReLU(Â X W1) W2.
///
/// With identity features X W1 is the selection of W1 rows listed in
/// `w1_rows`; with explicit features W1 must have m rows.
inline Var gcn_forward(Var a_hat, const Features& x, Var w1, Var w2, std::span<const std::size_t> w1_rows) {
  const std::size_t n = a_hat.rows();
  if (a_hat.cols() != n || x.n != n) {
    throw ShapeError("gcn_forward: adjacency " + a_hat.value().shape_str() + " vs " + std::to_string(x.n) + " nodes");
  }
  if (w1.cols() != w2.rows()) {
    throw ShapeError("gcn_forward: W1 " + w1.value().shape_str() + " vs W2 " + w2.value().shape_str());
  }
  Var xw;
  if (x.is_identity()) {
    if (w1_rows.size() != n) throw ShapeError("gcn_forward: need one W1 row per snapshot node");
    xw = gather_rows(w1, w1_rows);
  } else {
    xw = matmul(a_hat.recorder().constant(*x.dense), w1);
  }
  Var hidden = relu(matmul(a_hat, xw));
  return matmul(a_hat, matmul(hidden, w2));
}

/// Trainable parameters of a chain: the free W1 of the first snapshot, one W2
/// per GCN, and one (H, a) pair per transition and head.
inline std::uint64_t count_params(const ModelConfig& cfg, std::uint64_t n_global) {
  const std::uint64_t l = cfg.window, h = cfg.heads, d1 = cfg.d1, d2 = cfg.d2;
  return n_global * d1 + (l + 1) * d1 * d2 + l * h * (d1 * d1 + 2 * d1);
}

}  // namespace egad
