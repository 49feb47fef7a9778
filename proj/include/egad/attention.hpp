#pragma once

// Multi-head self-attention that carries first-layer GCN weights from one
// snapshot to the next. For node u with attention neighborhood N_u (its graph
// neighbors plus itself, with self weight 1):
//
//   s(u,v)   = sigmoid( A(u,v) * a^T [H W(u) || H W(v)] )
//   alpha_u  = softmax of s(u, .) over N_u
//   z^j(u)   = sum_v alpha_{u,v} H_j W(v)
//   W'(u)    = ELU( mean_j z^j(u) )
//
// Rows of nodes absent from the snapshot are carried over unchanged.

#include <vector>

#include "egad/graph.hpp"
#include "egad/record.hpp"

namespace egad {

struct AttentionHeadParams {
  Matrix h;  // d1 x d1
  Matrix a;  // 2*d1 x 1
};

struct TransitionParams {
  std::vector<AttentionHeadParams> heads;
};

/// Recorded handles for one head.
struct HeadVars {
  Var h;
  Var a;
};

/// Edge weights seen by the attention scores: A with a unit diagonal.
inline Matrix attention_weights(const SnapshotGraph& g) {
  Matrix w = g.dense_adjacency();
  for (std::size_t i = 0; i < w.rows(); ++i) w(i, i) = 1.0;
  return w;
}

/// 1 where v is in N_u (graph neighbor or u itself), 0 elsewhere.
inline Matrix attention_mask(const SnapshotGraph& g) {
  Matrix m = attention_weights(g);
  for (double& x : m.data()) x = x != 0.0 ? 1.0 : 0.0;
  return m;
}

/// Snapshot-level constants reused by every head and epoch.
struct AttentionInputs {
  Matrix weights;
  Matrix mask;
  std::vector<std::size_t> rows;

  explicit AttentionInputs(const SnapshotGraph& g)
      : weights(attention_weights(g)), mask(attention_mask(g)), rows(g.global_rows()) {}
};

namespace detail {

struct HeadOutput {
  Var alpha;      // n_k x n_k, zero outside N_u
  Var projected;  // n_k x d1, row u = (H W_prev(u))^T
};

inline HeadOutput attend(const AttentionInputs& in, HeadVars head, Var w_prev) {
  Recorder& rec = w_prev.recorder();
  const std::size_t d1 = w_prev.cols();
  const std::size_t n = in.rows.size();
  if (head.h.rows() != d1 || head.h.cols() != d1 || head.a.rows() != 2 * d1 || head.a.cols() != 1) {
    throw ShapeError("attention: head shapes H " + head.h.value().shape_str() + ", a " + head.a.value().shape_str() +
                     " do not match d1=" + std::to_string(d1));
  }
  Var projected = matmul(gather_rows(w_prev, in.rows), transpose(head.h));
  Var self_term = matmul(projected, slice_rows(head.a, 0, d1));
  Var nbr_term = matmul(projected, slice_rows(head.a, d1, 2 * d1));
  Var ones_row = rec.constant(Matrix(1, n, 1.0));
  Var ones_col = rec.constant(Matrix(n, 1, 1.0));
  Var pair = add(matmul(self_term, ones_row), matmul(ones_col, transpose(nbr_term)));
  Var scores = sigmoid(hadamard(pair, rec.constant(in.weights)));
  return {masked_softmax_rows(scores, in.mask), projected};
}

}  // namespace detail

/// Row u holds alpha_{u,v} for v in N_u and 0 elsewhere (snapshot-local order).
inline Var attention_coefficients(const AttentionInputs& in, HeadVars head, Var w_prev) {
  return detail::attend(in, head, w_prev).alpha;
}

inline Var attention_coefficients(const SnapshotGraph& g, HeadVars head, Var w_prev) {
  return attention_coefficients(AttentionInputs(g), head, w_prev);
}

/// First-layer weights for snapshot k from those of snapshot k-1.
inline Var evolve_weights(const AttentionInputs& in, const std::vector<HeadVars>& heads, Var w_prev) {
  if (heads.empty()) throw ShapeError("evolve_weights: need at least one head");
  Var total;
  for (const HeadVars& head : heads) {
    auto [alpha, projected] = detail::attend(in, head, w_prev);
    Var z = matmul(alpha, projected);
    total = total.valid() ? add(total, z) : z;
  }
  Var mean = heads.size() == 1 ? total : scale(total, 1.0 / static_cast<double>(heads.size()));
  return scatter_rows(w_prev, in.rows, elu(mean));
}

inline Var evolve_weights(const SnapshotGraph& g, const std::vector<HeadVars>& heads, Var w_prev) {
  return evolve_weights(AttentionInputs(g), heads, w_prev);
}

}  // namespace egad
