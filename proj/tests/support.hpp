#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "egad/egad.hpp"

namespace egad {
inline void PrintTo(const Matrix& m, std::ostream* os) {
  *os << m.shape_str() << " [";
  for (std::size_t i = 0; i < m.size(); ++i) *os << (i ? ", " : "") << m.data()[i];
  *os << "]";
}
}  // namespace egad

namespace egad::testing {

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (double& x : m.data()) x = d(rng);
  return m;
}

/// Random raw event: `n_nodes` raw ids spread over K snapshots, each snapshot
/// a random subset of nodes with edge probability p.
inline RawEvent random_raw_event(std::size_t n_nodes, std::size_t K, double p, std::mt19937_64& rng,
                                 double presence = 0.8) {
  RawEvent ev;
  ev.name = "random";
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> w(1.0, 100.0);
  std::vector<std::int64_t> raw(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) raw[i] = static_cast<std::int64_t>(1000 + 7 * i);
  std::shuffle(raw.begin(), raw.end(), rng);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::int64_t> present;
    for (auto id : raw)
      if (u(rng) < presence) present.push_back(id);
    std::vector<RawEdge> edges;
    for (std::size_t i = 0; i < present.size(); ++i)
      for (std::size_t j = i + 1; j < present.size(); ++j)
        if (u(rng) < p) edges.push_back({present[i], present[j], w(rng)});
    if (edges.empty() && present.size() >= 2) edges.push_back({present[0], present[1], w(rng)});
    ev.snapshots.push_back(std::move(edges));
  }
  return ev;
}

/// Random snapshot over global ids [0, n_global) with n nodes present.
inline SnapshotGraph random_snapshot(std::size_t n, std::size_t n_global, double p, std::mt19937_64& rng) {
  std::vector<std::uint32_t> ids(n_global);
  for (std::uint32_t i = 0; i < n_global; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.05, 0.95);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) edges.push_back({NodeId{ids[i]}, NodeId{ids[j]}, w(rng)});
  std::vector<NodeId> extra;
  for (auto id : ids) extra.push_back(NodeId{id});
  return SnapshotGraph(0, std::move(edges), std::move(extra));
}

/// Largest per-coordinate relative error between the recorded gradient of
/// `loss_of` and central differences with step h. Coordinates whose gradients
/// are both below `floor` in magnitude are compared against `floor` instead.
struct GradCheck {
  double max_rel = 0.0;
  std::size_t coordinates = 0;
};

inline GradCheck check_gradients(std::vector<Matrix*> params, const std::function<Var(Recorder&, std::vector<Var>&)>& loss_of,
                                 double h = 1e-5, double floor = 1e-6) {
  Recorder rec;
  std::vector<Var> leaves;
  for (Matrix* p : params) leaves.push_back(rec.parameter(*p));
  Var loss = loss_of(rec, leaves);
  rec.backward(loss);
  GradCheck out;
  auto eval = [&]() {
    Recorder r;
    std::vector<Var> ls;
    for (Matrix* p : params) ls.push_back(r.constant(*p));
    return loss_of(r, ls).value()[0];
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix g = rec.grad(leaves[i]);
    auto data = params[i]->data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double keep = data[j];
      data[j] = keep + h;
      const double up = eval();
      data[j] = keep - h;
      const double down = eval();
      data[j] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = g.data()[j];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), floor});
      out.max_rel = std::max(out.max_rel, std::abs(numeric - analytic) / scale);
      ++out.coordinates;
    }
  }
  return out;
}

/// check_gradients for a whole chain: every tensor of `model` against central
/// differences of `build` evaluated on `win`.
inline GradCheck chain_gradient_check(EgadModel& model, const PreparedWindow& win, const LossBuilder& build,
                                      double h = 1e-5, double floor = 1e-6) {
  Recorder rec;
  ChainVars chain = forward_chain(rec, model, win, true);
  rec.backward(build(rec, chain));
  std::vector<Matrix> grads;
  for (Var leaf : chain.leaves) grads.push_back(rec.grad(leaf));
  auto eval = [&]() {
    Recorder r;
    ChainVars c = forward_chain(r, model, win, false);
    return build(r, c).value()[0];
  };
  GradCheck out;
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i]->data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double keep = data[j];
      data[j] = keep + h;
      const double up = eval();
      data[j] = keep - h;
      const double down = eval();
      data[j] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[i].data()[j];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), floor});
      out.max_rel = std::max(out.max_rel, std::abs(numeric - analytic) / scale);
      ++out.coordinates;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scalar-loop oracles, written without the library's matrix kernels.
// ---------------------------------------------------------------------------

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense dense(const Matrix& m) {
  Dense d(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d[i][j] = m(i, j);
  return d;
}

/// Weighted adjacency from the edge list, in the snapshot's node order.
inline Dense adjacency(const SnapshotGraph& g) {
  const auto& nodes = g.nodes();
  const std::size_t n = nodes.size();
  Dense a(n, std::vector<double>(n, 0.0));
  for (const Edge& e : g.edges()) {
    std::size_t i = 0, j = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (nodes[t] == e.u) i = t;
      if (nodes[t] == e.v) j = t;
    }
    a[i][j] = e.weight;
    a[j][i] = e.weight;
  }
  return a;
}

inline Dense normalized(const SnapshotGraph& g) {
  Dense a = adjacency(g);
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) a[i][i] += 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
  Dense out(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i][j] = a[i][j] / (std::sqrt(deg[i]) * std::sqrt(deg[j]));
  return out;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double elu(double x) { return x > 0 ? x : std::exp(x) - 1.0; }

/// Z = Â ReLU(Â W1[rows]) W2 by explicit triple loops.
inline Dense gcn(const SnapshotGraph& g, const Matrix& w1, const Matrix& w2) {
  const Dense ah = normalized(g);
  const auto& nodes = g.nodes();
  const std::size_t n = nodes.size(), d1 = w1.cols(), d2 = w2.cols();
  Dense hidden(n, std::vector<double>(d1, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d1; ++c) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += ah[i][j] * w1(nodes[j].value, c);
      hidden[i][c] = std::max(0.0, s);
    }
  Dense hw(n, std::vector<double>(d2, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d2; ++c)
      for (std::size_t t = 0; t < d1; ++t) hw[i][c] += hidden[i][t] * w2(t, c);
  Dense z(n, std::vector<double>(d2, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d2; ++c)
      for (std::size_t j = 0; j < n; ++j) z[i][c] += ah[i][j] * hw[j][c];
  return z;
}

/// H W(u) for the global row of node u.
inline std::vector<double> project(const Matrix& h, const Matrix& w, std::size_t row) {
  std::vector<double> out(h.rows(), 0.0);
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c) out[r] += h(r, c) * w(row, c);
  return out;
}

/// alpha_{u,v} by score-then-softmax per node; rows/cols in snapshot order.
inline Dense attention(const SnapshotGraph& g, const Matrix& h, const Matrix& a, const Matrix& w_prev) {
  const auto& nodes = g.nodes();
  const std::size_t n = nodes.size(), d1 = h.rows();
  const Dense adj = adjacency(g);
  std::vector<std::vector<double>> proj;
  for (NodeId id : nodes) proj.push_back(project(h, w_prev, id.value));
  Dense alpha(n, std::vector<double>(n, 0.0));
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<std::size_t> nbrs;
    for (std::size_t v = 0; v < n; ++v)
      if (v == u || adj[u][v] != 0.0) nbrs.push_back(v);
    std::vector<double> s;
    for (std::size_t v : nbrs) {
      double lin = 0;
      for (std::size_t c = 0; c < d1; ++c) lin += a(c, 0) * proj[u][c] + a(d1 + c, 0) * proj[v][c];
      const double w = v == u ? 1.0 : adj[u][v];
      s.push_back(sig(w * lin));
    }
    double total = 0;
    for (double x : s) total += std::exp(x);
    for (std::size_t t = 0; t < nbrs.size(); ++t) alpha[u][nbrs[t]] = std::exp(s[t]) / total;
  }
  return alpha;
}

/// Full evolved W1 (n_global rows) from per-head (H, a).
inline Matrix evolve(const SnapshotGraph& g, const std::vector<AttentionHeadParams>& heads, const Matrix& w_prev) {
  const auto& nodes = g.nodes();
  const std::size_t n = nodes.size(), d1 = w_prev.cols();
  Matrix out = w_prev;
  std::vector<std::vector<double>> acc(n, std::vector<double>(d1, 0.0));
  for (const auto& head : heads) {
    const Dense alpha = attention(g, head.h, head.a, w_prev);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        if (alpha[u][v] == 0.0) continue;
        const auto p = project(head.h, w_prev, nodes[v].value);
        for (std::size_t c = 0; c < d1; ++c) acc[u][c] += alpha[u][v] * p[c];
      }
  }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t c = 0; c < d1; ++c) out(nodes[u].value, c) = elu(acc[u][c] / static_cast<double>(heads.size()));
  return out;
}

inline double reconstruction(const Dense& z, const SnapshotGraph& g) {
  const Dense a = adjacency(g);
  const std::size_t n = z.size();
  double s = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0;
      for (std::size_t c = 0; c < z[i].size(); ++c) dot += z[i][c] * z[j][c];
      const double e = sig(dot) - (i == j ? 0.0 : a[i][j]);
      s += e * e;
    }
  return std::sqrt(s / static_cast<double>(n * n));
}

inline double max_abs_diff(const Dense& a, const Matrix& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, std::abs(a[i][j] - b(i, j)));
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace oracle

/// Small event of `K` snapshots for training tests, from the simulator.
inline EventSequence small_event(std::size_t viewers, std::size_t K, std::uint64_t seed) {
  SimConfig sc;
  sc.viewers_total = viewers;
  sc.snapshots = K;
  sc.offices = 2;
  sc.degree_cap = 4;
  sc.seed = seed;
  return normalize_weights(simulate_event(sc).raw);
}

inline ModelConfig tiny_config(std::size_t l = 2, std::size_t h = 2, std::uint64_t seed = 1) {
  ModelConfig c;
  c.window = l;
  c.heads = h;
  c.d1 = 6;
  c.d2 = 3;
  c.epochs = 5;
  c.seed = seed;
  return c;
}

}  // namespace egad::testing
