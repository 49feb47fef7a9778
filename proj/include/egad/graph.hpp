#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "egad/errors.hpp"
#include "egad/matrix.hpp"

namespace egad {

/// Dense node identifier, assigned by NodeRegistry in order of first appearance.
struct NodeId {
  std::uint32_t value = 0;
  friend auto operator<=>(NodeId, NodeId) = default;
};

/// Margin that keeps normalized weights inside the open range of a sigmoid.
inline constexpr double kWeightMargin = 0.05;

}  // namespace egad

template <>
struct std::hash<egad::NodeId> {
  std::size_t operator()(egad::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

namespace egad {

/// Maps external (raw) viewer ids to dense NodeIds. Ids are never recycled.
class NodeRegistry {
 public:
  NodeId intern(std::int64_t raw) {
    auto [it, inserted] = index_.try_emplace(raw, NodeId{static_cast<std::uint32_t>(raw_ids_.size())});
    if (inserted) raw_ids_.push_back(raw);
    return it->second;
  }
  std::optional<NodeId> find(std::int64_t raw) const {
    auto it = index_.find(raw);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::int64_t raw_id(NodeId id) const {
    if (id.value >= raw_ids_.size()) throw LookupError("registry: unknown node " + std::to_string(id.value));
    return raw_ids_[id.value];
  }
  std::size_t size() const noexcept { return raw_ids_.size(); }
  const std::vector<std::int64_t>& raw_ids() const noexcept { return raw_ids_; }

  static NodeRegistry from_raw_ids(const std::vector<std::int64_t>& raw) {
    NodeRegistry r;
    for (std::int64_t id : raw) {
      if (r.find(id)) throw MalformedGraphError("registry: duplicate raw id " + std::to_string(id));
      r.intern(id);
    }
    return r;
  }

  friend bool operator==(const NodeRegistry& a, const NodeRegistry& b) { return a.raw_ids_ == b.raw_ids_; }

 private:
  std::vector<std::int64_t> raw_ids_;
  std::unordered_map<std::int64_t, NodeId> index_;
};

struct Edge {
  NodeId u;
  NodeId v;
  double weight = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

inline std::uint64_t pair_key(NodeId a, NodeId b) noexcept {
  if (b < a) std::swap(a, b);
  return (static_cast<std::uint64_t>(a.value) << 32) | b.value;
}

/// One weighted undirected snapshot. Immutable after construction.
///
/// Each unordered pair is stored once with u < v; self-loops are rejected.
/// Nodes are kept sorted by id, and row i of every dense matrix built from the
/// snapshot corresponds to nodes()[i].
class SnapshotGraph {
 public:
  SnapshotGraph(std::size_t index, std::vector<Edge> edges, std::vector<NodeId> extra_nodes = {},
                std::optional<Matrix> features = std::nullopt)
      : index_(index), edges_(std::move(edges)), features_(std::move(features)) {
    std::unordered_set<std::uint64_t> seen;
    for (Edge& e : edges_) {
      if (e.u == e.v) throw MalformedGraphError("snapshot " + std::to_string(index) + ": self-loop on node " +
                                                std::to_string(e.u.value));
      if (e.v < e.u) std::swap(e.u, e.v);
      if (!seen.insert(pair_key(e.u, e.v)).second) {
        throw MalformedGraphError("snapshot " + std::to_string(index) + ": duplicate edge (" +
                                  std::to_string(e.u.value) + "," + std::to_string(e.v.value) + ")");
      }
      nodes_.push_back(e.u);
      nodes_.push_back(e.v);
    }
    nodes_.insert(nodes_.end(), extra_nodes.begin(), extra_nodes.end());
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return pair_key(a.u, a.v) < pair_key(b.u, b.v); });
    for (std::size_t i = 0; i < nodes_.size(); ++i) local_.emplace(nodes_[i], i);
    if (features_ && features_->rows() != nodes_.size()) {
      throw ShapeError("snapshot " + std::to_string(index) + ": feature rows " +
                       std::to_string(features_->rows()) + " != node count " + std::to_string(nodes_.size()));
    }
  }

  std::size_t index() const noexcept { return index_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::optional<Matrix>& features() const noexcept { return features_; }

  bool contains(NodeId id) const { return local_.contains(id); }
  std::size_t local_index(NodeId id) const {
    auto it = local_.find(id);
    if (it == local_.end()) {
      throw LookupError("snapshot " + std::to_string(index_) + ": node " + std::to_string(id.value) + " absent");
    }
    return it->second;
  }

  /// Node ids as row indices into a matrix allocated over all registered nodes.
  std::vector<std::size_t> global_rows() const {
    std::vector<std::size_t> rows(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) rows[i] = nodes_[i].value;
    return rows;
  }

  /// Symmetric weighted adjacency with a zero diagonal.
  Matrix dense_adjacency() const {
    Matrix a(nodes_.size(), nodes_.size());
    for (const Edge& e : edges_) {
      const std::size_t i = local_index(e.u), j = local_index(e.v);
      a(i, j) = e.weight;
      a(j, i) = e.weight;
    }
    return a;
  }

 private:
  std::size_t index_;
  std::vector<Edge> edges_;
  std::vector<NodeId> nodes_;
  std::unordered_map<NodeId, std::size_t> local_;
  std::optional<Matrix> features_;
};

inline bool operator==(const SnapshotGraph& a, const SnapshotGraph& b) {
  return a.index() == b.index() && a.nodes() == b.nodes() && a.edges() == b.edges() && a.features() == b.features();
}

/// D^{-1/2} (A + I) D^{-1/2} with D the row sums of A + I.
inline Matrix normalize_adjacency(const SnapshotGraph& g) {
  for (const Edge& e : g.edges()) {
    if (!std::isfinite(e.weight)) {
      throw MalformedGraphError("normalize_adjacency: non-finite weight on (" + std::to_string(e.u.value) + "," +
                                std::to_string(e.v.value) + ")");
    }
  }
  Matrix a = g.dense_adjacency();
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = 1.0;
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
  return a;
}

// ---------------------------------------------------------------------------
// Raw events and normalization
// ---------------------------------------------------------------------------

struct RawEdge {
  std::int64_t u = 0;
  std::int64_t v = 0;
  double weight = 0.0;
  friend bool operator==(const RawEdge&, const RawEdge&) = default;
};

/// Snapshots of externally-identified edges with unnormalized throughput.
struct RawEvent {
  std::string name;
  std::vector<std::vector<RawEdge>> snapshots;
};

/// Affine map from [raw_min, raw_max] onto [eps, 1 - eps].
struct WeightScale {
  double raw_min = 0.0;
  double raw_max = 0.0;
  double eps = kWeightMargin;

  double apply(double raw) const noexcept {
    if (raw_max == raw_min) return 0.5;
    const double t = (raw - raw_min) / (raw_max - raw_min);
    return std::clamp(eps + (1.0 - 2.0 * eps) * t, eps, 1.0 - eps);
  }
  friend bool operator==(const WeightScale&, const WeightScale&) = default;
};

/// Ordered snapshots of one event with the registry shared by all of them.
class EventSequence {
 public:
  EventSequence(std::string name, std::vector<std::shared_ptr<const SnapshotGraph>> snapshots, NodeRegistry registry,
                WeightScale scale)
      : name_(std::move(name)), snapshots_(std::move(snapshots)), registry_(std::move(registry)), scale_(scale) {
    for (std::size_t k = 0; k < snapshots_.size(); ++k) {
      if (snapshots_[k]->index() != k) {
        throw MalformedGraphError("event: snapshot at position " + std::to_string(k) + " has index " +
                                  std::to_string(snapshots_[k]->index()));
      }
      for (NodeId id : snapshots_[k]->nodes()) {
        if (id.value >= registry_.size()) {
          throw MalformedGraphError("event: node " + std::to_string(id.value) + " missing from registry");
        }
      }
    }
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return snapshots_.size(); }
  const SnapshotGraph& snapshot(std::size_t k) const { return *snapshots_.at(k); }
  const std::shared_ptr<const SnapshotGraph>& snapshot_ptr(std::size_t k) const { return snapshots_.at(k); }
  const NodeRegistry& registry() const noexcept { return registry_; }
  std::size_t n_global() const noexcept { return registry_.size(); }
  const WeightScale& weight_scale() const noexcept { return scale_; }

  friend bool operator==(const EventSequence& a, const EventSequence& b) {
    if (a.name_ != b.name_ || a.registry_ != b.registry_ || a.scale_ != b.scale_) return false;
    if (a.snapshots_.size() != b.snapshots_.size()) return false;
    for (std::size_t k = 0; k < a.snapshots_.size(); ++k)
      if (!(*a.snapshots_[k] == *b.snapshots_[k])) return false;
    return true;
  }

 private:
  std::string name_;
  std::vector<std::shared_ptr<const SnapshotGraph>> snapshots_;
  NodeRegistry registry_;
  WeightScale scale_;
};

/// Maps raw weights of the whole event onto [eps, 1 - eps] and assigns node ids
/// in first-appearance order (snapshot order, then edge order, u before v).
inline EventSequence normalize_weights(const RawEvent& raw, double eps = kWeightMargin) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& snap : raw.snapshots) {
    for (const RawEdge& e : snap) {
      if (!std::isfinite(e.weight) || e.weight <= 0.0) {
        throw MalformedGraphError("normalize_weights: weight must be positive and finite, got " +
                                  std::to_string(e.weight));
      }
      lo = std::min(lo, e.weight);
      hi = std::max(hi, e.weight);
    }
  }
  if (lo == INFINITY) throw EmptyEventError("normalize_weights: event '" + raw.name + "' has no edges");
  const WeightScale scale{lo, hi, eps};

  NodeRegistry registry;
  std::vector<std::shared_ptr<const SnapshotGraph>> snaps;
  for (std::size_t k = 0; k < raw.snapshots.size(); ++k) {
    std::vector<Edge> edges;
    edges.reserve(raw.snapshots[k].size());
    for (const RawEdge& e : raw.snapshots[k]) {
      const NodeId u = registry.intern(e.u);
      const NodeId v = registry.intern(e.v);
      edges.push_back(Edge{u, v, scale.apply(e.weight)});
    }
    snaps.push_back(std::make_shared<const SnapshotGraph>(k, std::move(edges)));
  }
  return EventSequence(raw.name, std::move(snaps), std::move(registry), scale);
}

// ---------------------------------------------------------------------------
// Windows and unobserved links
// ---------------------------------------------------------------------------

using Window = std::vector<std::shared_ptr<const SnapshotGraph>>;

/// Snapshots k-l .. k in chronological order (shared with the event).
inline Window build_window(const EventSequence& event, std::size_t k, std::size_t l) {
  if (k >= event.size()) {
    throw OutOfRangeError("build_window: k=" + std::to_string(k) + " but event has " + std::to_string(event.size()) +
                          " snapshots");
  }
  if (l > k) {
    throw WindowUnderflowError("build_window: k=" + std::to_string(k) + " is too early for window l=" +
                               std::to_string(l));
  }
  Window w;
  for (std::size_t i = k - l; i <= k; ++i) w.push_back(event.snapshot_ptr(i));
  return w;
}

struct Link {
  NodeId u;
  NodeId v;
  double weight = 0.0;
  friend bool operator==(const Link&, const Link&) = default;
};

/// Unique unordered pairs with u < v, sorted by (u, v).
struct LinkSet {
  std::vector<Link> links;
  std::size_t size() const noexcept { return links.size(); }
  bool empty() const noexcept { return links.empty(); }
};

inline std::unordered_set<std::uint64_t> window_edge_keys(const Window& window) {
  std::unordered_set<std::uint64_t> keys;
  for (const auto& g : window)
    for (const Edge& e : g->edges()) keys.insert(pair_key(e.u, e.v));
  return keys;
}

/// Edges of snapshot k+1 absent from every snapshot of the window ending at k.
inline LinkSet unobserved_links(const EventSequence& event, std::size_t k, std::size_t l) {
  const Window window = build_window(event, k, l);
  if (k + 1 >= event.size()) {
    throw OutOfRangeError("unobserved_links: no snapshot after k=" + std::to_string(k));
  }
  const auto seen = window_edge_keys(window);
  LinkSet out;
  for (const Edge& e : event.snapshot(k + 1).edges()) {
    if (!seen.contains(pair_key(e.u, e.v))) out.links.push_back(Link{e.u, e.v, e.weight});
  }
  return out;
}

}  // namespace egad
