#pragma once

// Synthetic live-streaming events: viewers grouped into offices join over time
// and hold weighted peer connections. Same-office connections are preferred
// and faster than cross-office ones; viewers occasionally drop their weakest
// connection for a stronger one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "egad/errors.hpp"
#include "egad/graph.hpp"

namespace egad {

enum class ArrivalPattern { front_loaded, burst, gradual };

inline const char* to_string(ArrivalPattern p) {
  switch (p) {
    case ArrivalPattern::front_loaded: return "front_loaded";
    case ArrivalPattern::burst: return "burst";
    case ArrivalPattern::gradual: return "gradual";
  }
  return "?";
}

inline ArrivalPattern arrival_from_string(const std::string& s) {
  if (s == "front_loaded") return ArrivalPattern::front_loaded;
  if (s == "burst") return ArrivalPattern::burst;
  if (s == "gradual") return ArrivalPattern::gradual;
  throw ConfigError("unknown arrival pattern '" + s + "'");
}

struct Bandwidth {
  double mean = 1.0;
  double spread = 0.0;
};

struct SimConfig {
  std::string name = "synthetic";
  std::size_t offices = 4;
  std::size_t viewers_total = 80;
  std::size_t snapshots = 8;
  ArrivalPattern arrival = ArrivalPattern::front_loaded;
  Bandwidth intra_bw{100.0, 10.0};
  Bandwidth inter_bw{20.0, 5.0};
  std::size_t degree_cap = 30;
  double rewire_prob = 0.6;
  double same_office_pref = 0.8;
  double weight_jitter = 0.25;  // per-snapshot noise, as a fraction of the spread
  double depart_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (offices < 1) throw ConfigError("sim: offices must be >= 1");
    if (viewers_total < offices) throw ConfigError("sim: need at least one viewer per office");
    if (snapshots < 2) throw ConfigError("sim: need at least 2 snapshots");
    if (!(intra_bw.mean > inter_bw.mean && inter_bw.mean > 0.0)) {
      throw ConfigError("sim: need intra mean > inter mean > 0");
    }
    if (intra_bw.spread < 0.0 || inter_bw.spread < 0.0 || weight_jitter < 0.0) {
      throw ConfigError("sim: spreads must be non-negative");
    }
    if (degree_cap == 0) throw ConfigError("sim: degree_cap must be positive");
    if (!(rewire_prob >= 0.0 && rewire_prob <= 1.0)) throw ConfigError("sim: rewire_prob must lie in [0, 1]");
    if (!(same_office_pref >= 0.0 && same_office_pref <= 1.0)) {
      throw ConfigError("sim: same_office_pref must lie in [0, 1]");
    }
    if (!(depart_prob >= 0.0 && depart_prob <= 1.0)) throw ConfigError("sim: depart_prob must lie in [0, 1]");
  }
};

struct SimulatedEvent {
  RawEvent raw;
  std::vector<std::size_t> office;   // indexed by raw viewer id
  std::vector<std::size_t> arrival;  // snapshot at which each viewer joins
};

namespace detail {

// Distributes `count` arrivals as evenly as possible over snapshots [first, last].
inline void spread_arrivals(std::vector<std::size_t>& per_snapshot, std::size_t count, std::size_t first,
                            std::size_t last) {
  const std::size_t span = last - first + 1;
  for (std::size_t i = 0; i < span; ++i) {
    per_snapshot[first + i] += (count * (i + 1)) / span - (count * i) / span;
  }
}

inline std::vector<std::size_t> arrival_counts(const SimConfig& cfg) {
  const std::size_t v = cfg.viewers_total, k = cfg.snapshots;
  std::vector<std::size_t> counts(k, 0);
  switch (cfg.arrival) {
    case ArrivalPattern::front_loaded: {
      const std::size_t first = (7 * v + 9) / 10;  // ceil(0.7 v)
      counts[0] = first;
      spread_arrivals(counts, v - first, 1, k - 1);
      break;
    }
    case ArrivalPattern::burst: {
      const std::size_t first = v / 4;
      const std::size_t surge = (v + 1) / 2;
      counts[0] = first;
      if (k <= 3) {
        spread_arrivals(counts, v - first, 1, k - 1);
      } else {
        spread_arrivals(counts, surge, 1, 2);
        spread_arrivals(counts, v - first - surge, 3, k - 1);
      }
      break;
    }
    case ArrivalPattern::gradual:
      spread_arrivals(counts, v, 0, k - 1);
      break;
  }
  return counts;
}

}  // namespace detail

/// Raw-weight event; normalize with normalize_weights(). Deterministic in cfg.
inline SimulatedEvent simulate_event(const SimConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t nv = cfg.viewers_total;

  SimulatedEvent out;
  out.raw.name = cfg.name;

  // Balanced office assignment over a shuffled viewer order.
  std::vector<std::size_t> order(nv);
  for (std::size_t i = 0; i < nv; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  out.office.assign(nv, 0);
  for (std::size_t i = 0; i < nv; ++i) out.office[order[i]] = i % cfg.offices;

  std::shuffle(order.begin(), order.end(), rng);
  const auto counts = detail::arrival_counts(cfg);
  out.arrival.assign(nv, 0);
  for (std::size_t k = 0, pos = 0; k < counts.size(); ++k)
    for (std::size_t c = 0; c < counts[k]; ++c) out.arrival[order[pos++]] = k;

  // Each viewer wants between ceil(cap/2) and cap connections.
  std::vector<std::size_t> wanted(nv);
  {
    std::uniform_int_distribution<std::size_t> pick((cfg.degree_cap + 1) / 2, cfg.degree_cap);
    for (std::size_t i = 0; i < nv; ++i) wanted[i] = pick(rng);
  }

  auto draw_weight = [&](const Bandwidth& bw, double sd) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double w = bw.mean + sd * normal(rng);
      if (w > 0.0) return w;
    }
    return bw.mean * 1e-3;
  };
  auto bandwidth = [&](std::size_t a, std::size_t b) -> const Bandwidth& {
    return out.office[a] == out.office[b] ? cfg.intra_bw : cfg.inter_bw;
  };

  std::map<std::pair<std::size_t, std::size_t>, double> base;  // (a < b) -> base throughput
  std::vector<std::vector<std::size_t>> nbrs(nv);
  std::vector<bool> present(nv, false), departed(nv, false);

  auto linked = [&](std::size_t a, std::size_t b) {
    return std::find(nbrs[a].begin(), nbrs[a].end(), b) != nbrs[a].end();
  };
  auto link = [&](std::size_t a, std::size_t b, double w) {
    base[{std::min(a, b), std::max(a, b)}] = w;
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  };
  auto unlink = [&](std::size_t a, std::size_t b) {
    base.erase({std::min(a, b), std::max(a, b)});
    std::erase(nbrs[a], b);
    std::erase(nbrs[b], a);
  };
  // A peer for v: same office with probability same_office_pref.
  auto pick_peer = [&](std::size_t v) -> std::ptrdiff_t {
    std::vector<std::size_t> same, other;
    for (std::size_t p = 0; p < nv; ++p) {
      if (p == v || !present[p] || linked(v, p) || nbrs[p].size() >= cfg.degree_cap) continue;
      (out.office[p] == out.office[v] ? same : other).push_back(p);
    }
    const bool want_same = unit(rng) < cfg.same_office_pref;
    const auto& pool = (want_same && !same.empty()) || other.empty() ? same : other;
    if (pool.empty()) return -1;
    std::uniform_int_distribution<std::size_t> idx(0, pool.size() - 1);
    return static_cast<std::ptrdiff_t>(pool[idx(rng)]);
  };

  for (std::size_t k = 0; k < cfg.snapshots; ++k) {
    for (std::size_t v = 0; v < nv; ++v) {
      if (k > 0 && present[v] && cfg.depart_prob > 0.0 && unit(rng) < cfg.depart_prob) {
        departed[v] = true;
        while (!nbrs[v].empty()) unlink(v, nbrs[v].back());
      }
      present[v] = !departed[v] && out.arrival[v] <= k;
    }

    // Rewiring: swap the weakest connection for a stronger candidate.
    for (std::size_t v = 0; v < nv; ++v) {
      if (!present[v] || nbrs[v].empty() || !(unit(rng) < cfg.rewire_prob)) continue;
      std::size_t weakest = nbrs[v].front();
      for (std::size_t p : nbrs[v])
        if (base.at({std::min(v, p), std::max(v, p)}) < base.at({std::min(v, weakest), std::max(v, weakest)}))
          weakest = p;
      const double old_w = base.at({std::min(v, weakest), std::max(v, weakest)});
      for (int attempt = 0; attempt < 5; ++attempt) {
        const std::ptrdiff_t cand = pick_peer(v);
        if (cand < 0) break;
        const auto c = static_cast<std::size_t>(cand);
        const Bandwidth& bw = bandwidth(v, c);
        const double w = draw_weight(bw, bw.spread);
        if (w > old_w) {
          unlink(v, weakest);
          link(v, c, w);
          break;
        }
      }
    }

    // Fill: least-connected viewers first, ties in random order.
    std::vector<std::size_t> fill_order;
    for (std::size_t v = 0; v < nv; ++v)
      if (present[v]) fill_order.push_back(v);
    std::shuffle(fill_order.begin(), fill_order.end(), rng);
    std::stable_sort(fill_order.begin(), fill_order.end(),
                     [&](std::size_t a, std::size_t b) { return nbrs[a].size() < nbrs[b].size(); });
    for (std::size_t v : fill_order) {
      while (nbrs[v].size() < wanted[v]) {
        const std::ptrdiff_t cand = pick_peer(v);
        if (cand < 0) break;
        const auto c = static_cast<std::size_t>(cand);
        const Bandwidth& bw = bandwidth(v, c);
        link(v, c, draw_weight(bw, bw.spread));
      }
    }

    std::vector<RawEdge> edges;
    edges.reserve(base.size());
    for (const auto& [key, w] : base) {
      const Bandwidth& bw = bandwidth(key.first, key.second);
      const double sd = cfg.weight_jitter * bw.spread;
      double measured = w;
      if (sd > 0.0) {
        measured = w + sd * normal(rng);
        if (measured <= 0.0) measured = w;
      }
      edges.push_back(RawEdge{static_cast<std::int64_t>(key.first), static_cast<std::int64_t>(key.second), measured});
    }
    out.raw.snapshots.push_back(std::move(edges));
  }
  return out;
}

struct SnapshotSummary {
  std::size_t k = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  friend bool operator==(const SnapshotSummary&, const SnapshotSummary&) = default;
};

inline std::vector<SnapshotSummary> describe_event(const EventSequence& event) {
  std::vector<SnapshotSummary> out;
  for (std::size_t k = 0; k < event.size(); ++k) {
    out.push_back({k, event.snapshot(k).node_count(), event.snapshot(k).edges().size()});
  }
  return out;
}

}  // namespace egad
