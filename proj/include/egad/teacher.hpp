#pragma once

#include <bit>
#include <chrono>
#include <functional>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "egad/adam.hpp"
#include "egad/attention.hpp"
#include "egad/config.hpp"
#include "egad/gcn.hpp"
#include "egad/graph.hpp"
#include "egad/record.hpp"

namespace egad {

/// A chain GCN_{k-l} .. GCN_k connected through evolving first-layer weights.
struct EgadModel {
  ModelConfig config;
  Matrix w1;                                 // free first-layer weights, n_global x d1
  std::vector<Matrix> w2;                    // l + 1 second-layer weights, d1 x d2
  std::vector<TransitionParams> transitions;  // l transitions, h heads each
  std::vector<std::int64_t> registry;        // raw id of every NodeId
  std::size_t window_end = 0;                // k: last snapshot of the training window

  std::size_t n_global() const noexcept { return w1.rows(); }

  // W2 starts wider than the attention tensors: the evolved W1 shrinks through
  // every transition and a narrow W2 leaves the first epochs below Adam's epsilon.
  static constexpr double kW2Gain = 4.0;

  /// Fresh model; W1, H and a uniform in [-r, r] with r = 1/sqrt(d1), W2 uniform
  /// in [-kW2Gain r, kW2Gain r]. W1 rows are drawn in NodeId order, i.e. in order
  /// of first appearance.
  static EgadModel init(const ModelConfig& cfg, const NodeRegistry& registry, std::size_t window_end) {
    cfg.validate();
    EgadModel m;
    m.config = cfg;
    m.registry = registry.raw_ids();
    m.window_end = window_end;
    std::mt19937_64 rng(cfg.seed);
    const double r = 1.0 / std::sqrt(static_cast<double>(cfg.d1));
    std::uniform_real_distribution<double> dist(-r, r);
    auto fill = [&](std::size_t rows, std::size_t cols, double gain = 1.0) {
      Matrix x(rows, cols);
      for (double& v : x.data()) v = gain * dist(rng);
      return x;
    };
    m.w1 = fill(registry.size(), cfg.d1);
    for (std::size_t i = 0; i <= cfg.window; ++i) m.w2.push_back(fill(cfg.d1, cfg.d2, kW2Gain));
    for (std::size_t t = 0; t < cfg.window; ++t) {
      TransitionParams tp;
      for (std::size_t j = 0; j < cfg.heads; ++j) {
        Matrix h = fill(cfg.d1, cfg.d1);
        Matrix a = fill(2 * cfg.d1, 1);
        tp.heads.push_back({std::move(h), std::move(a)});
      }
      m.transitions.push_back(std::move(tp));
    }
    return m;
  }

  /// Trainable tensors in canonical order: W1, W2[0..l], then (H, a) per
  /// transition and head.
  std::vector<Matrix*> parameters() {
    std::vector<Matrix*> out{&w1};
    for (Matrix& w : w2) out.push_back(&w);
    for (TransitionParams& t : transitions) {
      for (AttentionHeadParams& head : t.heads) {
        out.push_back(&head.h);
        out.push_back(&head.a);
      }
    }
    return out;
  }
  std::vector<const Matrix*> parameters() const {
    std::vector<const Matrix*> out;
    for (Matrix* p : const_cast<EgadModel*>(this)->parameters()) out.push_back(p);
    return out;
  }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> names{"w1"};
    for (std::size_t i = 0; i < w2.size(); ++i) names.push_back("w2." + std::to_string(i));
    for (std::size_t t = 0; t < transitions.size(); ++t) {
      for (std::size_t j = 0; j < transitions[t].heads.size(); ++j) {
        const std::string p = "attn." + std::to_string(t) + "." + std::to_string(j);
        names.push_back(p + ".h");
        names.push_back(p + ".a");
      }
    }
    return names;
  }

  std::uint64_t parameter_count() const {
    std::uint64_t n = 0;
    for (const Matrix* p : parameters()) n += p->size();
    return n;
  }

  /// Checks tensor shapes against the config.
  void check_shapes() const {
    const ModelConfig& c = config;
    auto expect = [](const Matrix& m, std::size_t r, std::size_t cc, const std::string& what) {
      if (m.rows() != r || m.cols() != cc) {
        throw ShapeError("model: " + what + " is " + m.shape_str() + ", expected " + std::to_string(r) + "x" +
                         std::to_string(cc));
      }
    };
    expect(w1, registry.size(), c.d1, "w1");
    if (w2.size() != c.window + 1) throw ShapeError("model: expected " + std::to_string(c.window + 1) + " W2 tensors");
    for (const Matrix& w : w2) expect(w, c.d1, c.d2, "w2");
    if (transitions.size() != c.window) throw ShapeError("model: expected " + std::to_string(c.window) + " transitions");
    for (const TransitionParams& t : transitions) {
      if (t.heads.size() != c.heads) throw ShapeError("model: expected " + std::to_string(c.heads) + " heads");
      for (const AttentionHeadParams& h : t.heads) {
        expect(h.h, c.d1, c.d1, "attention H");
        expect(h.a, 2 * c.d1, 1, "attention a");
      }
    }
  }

  friend bool operator==(const EgadModel& a, const EgadModel& b) {
    if (!(a.config == b.config) || a.registry != b.registry || a.window_end != b.window_end) return false;
    auto pa = a.parameters(), pb = b.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
      if (!(*pa[i] == *pb[i])) return false;
    return true;
  }
};

/// Per-snapshot constants of a training window, built once and reused.
struct PreparedWindow {
  Window snapshots;
  std::vector<Matrix> a_hat;
  std::vector<Features> features;
  std::vector<AttentionInputs> attention;
  Matrix target;  // dense adjacency of the last snapshot, zero diagonal

  explicit PreparedWindow(Window w) : snapshots(std::move(w)) {
    if (snapshots.empty()) throw ConfigError("window is empty");
    for (const auto& g : snapshots) {
      a_hat.push_back(normalize_adjacency(*g));
      features.push_back(snapshot_features(*g));
      attention.emplace_back(*g);
    }
    target = snapshots.back()->dense_adjacency();
  }
  const SnapshotGraph& last() const { return *snapshots.back(); }
};

/// Recorded handles for one forward pass through the chain.
struct ChainVars {
  std::vector<Var> leaves;  // same order as EgadModel::parameters()
  std::vector<Var> w1;      // first-layer weights used by each GCN
  std::vector<Var> z;       // embeddings of each snapshot
};

/// Records every GCN of the chain. Parameters become trainable leaves when
/// `trainable`, constants otherwise.
inline ChainVars forward_chain(Recorder& rec, const EgadModel& model, const PreparedWindow& win, bool trainable = true) {
  const ModelConfig& c = model.config;
  if (win.snapshots.size() != c.window + 1) {
    throw ConfigError("forward: window has " + std::to_string(win.snapshots.size()) + " snapshots, model expects " +
                      std::to_string(c.window + 1));
  }
  ChainVars out;
  for (const Matrix* p : model.parameters()) out.leaves.push_back(trainable ? rec.parameter(*p) : rec.constant(*p));
  std::size_t next = 0;
  Var w1 = out.leaves[next++];
  std::vector<Var> w2;
  for (std::size_t i = 0; i <= c.window; ++i) w2.push_back(out.leaves[next++]);

  for (std::size_t s = 0; s <= c.window; ++s) {
    if (s > 0) {
      std::vector<HeadVars> heads;
      for (std::size_t j = 0; j < c.heads; ++j) {
        Var h = out.leaves[next++];
        Var a = out.leaves[next++];
        heads.push_back({h, a});
      }
      w1 = evolve_weights(win.attention[s], heads, w1);
    }
    out.w1.push_back(w1);
    Var a_hat = rec.constant(win.a_hat[s]);
    out.z.push_back(gcn_forward(a_hat, win.features[s], w1, w2[s], win.attention[s].rows));
  }
  return out;
}

/// sqrt(mean over all n_k^2 ordered pairs of (sigmoid(Z Z^T) - A)^2), diagonal target 0.
inline Var reconstruction_loss(Var z, const Matrix& adjacency) {
  if (z.rows() != adjacency.rows()) {
    throw ShapeError("reconstruction_loss: " + std::to_string(z.rows()) + " embeddings vs adjacency " +
                     adjacency.shape_str());
  }
  return rms_error(sigmoid(matmul(z, transpose(z))), adjacency);
}

inline Var reconstruction_loss(Var z, const SnapshotGraph& g) { return reconstruction_loss(z, g.dense_adjacency()); }

struct TrainingTrace {
  std::vector<double> loss;
  std::vector<double> seconds;
  std::string final_params_id;  // digest of the final parameters
};

/// Raised when a gradient turns NaN; carries the epochs completed so far.
class TrainingAbortedError : public TrainingDivergedError {
 public:
  TrainingAbortedError(const std::string& what, TrainingTrace trace)
      : TrainingDivergedError(what), trace_(std::move(trace)) {}
  const TrainingTrace& trace() const noexcept { return trace_; }

 private:
  TrainingTrace trace_;
};

/// FNV-1a over the little-endian bytes of every parameter.
inline std::string parameter_digest(const EgadModel& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Matrix* p : m.parameters()) {
    for (double x : p->data()) {
      const auto bits = std::bit_cast<std::uint64_t>(x);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffU;
        h *= 1099511628211ULL;
      }
    }
  }
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[i] = hex[h & 0xf];
  return s;
}

inline Embeddings embed(const EgadModel& model, const PreparedWindow& win) {
  Recorder rec;
  ChainVars chain = forward_chain(rec, model, win, false);
  return Embeddings{chain.z.back().value(), win.last().nodes()};
}

struct TrainResult {
  EgadModel model;
  TrainingTrace trace;
  Embeddings embeddings;  // last snapshot, final parameters
};

/// Builds the loss of one epoch given the recorded chain.
using LossBuilder = std::function<Var(Recorder&, const ChainVars&)>;

/// Full-batch Adam over every trainable leaf of the chain.
inline TrainResult fit_chain(EgadModel model, const PreparedWindow& win, const LossBuilder& build_loss) {
  const ModelConfig& c = model.config;
  model.check_shapes();
  AdamState adam(model.parameters());
  TrainingTrace trace;
  for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Recorder rec;
    ChainVars chain = forward_chain(rec, model, win, true);
    Var loss = build_loss(rec, chain);
    const double value = loss.value()[0];
    if (!std::isfinite(value)) {
      throw TrainingAbortedError("training diverged at epoch " + std::to_string(epoch) + ": loss " +
                                 std::to_string(value),
                                 trace);
    }
    rec.backward(loss);
    std::vector<Matrix> grads;
    for (Var leaf : chain.leaves) grads.push_back(rec.grad(leaf));
    try {
      adam_step(model.parameters(), grads, adam, c.lr);
    } catch (const TrainingDivergedError& e) {
      throw TrainingAbortedError(std::string(e.what()) + " at epoch " + std::to_string(epoch), trace);
    }
    trace.loss.push_back(value);
    trace.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  trace.final_params_id = parameter_digest(model);
  Embeddings z = embed(model, win);
  return TrainResult{std::move(model), std::move(trace), std::move(z)};
}

struct TrainOptions {
  /// Start from these parameters instead of a fresh initialization. Must match
  /// the config and event registry.
  std::optional<EgadModel> warm_start;
};

/// Trains the chain on window k-l .. k with the reconstruction loss of snapshot k.
inline TrainResult train_teacher(const EventSequence& event, std::size_t k, const ModelConfig& cfg,
                                 const TrainOptions& opts = {}) {
  cfg.validate();
  PreparedWindow win(build_window(event, k, cfg.window));
  EgadModel model;
  if (opts.warm_start) {
    model = *opts.warm_start;
    if (model.registry != event.registry().raw_ids()) throw ConfigError("warm start: registry differs from event");
    model.config = cfg;
    model.window_end = k;
    model.check_shapes();
  } else {
    model = EgadModel::init(cfg, event.registry(), k);
  }
  return fit_chain(std::move(model), win, [&win](Recorder&, const ChainVars& chain) {
    return reconstruction_loss(chain.z.back(), win.target);
  });
}

}  // namespace egad
