#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "egad/distill.hpp"
#include "egad/gcn.hpp"
#include "egad/graph.hpp"
#include "egad/parallel.hpp"
#include "egad/record.hpp"
#include "egad/teacher.hpp"

namespace egad {

/// SplitMix64 finalizer: derives independent stream seeds from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

struct LinkSplit {
  LinkSet validation;
  LinkSet test;
};

/// Seeded shuffle, then round(0.2 |O|) links to validation and the rest to test.
inline LinkSplit split_links(const LinkSet& links, std::uint64_t seed) {
  if (links.size() < 5) {
    throw InsufficientLinksError("split_links: need at least 5 links, got " + std::to_string(links.size()));
  }
  std::vector<std::size_t> order(links.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(links.size())));
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  LinkSplit out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? out.validation : out.test).links.push_back(links.links[order[i]]);
  }
  return out;
}

/// Links whose endpoints both have embeddings at snapshot k.
inline LinkSet restrict_to_nodes(const LinkSet& links, const SnapshotGraph& g) {
  LinkSet out;
  for (const Link& l : links.links)
    if (g.contains(l.u) && g.contains(l.v)) out.links.push_back(l);
  return out;
}

// ---------------------------------------------------------------------------
// Scorers
// ---------------------------------------------------------------------------

/// sigmoid(z_u . z_v), or the raw inner product when `raw` is set.
inline double score_dot(const Embeddings& z, NodeId u, NodeId v, bool raw = false) {
  auto zu = z[u];
  auto zv = z[v];
  double s = 0.0;
  for (std::size_t i = 0; i < zu.size(); ++i) s += zu[i] * zv[i];
  return raw ? s : kernels::sigmoid(s);
}

/// Hadamard-product decoder: sigmoid(out(ReLU(hidden(z_u * z_v)))).
struct MlpScorer {
  Matrix w_hidden;  // d x ceil(d/2)
  Matrix b_hidden;  // 1 x ceil(d/2)
  Matrix w_out;     // ceil(d/2) x 1
  Matrix b_out;     // 1 x 1
  bool trained = false;

  static MlpScorer from_weights(Matrix wh, Matrix bh, Matrix wo, Matrix bo) {
    if (wh.cols() != bh.cols() || bh.rows() != 1 || wo.rows() != wh.cols() || wo.cols() != 1 || bo.rows() != 1 ||
        bo.cols() != 1) {
      throw ShapeError("MlpScorer: inconsistent layer shapes");
    }
    return MlpScorer{std::move(wh), std::move(bh), std::move(wo), std::move(bo), true};
  }

  std::size_t input_dim() const noexcept { return w_hidden.rows(); }
};

namespace detail {

inline Var mlp_forward(Var x, Var wh, Var bh, Var wo, Var bo) {
  Var hidden = relu(add_row_broadcast(matmul(x, wh), bh));
  return sigmoid(add_row_broadcast(matmul(hidden, wo), bo));
}

inline void hadamard_into(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
}

}  // namespace detail

inline double score_mlp(const Embeddings& z, const MlpScorer& scorer, NodeId u, NodeId v) {
  if (!scorer.trained) throw ContractError("score_mlp: scorer has not been trained");
  if (z.z.cols() != scorer.input_dim()) {
    throw ShapeError("score_mlp: embedding width " + std::to_string(z.z.cols()) + " vs scorer input " +
                     std::to_string(scorer.input_dim()));
  }
  Matrix x(1, z.z.cols());
  detail::hadamard_into(z[u], z[v], x.row(0));
  Recorder rec;
  Var out = detail::mlp_forward(rec.constant(std::move(x)), rec.constant(scorer.w_hidden), rec.constant(scorer.b_hidden),
                                rec.constant(scorer.w_out), rec.constant(scorer.b_out));
  return out.value()[0];
}

struct ScorerTraining {
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

/// Fits the decoder on the window's observed edges (latest weight, endpoints
/// present at the last snapshot) plus as many sampled non-edges with target eps.
inline MlpScorer train_mlp_scorer(const Embeddings& z, const Window& window, const ScorerTraining& opts) {
  const SnapshotGraph& last = *window.back();
  std::vector<std::pair<std::uint64_t, double>> positives;
  {
    std::unordered_map<std::uint64_t, double> latest;
    for (const auto& g : window)
      for (const Edge& e : g->edges())
        if (last.contains(e.u) && last.contains(e.v)) latest[pair_key(e.u, e.v)] = e.weight;
    positives.assign(latest.begin(), latest.end());
    std::sort(positives.begin(), positives.end());
  }
  const auto observed = window_edge_keys(window);
  std::mt19937_64 rng(opts.seed);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::vector<double> targets;
  for (const auto& [key, w] : positives) {
    pairs.emplace_back(NodeId{static_cast<std::uint32_t>(key >> 32)}, NodeId{static_cast<std::uint32_t>(key)});
    targets.push_back(w);
  }
  const auto& nodes = last.nodes();
  if (nodes.size() >= 2) {
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    std::unordered_set<std::uint64_t> used;
    const std::size_t want = positives.size();
    for (std::size_t attempts = 0, got = 0; got < want && attempts < 50 * want + 100; ++attempts) {
      NodeId a = nodes[pick(rng)], b = nodes[pick(rng)];
      if (a == b) continue;
      const auto key = pair_key(a, b);
      if (observed.contains(key) || !used.insert(key).second) continue;
      pairs.emplace_back(std::min(a, b), std::max(a, b));
      targets.push_back(kWeightMargin);
      ++got;
    }
  }
  if (pairs.empty()) throw InsufficientLinksError("train_mlp_scorer: no training pairs");

  const std::size_t d = z.z.cols(), hdim = (d + 1) / 2;
  Matrix x(pairs.size(), d);
  for (std::size_t i = 0; i < pairs.size(); ++i) detail::hadamard_into(z[pairs[i].first], z[pairs[i].second], x.row(i));
  const Matrix y(pairs.size(), 1, targets);

  auto init = [&](std::size_t rows, std::size_t cols, std::size_t fan_in) {
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(double(fan_in)), 1.0 / std::sqrt(double(fan_in)));
    Matrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
  };
  MlpScorer s{init(d, hdim, d), Matrix(1, hdim), init(hdim, 1, hdim), Matrix(1, 1), false};
  std::vector<Matrix*> params{&s.w_hidden, &s.b_hidden, &s.w_out, &s.b_out};
  AdamState adam(params);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    Recorder rec;
    Var wh = rec.parameter(s.w_hidden), bh = rec.parameter(s.b_hidden);
    Var wo = rec.parameter(s.w_out), bo = rec.parameter(s.b_out);
    Var loss = rms_error(detail::mlp_forward(rec.constant(x), wh, bh, wo, bo), y);
    rec.backward(loss);
    adam_step(params, {rec.grad(wh), rec.grad(bh), rec.grad(wo), rec.grad(bo)}, adam, opts.lr);
  }
  s.trained = true;
  return s;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
};

inline Metrics metrics(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) throw ShapeError("metrics: prediction/truth length mismatch");
  if (predictions.empty()) throw ContractError("metrics: empty input");
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    se += e * e;
    ae += std::abs(e);
  }
  const auto n = static_cast<double>(predictions.size());
  return {std::sqrt(se / n), ae / n};
}

/// Running mean and sample standard deviation (Welford). Identical samples
/// give exactly zero deviation.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;

  static MeanStd of(std::span<const double> xs) {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
      ++n;
      const double delta = x - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (x - mean);
    }
    return {mean, n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0};
  }
};

/// Exact student/teacher parameter ratio, reduced.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Ratio of(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw ContractError("ratio: zero denominator");
    const std::uint64_t g = std::gcd(num, den);
    return {num / g, den / g};
  }
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  /// "x:100" with x the percentage rounded up, so a compressed model is never
  /// reported smaller than it is.
  std::string presentation() const {
    const std::uint64_t pct = (100 * num + den - 1) / den;
    return std::to_string(pct) + ":100";
  }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

// ---------------------------------------------------------------------------
// Evaluation protocol
// ---------------------------------------------------------------------------

enum class ScorerKind { dot, mlp };

inline const char* to_string(ScorerKind s) { return s == ScorerKind::dot ? "dot" : "mlp"; }

inline ScorerKind scorer_from_string(const std::string& s) {
  if (s == "dot") return ScorerKind::dot;
  if (s == "mlp") return ScorerKind::mlp;
  throw ConfigError("unknown scorer '" + s + "'");
}

struct EvalOptions {
  std::size_t k = 0;
  ModelConfig teacher = default_teacher_config();
  ModelConfig student = default_student_config();
  std::size_t trials = 5;
  std::vector<ScorerKind> scorers{ScorerKind::dot};
  bool raw_inner_product = false;  // dot scorer without the sigmoid
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> trial_seeds;  // overrides seed-derived trial seeds when non-empty
  std::size_t workers = 1;                 // threads for independent trials
};

struct ModelScore {
  Metrics metrics;
  double final_loss = 0.0;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  ModelScore teacher;
  ModelScore student;
  Metrics baseline;
  double baseline_value = 0.0;
};

struct ModelSummary {
  MeanStd rmse;
  MeanStd mae;
};

struct EvalReport {
  std::string event;
  std::size_t k = 0;
  ScorerKind scorer = ScorerKind::dot;
  ModelConfig teacher_config;
  ModelConfig student_config;
  ModelSummary teacher;
  ModelSummary student;
  ModelSummary baseline;
  std::vector<TrialRecord> trials;
  std::uint64_t param_count_teacher = 0;
  std::uint64_t param_count_student = 0;
  Ratio compression_ratio;
  std::vector<std::uint64_t> split_seeds;
};

/// Everything a trial needs that does not depend on model seeds.
struct EvalSetup {
  Window window;
  LinkSet candidates;  // unobserved links with both endpoints at snapshot k
  double baseline_value = 0.0;

  EvalSetup(const EventSequence& event, std::size_t k, std::size_t l)
      : window(build_window(event, k, l)),
        candidates(restrict_to_nodes(unobserved_links(event, k, l), event.snapshot(k))) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& g : window) {
      for (const Edge& e : g->edges()) {
        total += e.weight;
        ++count;
      }
    }
    if (count == 0) throw EmptyEventError("evaluation: window has no edges");
    baseline_value = total / static_cast<double>(count);
  }
};

inline std::vector<double> truths_of(const LinkSet& links) {
  std::vector<double> t;
  for (const Link& l : links.links) t.push_back(l.weight);
  return t;
}

inline Metrics score_links(const Embeddings& z, const LinkSet& links, ScorerKind kind, const Window& window,
                           std::uint64_t scorer_seed, bool raw_inner_product) {
  std::vector<double> preds;
  if (kind == ScorerKind::dot) {
    for (const Link& l : links.links) preds.push_back(score_dot(z, l.u, l.v, raw_inner_product));
  } else {
    const MlpScorer mlp = train_mlp_scorer(z, window, ScorerTraining{200, 1e-3, scorer_seed});
    for (const Link& l : links.links) preds.push_back(score_mlp(z, mlp, l.u, l.v));
  }
  return metrics(preds, truths_of(links));
}

inline Metrics constant_metrics(double value, const LinkSet& links) {
  std::vector<double> preds(links.size(), value);
  return metrics(preds, truths_of(links));
}

namespace detail {

inline ModelSummary summarize(const std::vector<TrialRecord>& trials, auto pick) {
  std::vector<double> r, m;
  for (const TrialRecord& t : trials) {
    const Metrics x = pick(t);
    r.push_back(x.rmse);
    m.push_back(x.mae);
  }
  return {MeanStd::of(r), MeanStd::of(m)};
}

}  // namespace detail

/// Trains teacher and student once per trial and scores the held-out test
/// links with every requested scorer. Returns one report per scorer.
inline std::vector<EvalReport> run_evaluation_all(const EventSequence& event, const EvalOptions& opts) {
  if (opts.trials < 1) throw ConfigError("evaluation: trials must be >= 1");
  if (!opts.trial_seeds.empty() && opts.trial_seeds.size() != opts.trials) {
    throw ConfigError("evaluation: trial_seeds must list one seed per trial");
  }
  if (opts.student.window != opts.teacher.window) throw ConfigError("evaluation: student and teacher l differ");
  if (opts.scorers.empty()) throw ConfigError("evaluation: no scorer selected");
  const EvalSetup setup(event, opts.k, opts.teacher.window);

  std::vector<std::uint64_t> trial_seeds(opts.trials), split_seeds(opts.trials);
  for (std::size_t t = 0; t < opts.trials; ++t) {
    trial_seeds[t] = opts.trial_seeds.empty() ? derive_seed(opts.seed, t) : opts.trial_seeds[t];
    split_seeds[t] = derive_seed(trial_seeds[t], 3);
  }
  // by_trial[t][s]: trial t scored with scorer s
  std::vector<std::vector<TrialRecord>> by_trial(opts.trials);
  parallel_for(opts.trials, opts.workers, [&](std::size_t t) {
    const std::uint64_t trial_seed = trial_seeds[t];
    ModelConfig tc = opts.teacher, sc = opts.student;
    tc.role = Role::teacher;
    sc.role = Role::student;
    tc.seed = derive_seed(trial_seed, 1);
    sc.seed = derive_seed(trial_seed, 2);
    const LinkSplit split = split_links(setup.candidates, split_seeds[t]);

    const TrainResult teacher = train_teacher(event, opts.k, tc);
    const TrainResult student = distill_student({teacher.model, teacher.embeddings, sc}, event, opts.k);

    for (const ScorerKind kind : opts.scorers) {
      TrialRecord rec;
      rec.trial = t;
      rec.seed = trial_seed;
      rec.split_seed = split_seeds[t];
      rec.n_validation = split.validation.size();
      rec.n_test = split.test.size();
      rec.teacher = {score_links(teacher.embeddings, split.test, kind, setup.window, derive_seed(trial_seed, 4),
                                 opts.raw_inner_product),
                     teacher.trace.loss.back()};
      rec.student = {score_links(student.embeddings, split.test, kind, setup.window, derive_seed(trial_seed, 5),
                                 opts.raw_inner_product),
                     student.trace.loss.back()};
      rec.baseline = constant_metrics(setup.baseline_value, split.test);
      rec.baseline_value = setup.baseline_value;
      by_trial[t].push_back(rec);
    }
  });
  std::vector<std::vector<TrialRecord>> per_scorer(opts.scorers.size());
  for (const auto& recs : by_trial)
    for (std::size_t s = 0; s < recs.size(); ++s) per_scorer[s].push_back(recs[s]);

  std::vector<EvalReport> reports;
  for (std::size_t s = 0; s < opts.scorers.size(); ++s) {
    EvalReport r;
    r.event = event.name();
    r.k = opts.k;
    r.scorer = opts.scorers[s];
    r.teacher_config = opts.teacher;
    r.student_config = opts.student;
    r.trials = per_scorer[s];
    r.teacher = detail::summarize(r.trials, [](const TrialRecord& t) { return t.teacher.metrics; });
    r.student = detail::summarize(r.trials, [](const TrialRecord& t) { return t.student.metrics; });
    r.baseline = detail::summarize(r.trials, [](const TrialRecord& t) { return t.baseline; });
    r.param_count_teacher = count_params(opts.teacher, event.n_global());
    r.param_count_student = count_params(opts.student, event.n_global());
    r.compression_ratio = Ratio::of(r.param_count_student, r.param_count_teacher);
    r.split_seeds = split_seeds;
    reports.push_back(std::move(r));
  }
  return reports;
}

inline EvalReport run_evaluation(const EventSequence& event, EvalOptions opts) {
  if (opts.scorers.size() != 1) throw ConfigError("run_evaluation: exactly one scorer expected");
  return run_evaluation_all(event, opts).front();
}

// ---------------------------------------------------------------------------
// Gamma sweep
// ---------------------------------------------------------------------------

struct GammaPoint {
  double gamma = 0.0;
  double rmse = 0.0;  // averaged over trials and k
  double mae = 0.0;
  std::size_t runs = 0;
};

/// 0.1, 0.2, ..., 0.9.
inline std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  return g;
}

/// For every k and trial, trains one teacher and distills one student per
/// gamma; RMSE/MAE on the test links are averaged per gamma.
inline std::vector<GammaPoint> sweep_gamma(const EventSequence& event, const EvalOptions& opts,
                                           const std::vector<std::size_t>& ks, const std::vector<double>& gammas) {
  std::vector<GammaPoint> points;
  for (double g : gammas) points.push_back({g, 0.0, 0.0, 0});
  const ScorerKind kind = opts.scorers.empty() ? ScorerKind::dot : opts.scorers.front();
  std::vector<EvalSetup> setups;
  for (std::size_t k : ks) setups.emplace_back(event, k, opts.teacher.window);
  const std::size_t n_tasks = ks.size() * opts.trials;
  std::vector<std::vector<Metrics>> results(n_tasks);
  parallel_for(n_tasks, opts.workers, [&](std::size_t task) {
    const std::size_t ki = task / opts.trials, t = task % opts.trials;
    const std::size_t k = ks[ki];
    const EvalSetup& setup = setups[ki];
    const std::uint64_t trial_seed =
        opts.trial_seeds.empty() ? derive_seed(derive_seed(opts.seed, k), t) : opts.trial_seeds[t];
    ModelConfig tc = opts.teacher;
    tc.role = Role::teacher;
    tc.seed = derive_seed(trial_seed, 1);
    const LinkSplit split = split_links(setup.candidates, derive_seed(trial_seed, 3));
    const TrainResult teacher = train_teacher(event, k, tc);
    for (const GammaPoint& p : points) {
      ModelConfig sc = opts.student;
      sc.role = Role::student;
      sc.gamma = p.gamma;
      sc.seed = derive_seed(trial_seed, 2);
      const TrainResult student = distill_student({teacher.model, teacher.embeddings, sc}, event, k);
      results[task].push_back(score_links(student.embeddings, split.test, kind, setup.window,
                                          derive_seed(trial_seed, 5), opts.raw_inner_product));
    }
  });
  for (const auto& task : results) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      points[i].rmse += task[i].rmse;
      points[i].mae += task[i].mae;
      ++points[i].runs;
    }
  }
  for (GammaPoint& p : points) {
    if (p.runs == 0) continue;
    p.rmse /= static_cast<double>(p.runs);
    p.mae /= static_cast<double>(p.runs);
  }
  return points;
}

}  // namespace egad
