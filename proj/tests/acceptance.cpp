#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "support.hpp"

using namespace egad;
namespace oracle = egad::testing::oracle;
namespace fs = std::filesystem;
using egad::testing::chain_gradient_check;
using egad::testing::random_matrix;
using egad::testing::random_raw_event;
using egad::testing::random_snapshot;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " " << id << " " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RunConfig synthetic_config() { return read_run_config(fs::path(EGAD_SOURCE_DIR) / "tools/configs/synthetic.json"); }

EventSequence event_of(const RunConfig& rc) {
  SimConfig sc = rc.simulate.value_or(SimConfig{});
  sc.seed = rc.seed;
  return normalize_weights(simulate_event(sc).raw);
}

EvalOptions options_of(const RunConfig& rc, std::size_t k) {
  EvalOptions o;
  o.k = k;
  o.teacher = rc.teacher;
  o.student = rc.student;
  o.trials = rc.trials;
  o.scorers = rc.scorers;
  o.raw_inner_product = rc.raw_inner_product;
  o.seed = rc.seed;
  return o;
}

void gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  const EventSequence ev = normalize_weights(random_raw_event(12, 4, 0.35, rng, 1.0));
  ModelConfig tc;
  tc.window = 3;
  tc.heads = 2;
  tc.d1 = 8;
  tc.d2 = 4;
  tc.seed = 11;
  EgadModel teacher = EgadModel::init(tc, ev.registry(), 3);
  const PreparedWindow win(build_window(ev, 3, 3));
  const auto t_check = chain_gradient_check(teacher, win, [&](Recorder&, const ChainVars& c) {
    return reconstruction_loss(c.z.back(), win.target);
  });

  ModelConfig sc = tc;
  sc.role = Role::student;
  sc.gamma = 0.5;
  sc.seed = 12;
  EgadModel student = EgadModel::init(sc, ev.registry(), 3);
  const Matrix targets = soft_targets(embed(teacher, win).z);
  const auto s_check = chain_gradient_check(student, win, [&](Recorder&, const ChainVars& c) {
    return distillation_loss_from_targets(c.z.back(), targets, win.target, 0.5);
  });
  const double secs = seconds_since(t0);
  const bool ok = ev.n_global() == 12 && t_check.max_rel < 1e-4 && s_check.max_rel < 1e-4 && secs < 30.0;
  report(1, "gradient correctness", ok,
         fmt("teacher max rel %.2e over %zu coords, distill max rel %.2e over %zu coords, %.1f s", t_check.max_rel,
             t_check.coordinates, s_check.max_rel, s_check.coordinates, secs));
}

// Criteria 2 and 3 share the attention instances.
void oracles_and_stochasticity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  const int instances = 120;
  double worst[5] = {0, 0, 0, 0, 0};
  double row_err = 0.0;
  std::size_t single_rows = 0, single_bad = 0;

  for (int t = 0; t < instances; ++t) {
    const std::size_t n_global = 1 + rng() % 20;
    const std::size_t n = 1 + rng() % n_global;
    const double p = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    const SnapshotGraph g = random_snapshot(n, n_global, p, rng);
    const std::size_t d1 = 1 + rng() % 6, d2 = 1 + rng() % 4, heads = 1 + rng() % 3;

    const Matrix a_hat = normalize_adjacency(g);
    worst[0] = std::max(worst[0], oracle::max_abs_diff(oracle::normalized(g), a_hat));

    const Matrix w1 = random_matrix(n_global, d1, rng), w2 = random_matrix(d1, d2, rng);
    {
      Recorder rec;
      const auto rows = g.global_rows();
      const Matrix z = gcn_forward(rec.constant(a_hat), snapshot_features(g), rec.constant(w1), rec.constant(w2), rows).value();
      worst[1] = std::max(worst[1], oracle::max_abs_diff(oracle::gcn(g, w1, w2), z));
    }

    std::vector<AttentionHeadParams> hs;
    for (std::size_t j = 0; j < heads; ++j) hs.push_back({random_matrix(d1, d1, rng), random_matrix(2 * d1, 1, rng)});
    const Matrix mask = attention_mask(g);
    for (const auto& head : hs) {
      Recorder rec;
      const Matrix alpha = attention_coefficients(g, {rec.constant(head.h), rec.constant(head.a)}, rec.constant(w1)).value();
      worst[2] = std::max(worst[2], oracle::max_abs_diff(oracle::attention(g, head.h, head.a, w1), alpha));
      for (std::size_t u = 0; u < n; ++u) {
        double s = 0.0;
        std::size_t members = 0;
        for (std::size_t v = 0; v < n; ++v) {
          s += alpha(u, v);
          if (mask(u, v) != 0.0) ++members;
        }
        row_err = std::max(row_err, std::abs(s - 1.0));
        if (members == 1) {
          ++single_rows;
          if (alpha(u, u) != 1.0) ++single_bad;
        }
      }
    }
    {
      Recorder rec;
      std::vector<HeadVars> vars;
      for (const auto& head : hs) vars.push_back({rec.constant(head.h), rec.constant(head.a)});
      const Matrix evolved = evolve_weights(g, vars, rec.constant(w1)).value();
      worst[3] = std::max(worst[3], oracle::max_abs_diff(oracle::evolve(g, hs, w1), evolved));
    }
    {
      Recorder rec;
      const Matrix z = random_matrix(n, d2, rng);
      const double got = reconstruction_loss(rec.constant(z), g).value()[0];
      worst[4] = std::max(worst[4], std::abs(got - oracle::reconstruction(oracle::dense(z), g)));
    }
  }
  const double secs = seconds_since(t0);
  const double max_all = *std::max_element(worst, worst + 5);
  report(2, "equation oracles", max_all < 1e-10 && secs < 60.0,
         fmt("%d instances each; max |d| normalize %.1e, gcn %.1e, attention %.1e, evolve %.1e, reconstruction %.1e; %.1f s",
             instances, worst[0], worst[1], worst[2], worst[3], worst[4], secs));
  report(3, "attention stochasticity", row_err <= 1e-9 && single_bad == 0 && single_rows > 0,
         fmt("max |row sum - 1| %.1e; %zu single-neighbor rows, %zu not exactly 1", row_err, single_rows, single_bad));
}

void parameter_accounting() {
  const EventSequence ev = egad::testing::small_event(30, 7, 4);
  std::size_t mismatches = 0;
  for (std::size_t l = 1; l <= 5; ++l) {
    for (std::size_t h = 1; h <= 5; ++h) {
      ModelConfig cfg = egad::testing::tiny_config(l, h);
      const EgadModel m = EgadModel::init(cfg, ev.registry(), 5);
      const PreparedWindow win(build_window(ev, 5, l));
      Recorder rec;
      const ChainVars chain = forward_chain(rec, m, win, true);
      std::uint64_t leaves = 0;
      for (Var v : chain.leaves) leaves += v.value().size();
      if (leaves != count_params(cfg, ev.n_global())) ++mismatches;
    }
  }
  ModelConfig t = default_teacher_config(), s = default_student_config();
  t.window = s.window = 3;
  t.heads = 3;
  t.d1 = 32;
  t.d2 = 16;
  s.heads = 1;
  s.d1 = 8;
  s.d2 = 4;
  const std::uint64_t pt = count_params(t, 200), ps = count_params(s, 200);
  const Ratio r = Ratio::of(ps, pt);
  const std::string shown = Ratio::of(133, 918).presentation();
  const bool ok = mismatches == 0 && pt == 18240 && ps == 1968 && r == (Ratio{41, 380}) && shown == "15:100";
  report(4, "parameter accounting", ok,
         fmt("%zu/25 grid mismatches; %llu/%llu = %llu/%llu; 0.133/0.918 -> %s", mismatches,
             static_cast<unsigned long long>(ps), static_cast<unsigned long long>(pt),
             static_cast<unsigned long long>(r.num), static_cast<unsigned long long>(r.den), shown.c_str()));
}

void desk_scale_learning_and_distillation() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig rc = synthetic_config();
  const EventSequence ev = event_of(rc);
  const std::size_t k = 6;
  const EvalReport rep = run_evaluation(ev, options_of(rc, k));

  ModelConfig tc = rc.teacher;
  tc.seed = derive_seed(derive_seed(rc.seed, 0), 1);
  const TrainResult first = train_teacher(ev, k, tc);
  const double l0 = first.trace.loss.front(), l199 = first.trace.loss.back();
  const double secs = seconds_since(t0);

  const double teacher = rep.teacher.rmse.mean, baseline = rep.baseline.rmse.mean, student = rep.student.rmse.mean;
  report(5, "desk-scale learning", teacher <= 0.8 * baseline && l199 < l0 && first.trace.loss.size() == 200 && secs < 300.0,
         fmt("teacher RMSE %.4f vs baseline %.4f (ratio %.3f, need <= 0.8); loss epoch 0 %.4f -> epoch 199 %.4f; %.1f s",
             teacher, baseline, teacher / baseline, l0, l199, secs));
  const double fewer = static_cast<double>(rep.param_count_teacher) / static_cast<double>(rep.param_count_student);
  report(6, "distillation quality", student <= 1.05 * teacher && fewer >= 5.0,
         fmt("student RMSE %.4f vs teacher %.4f (ratio %.3f, need <= 1.05); params %llu vs %llu (%.2fx fewer)", student,
             teacher, student / teacher, static_cast<unsigned long long>(rep.param_count_student),
             static_cast<unsigned long long>(rep.param_count_teacher), fewer));
}

void gamma_sweep_shape() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig base = synthetic_config();
  int interior = 0;
  std::ostringstream argmins;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    RunConfig rc = base;
    rc.seed = seed;
    const EventSequence ev = event_of(rc);
    const auto points = sweep_gamma(ev, options_of(rc, 0), {ev.size() - 2}, default_gamma_grid());
    const auto best = std::min_element(points.begin(), points.end(),
                                       [](const GammaPoint& a, const GammaPoint& b) { return a.rmse < b.rmse; });
    const std::size_t idx = static_cast<std::size_t>(best - points.begin());
    if (idx != 0 && idx + 1 != points.size()) ++interior;
    argmins << (seed == 1 ? "" : ",") << best->gamma;
  }
  const double secs = seconds_since(t0);
  report(7, "gamma-sweep shape", interior >= 4 && secs < 1800.0,
         fmt("interior minimum in %d/5 seeds (argmin gamma per seed: %s); %.1f s", interior, argmins.str().c_str(), secs));
}

void protocol_hygiene() {
  std::mt19937_64 rng(8);
  std::size_t events = 0, bad_split = 0, leaks = 0, bad_reports = 0;
  ModelConfig tc = egad::testing::tiny_config(2, 1, 1);
  tc.epochs = 2;
  tc.d1 = 4;
  tc.d2 = 2;
  ModelConfig sc = tc;
  sc.role = Role::student;
  sc.d1 = 3;
  while (events < 50) {
    const EventSequence ev = normalize_weights(random_raw_event(16 + rng() % 10, 5, 0.25, rng, 0.8));
    const std::size_t k = 3;
    const EvalSetup setup(ev, k, tc.window);
    if (setup.candidates.size() < 5) continue;
    ++events;

    const LinkSplit split = split_links(setup.candidates, rng());
    std::unordered_set<std::uint64_t> val, test;
    for (const Link& l : split.validation.links) val.insert(pair_key(l.u, l.v));
    for (const Link& l : split.test.links) test.insert(pair_key(l.u, l.v));
    std::size_t overlap = 0;
    for (auto key : val) overlap += test.count(key);
    std::unordered_set<std::uint64_t> all;
    for (const Link& l : setup.candidates.links) all.insert(pair_key(l.u, l.v));
    std::unordered_set<std::uint64_t> joined = val;
    joined.insert(test.begin(), test.end());
    if (overlap != 0 || joined != all || val.size() + test.size() != all.size()) ++bad_split;

    const auto seen = window_edge_keys(setup.window);
    for (auto key : test) leaks += seen.count(key);

    EvalOptions o;
    o.k = k;
    o.teacher = tc;
    o.student = sc;
    o.trials = 5;
    o.seed = rng();
    const EvalReport r = run_evaluation(ev, o);
    std::vector<double> rm;
    for (const TrialRecord& t : r.trials) rm.push_back(t.teacher.metrics.rmse);
    if (r.trials.size() != 5 || MeanStd::of(rm).mean != r.teacher.rmse.mean) ++bad_reports;
  }
  report(8, "protocol hygiene", bad_split == 0 && leaks == 0 && bad_reports == 0,
         fmt("%zu events; %zu bad splits, %zu test links seen in training windows, %zu reports not averaging 5 trials",
             events, bad_split, leaks, bad_reports));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / "egad_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  json cfg = json::parse(slurp(fs::path(EGAD_SOURCE_DIR) / "tools/configs/synthetic.json"));
  std::vector<json> payloads;
  std::vector<std::string> csvs;
  bool ran = true;
  for (const char* name : {"a", "b"}) {
    cfg["output"] = name;
    const fs::path p = dir / (std::string(name) + ".json");
    std::ofstream(p) << cfg.dump(2);
    const std::string cmd = std::string(EGAD_CLI_PATH) + " evaluate " + p.string() + " > " + (dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (status != 0) {
      ran = false;
      break;
    }
    json j = json::parse(slurp(dir / name / "report_k6_dot.json"));
    j.erase("meta");
    payloads.push_back(j);
    csvs.push_back(slurp(dir / name / "report_k6_dot.csv"));
  }
  const bool ok = ran && payloads[0].dump() == payloads[1].dump() && csvs[0] == csvs[1];
  report(9, "determinism", ok,
         ran ? fmt("two evaluate runs: json payload %s, csv %s", payloads[0].dump() == payloads[1].dump() ? "identical" : "differs",
                   csvs[0] == csvs[1] ? "identical" : "differs")
             : std::string("evaluate failed: ") + slurp(dir / "log.txt"));
}

void persistence() {
  const fs::path dir = fs::temp_directory_path() / "egad_acceptance_persist";
  std::mt19937_64 rng(10);
  std::size_t ckpt_bad = 0, event_bad = 0;
  for (int i = 0; i < 20; ++i) {
    const RawEvent raw = random_raw_event(10 + rng() % 20, 4 + rng() % 3, 0.3, rng);
    const EventSequence ev = normalize_weights(raw);
    ModelConfig cfg = egad::testing::tiny_config(1 + rng() % 3, 1 + rng() % 3, rng());
    cfg.epochs = 2;
    const TrainResult tr = train_teacher(ev, 3, cfg);
    const std::string bytes = save_checkpoint(tr.model);
    const EgadModel back = load_checkpoint(bytes);
    if (!(back == tr.model) || save_checkpoint(back) != bytes) ++ckpt_bad;

    fs::remove_all(dir);
    const fs::path manifest = export_event(raw, dir);
    if (!(load_event(manifest) == ev)) ++event_bad;
  }
  fs::remove_all(dir);
  report(10, "persistence", ckpt_bad == 0 && event_bad == 0,
         fmt("20 instances; %zu checkpoint and %zu event round trips differ", ckpt_bad, event_bad));
}

template <class F>
void guarded(int id, const std::string& name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(1, "gradient correctness", gradient_correctness);
  guarded(2, "equation oracles", oracles_and_stochasticity);
  guarded(4, "parameter accounting", parameter_accounting);
  guarded(5, "desk-scale learning", desk_scale_learning_and_distillation);
  guarded(7, "gamma-sweep shape", gamma_sweep_shape);
  guarded(8, "protocol hygiene", protocol_hygiene);
  guarded(9, "determinism", determinism);
  guarded(10, "persistence", persistence);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
