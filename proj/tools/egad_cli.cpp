#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "egad/egad.hpp"

namespace {

using namespace egad;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::vector<std::size_t> ks;
  std::optional<std::size_t> trials;
  std::optional<std::string> scorer;
  std::optional<std::string> out;
  std::optional<std::string> teacher;
  std::optional<std::string> warm_start;
  std::size_t workers = 1;
  std::string axis = "all";
};

RunConfig resolve(const Overrides& o) {
  RunConfig rc = read_run_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  if (o.gamma) rc.student.gamma = *o.gamma;
  if (!o.ks.empty()) rc.ks = o.ks;
  if (o.trials) rc.trials = *o.trials;
  if (o.scorer) rc.scorers = scorers_from_string(*o.scorer);
  if (o.out) rc.output = *o.out;
  rc.validate();
  return rc;
}

RawEvent raw_event_of(const RunConfig& rc) {
  if (rc.manifest) return load_raw_event(*rc.manifest);
  SimConfig sc = rc.simulate.value_or(SimConfig{});
  sc.seed = rc.seed;
  return simulate_event(sc).raw;
}

std::vector<std::size_t> ks_of(const RunConfig& rc, const EventSequence& ev) {
  if (!rc.ks.empty()) return rc.ks;
  if (ev.size() < 2) throw ConfigError("event has fewer than 2 snapshots; nothing to predict");
  return {ev.size() - 2};
}

json meta(const std::string& command) {
  char host[256] = {};
  gethostname(host, sizeof host - 1);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return json{{"command", command}, {"generated_at", stamp}, {"host", host}};
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
  std::cout << "wrote " << p.string() << "\n";
}

int cmd_simulate(const Overrides& o) {
  const RunConfig rc = resolve(o);
  SimConfig sc = rc.simulate.value_or(SimConfig{});
  sc.seed = rc.seed;
  const SimulatedEvent sim = simulate_event(sc);
  const fs::path manifest = export_event(sim.raw, rc.output);
  for (const SnapshotSummary& s : describe_event(normalize_weights(sim.raw))) {
    std::cout << "snapshot " << s.k << ": " << s.nodes << " nodes, " << s.edges << " edges\n";
  }
  std::cout << "wrote " << manifest.string() << "\n";
  return 0;
}

int cmd_train_teacher(const Overrides& o) {
  const RunConfig rc = resolve(o);
  const EventSequence ev = normalize_weights(raw_event_of(rc));
  const std::size_t k = ks_of(rc, ev).front();
  ModelConfig cfg = rc.teacher;
  cfg.seed = derive_seed(rc.seed, 1);
  TrainOptions opts;
  if (o.warm_start) opts.warm_start = load_checkpoint(detail::read_file(*o.warm_start), cfg);
  const TrainResult r = train_teacher(ev, k, cfg, opts);
  save_checkpoint_file(r.model, rc.output / "teacher.ckpt");
  std::cout << "wrote " << (rc.output / "teacher.ckpt").string() << "\n";
  write_text(rc.output / "teacher_trace.csv", trace_csv(r.trace));
  std::cout << "k=" << k << " loss " << r.trace.loss.front() << " -> " << r.trace.loss.back() << "\n";
  return 0;
}

int cmd_distill(const Overrides& o) {
  const RunConfig rc = resolve(o);
  if (!o.teacher) throw ConfigError("distill needs --teacher <checkpoint>");
  const EventSequence ev = normalize_weights(raw_event_of(rc));
  const EgadModel teacher = load_checkpoint(detail::read_file(*o.teacher), rc.teacher);
  const std::size_t k = rc.ks.empty() ? teacher.window_end : rc.ks.front();
  const Embeddings zt = embed(teacher, PreparedWindow(build_window(ev, k, teacher.config.window)));
  ModelConfig cfg = rc.student;
  cfg.seed = derive_seed(rc.seed, 2);
  const TrainResult r = distill_student({teacher, zt, cfg}, ev, k);
  save_checkpoint_file(r.model, rc.output / "student.ckpt");
  std::cout << "wrote " << (rc.output / "student.ckpt").string() << "\n";
  write_text(rc.output / "student_trace.csv", trace_csv(r.trace));
  std::cout << "k=" << k << " gamma=" << cfg.gamma << " loss " << r.trace.loss.front() << " -> "
            << r.trace.loss.back() << "\n";
  return 0;
}

EvalOptions eval_options(const RunConfig& rc, std::size_t k, std::size_t workers) {
  EvalOptions opts;
  opts.k = k;
  opts.teacher = rc.teacher;
  opts.student = rc.student;
  opts.trials = rc.trials;
  opts.scorers = rc.scorers;
  opts.raw_inner_product = rc.raw_inner_product;
  opts.seed = rc.seed;
  opts.workers = workers;
  return opts;
}

int cmd_evaluate(const Overrides& o) {
  const RunConfig rc = resolve(o);
  const EventSequence ev = normalize_weights(raw_event_of(rc));
  for (std::size_t k : ks_of(rc, ev)) {
    for (const EvalReport& r : run_evaluation_all(ev, eval_options(rc, k, o.workers))) {
      const std::string stem = "report_k" + std::to_string(k) + "_" + to_string(r.scorer);
      write_text(rc.output / (stem + ".json"), report_json(r, meta("evaluate")).dump(2) + "\n");
      write_text(rc.output / (stem + ".csv"), report_csv(r));
      std::printf("k=%zu scorer=%s teacher rmse %.4f +- %.4f  student rmse %.4f +- %.4f  baseline %.4f  params %llu/%llu (%s)\n",
                  k, to_string(r.scorer), r.teacher.rmse.mean, r.teacher.rmse.std, r.student.rmse.mean,
                  r.student.rmse.std, r.baseline.rmse.mean, static_cast<unsigned long long>(r.param_count_student),
                  static_cast<unsigned long long>(r.param_count_teacher), r.compression_ratio.presentation().c_str());
    }
  }
  return 0;
}

int cmd_sweep_gamma(const Overrides& o) {
  const RunConfig rc = resolve(o);
  const EventSequence ev = normalize_weights(raw_event_of(rc));
  const auto points = sweep_gamma(ev, eval_options(rc, 0, o.workers), ks_of(rc, ev), default_gamma_grid());
  write_text(rc.output / "gamma_sweep.csv", gamma_sweep_csv(points));
  for (const GammaPoint& p : points) std::printf("gamma %.1f rmse %.4f mae %.4f\n", p.gamma, p.rmse, p.mae);
  return 0;
}

int cmd_sweep_hparam(const Overrides& o) {
  const RunConfig rc = resolve(o);
  const EventSequence ev = normalize_weights(raw_event_of(rc));
  const std::size_t k = ks_of(rc, ev).front();
  struct Point {
    std::string axis;
    std::size_t value;
    RunConfig rc;
  };
  std::vector<Point> grid;
  auto want = [&](const std::string& a) { return o.axis == "all" || o.axis == a; };
  if (o.axis != "all" && o.axis != "d" && o.axis != "l" && o.axis != "h") {
    throw ConfigError("--axis must be d, l, h or all");
  }
  if (want("d")) {
    for (std::size_t d : {16, 32, 64, 128, 256}) {
      RunConfig p = rc;
      p.teacher.d2 = d;
      p.teacher.d1 = std::max(p.teacher.d1, d);
      grid.push_back({"d", d, p});
    }
  }
  if (want("l")) {
    for (std::size_t l = 1; l <= 5; ++l) {
      RunConfig p = rc;
      p.teacher.window = p.student.window = l;
      grid.push_back({"l", l, p});
    }
  }
  if (want("h")) {
    for (std::size_t h = 1; h <= 5; ++h) {
      RunConfig p = rc;
      p.teacher.heads = h;
      grid.push_back({"h", h, p});
    }
  }
  std::vector<std::optional<EvalReport>> reports(grid.size());
  std::vector<std::string> skipped(grid.size());
  parallel_for(grid.size(), o.workers, [&](std::size_t i) {
    EvalOptions opts = eval_options(grid[i].rc, k, 1);
    opts.scorers = {grid[i].rc.scorers.front()};
    try {
      reports[i] = run_evaluation(ev, opts);
    } catch (const WindowUnderflowError& e) {
      skipped[i] = e.what();
    }
  });
  std::string csv = "axis,value,teacher_rmse,teacher_mae,student_rmse,student_mae,param_count_teacher\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!reports[i]) {
      std::cerr << "skipped " << grid[i].axis << "=" << grid[i].value << ": " << skipped[i] << "\n";
      continue;
    }
    const EvalReport& r = *reports[i];
    csv += grid[i].axis + ',' + std::to_string(grid[i].value) + ',' + format_double(r.teacher.rmse.mean) + ',' +
           format_double(r.teacher.mae.mean) + ',' + format_double(r.student.rmse.mean) + ',' +
           format_double(r.student.mae.mean) + ',' + std::to_string(r.param_count_teacher) + '\n';
  }
  write_text(rc.output / "hparam_sweep.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolving-attention GCN teacher/student training and link-weight evaluation"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("config", o.config, "run config JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "base seed for every random stream");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic event directory");
  common(simulate);

  auto* train = app.add_subcommand("train-teacher", "train the teacher chain at snapshot k");
  common(train);
  train->add_option("--k", o.ks, "snapshot index (default K-2)")->expected(1);
  train->add_option("--warm-start", o.warm_start, "initialize from this teacher checkpoint");

  auto* distill = app.add_subcommand("distill", "distill a student from a teacher checkpoint");
  common(distill);
  distill->add_option("--teacher", o.teacher, "teacher checkpoint")->required()->check(CLI::ExistingFile);
  distill->add_option("--gamma", o.gamma, "weight of the student's own reconstruction loss")
      ->check(CLI::Range(0.0, 1.0));
  distill->add_option("--k", o.ks, "snapshot index (default: the teacher's)")->expected(1);

  auto* evaluate = app.add_subcommand("evaluate", "score teacher, student and baseline on unobserved links");
  common(evaluate);
  auto* gamma_sweep = app.add_subcommand("sweep-gamma", "student RMSE for gamma = 0.1 .. 0.9");
  common(gamma_sweep);
  auto* hparam_sweep = app.add_subcommand("sweep-hparam", "teacher grid over d, l and h");
  common(hparam_sweep);
  hparam_sweep->add_option("--axis", o.axis, "d, l, h or all");
  for (auto* sub : {evaluate, gamma_sweep, hparam_sweep}) {
    sub->add_option("--k", o.ks, "snapshot indices (default K-2)");
    sub->add_option("--trials", o.trials, "independent trials")->check(CLI::PositiveNumber);
    sub->add_option("--scorer", o.scorer, "dot, mlp or both")->check(CLI::IsMember({"dot", "mlp", "both"}));
    sub->add_option("--gamma", o.gamma, "distillation gamma")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--workers", o.workers, "threads for independent trainings")->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);
  try {
    if (simulate->parsed()) return cmd_simulate(o);
    if (train->parsed()) return cmd_train_teacher(o);
    if (distill->parsed()) return cmd_distill(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (gamma_sweep->parsed()) return cmd_sweep_gamma(o);
    if (hparam_sweep->parsed()) return cmd_sweep_hparam(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
