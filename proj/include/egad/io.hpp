#pragma once

#include <bit>
#include <cmath>
#include <cstdio>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <set>
#include <utility>
#include <vector>

#include "json.hpp"

#include "egad/config.hpp"
#include "egad/errors.hpp"
#include "egad/event_sim.hpp"
#include "egad/graph.hpp"
#include "egad/linkpred.hpp"
#include "egad/teacher.hpp"

namespace egad {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw ContractError("format_double: conversion failed");
  return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  field = trim(field);
  T out{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError("bad " + std::string(what) + " '" + std::string(field) + "'", line);
  }
  return out;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Snapshot CSV
// ---------------------------------------------------------------------------

/// Turns one non-blank line of a snapshot file into an edge, or nullopt to skip
/// it. Swap in a different converter for files in another layout.
using LineConverter = std::function<std::optional<RawEdge>(std::string_view line, std::size_t line_no)>;

/// `u,v,weight` with integer ids; a literal `u,v,weight` header is skipped.
inline std::optional<RawEdge> parse_edge_line(std::string_view line, std::size_t line_no) {
  if (detail::trim(line) == "u,v,weight") return std::nullopt;
  const auto c1 = line.find(',');
  const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
  if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
    throw ParseError("expected 'u,v,weight'", line_no);
  }
  RawEdge e;
  e.u = detail::parse_number<std::int64_t>(line.substr(0, c1), line_no, "node id");
  e.v = detail::parse_number<std::int64_t>(line.substr(c1 + 1, c2 - c1 - 1), line_no, "node id");
  e.weight = detail::parse_number<double>(line.substr(c2 + 1), line_no, "weight");
  return e;
}

inline std::vector<RawEdge> parse_snapshot_csv(std::string_view text, const LineConverter& convert = parse_edge_line) {
  std::vector<RawEdge> edges;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (detail::trim(line).empty()) continue;
    const std::optional<RawEdge> e = convert(line, line_no);
    if (!e) continue;
    if (e->u == e->v) throw ParseError("self-loop on node " + std::to_string(e->u), line_no);
    if (!std::isfinite(e->weight) || e->weight <= 0.0) {
      throw ParseError("weight must be positive, got " + format_double(e->weight), line_no);
    }
    const auto lo = std::min(e->u, e->v), hi = std::max(e->u, e->v);
    if (!seen.emplace(lo, hi).second) {
      throw DuplicateEdgeError("line " + std::to_string(line_no) + ": duplicate edge " + std::to_string(lo) + "-" +
                               std::to_string(hi));
    }
    edges.push_back(*e);
  }
  return edges;
}

inline std::string snapshot_csv(const std::vector<RawEdge>& edges) {
  std::string out = "u,v,weight\n";
  for (const RawEdge& e : edges) {
    out += std::to_string(e.u);
    out += ',';
    out += std::to_string(e.v);
    out += ',';
    out += format_double(e.weight);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Event manifest
// ---------------------------------------------------------------------------

struct EventManifest {
  std::string name;
  std::size_t num_snapshots = 0;
  double snapshot_seconds = 600.0;
  std::string weight_unit = "kbps";
  std::vector<std::string> files;

  void validate() const {
    if (files.size() != num_snapshots) {
      throw ConfigError("manifest: num_snapshots is " + std::to_string(num_snapshots) + " but " +
                        std::to_string(files.size()) + " files are listed");
    }
  }
};

inline json to_json(const EventManifest& m) {
  return json{{"name", m.name},
              {"num_snapshots", m.num_snapshots},
              {"snapshot_seconds", m.snapshot_seconds},
              {"weight_unit", m.weight_unit},
              {"files", m.files}};
}

inline EventManifest manifest_from_json(const json& j) {
  try {
    EventManifest m;
    m.name = j.at("name").get<std::string>();
    m.num_snapshots = j.at("num_snapshots").get<std::size_t>();
    m.snapshot_seconds = j.value("snapshot_seconds", 600.0);
    m.weight_unit = j.value("weight_unit", std::string("kbps"));
    m.files = j.at("files").get<std::vector<std::string>>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
}

inline EventManifest read_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

inline RawEvent load_raw_event(const fs::path& manifest_path, const LineConverter& convert = parse_edge_line) {
  const EventManifest m = read_manifest(manifest_path);
  RawEvent raw;
  raw.name = m.name;
  const fs::path dir = manifest_path.parent_path();
  for (const std::string& f : m.files) {
    const fs::path p = dir / f;
    if (!fs::exists(p)) throw ConfigError("manifest: snapshot file " + p.string() + " does not exist");
    try {
      raw.snapshots.push_back(parse_snapshot_csv(detail::read_file(p), convert));
    } catch (const ParseError& e) {
      throw ParseError(e.message(), e.line(), p.string());
    } catch (const DuplicateEdgeError& e) {
      throw DuplicateEdgeError(p.string() + ": " + e.what());
    }
  }
  return raw;
}

inline EventSequence load_event(const fs::path& manifest_path, const LineConverter& convert = parse_edge_line) {
  return normalize_weights(load_raw_event(manifest_path, convert));
}

/// Writes manifest.json and one CSV per snapshot into `dir`; returns the
/// manifest path.
inline fs::path export_event(const RawEvent& raw, const fs::path& dir, double snapshot_seconds = 600.0,
                             const std::string& weight_unit = "kbps") {
  fs::create_directories(dir);
  EventManifest m;
  m.name = raw.name;
  m.num_snapshots = raw.snapshots.size();
  m.snapshot_seconds = snapshot_seconds;
  m.weight_unit = weight_unit;
  for (std::size_t k = 0; k < raw.snapshots.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", k);
    m.files.push_back(name);
    detail::write_file(dir / name, snapshot_csv(raw.snapshots[k]));
  }
  const fs::path manifest = dir / "manifest.json";
  detail::write_file(manifest, to_json(m).dump(2) + "\n");
  return manifest;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'E', 'G', 'A', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t x) { bytes_.push_back(static_cast<char>(x)); }
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void i64(std::int64_t x) { u64(static_cast<std::uint64_t>(x)); }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return x;
  }
  std::uint64_t u64() {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return x;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(raw(u32())); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw CheckpointError("checkpoint: truncated payload");
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Layout (little-endian): magic, version u32, config, window_end, n_global,
/// tensor count, tensors (name, rows, cols, row-major f64), registry (i64 per
/// node), FNV-1a checksum of everything before it.
inline std::string save_checkpoint(const EgadModel& model) {
  model.check_shapes();
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  const ModelConfig& c = model.config;
  w.u64(c.window);
  w.u64(c.heads);
  w.u64(c.d1);
  w.u64(c.d2);
  w.f64(c.lr);
  w.u64(c.epochs);
  w.f64(c.gamma);
  w.u64(c.seed);
  w.u8(static_cast<std::uint8_t>(c.role));
  w.u64(model.window_end);
  w.u64(model.n_global());
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  w.u64(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    w.str(names[i]);
    w.u64(params[i]->rows());
    w.u64(params[i]->cols());
    for (double x : params[i]->data()) w.f64(x);
  }
  w.u64(model.registry.size());
  for (std::int64_t id : model.registry) w.i64(id);
  const std::uint64_t sum = detail::fnv1a(w.bytes());
  w.u64(sum);
  return std::move(w.bytes());
}

inline EgadModel load_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + 8) throw CheckpointError("checkpoint: truncated payload");
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  detail::ByteReader tail(bytes.substr(bytes.size() - 8));
  const bool checksum_ok = tail.u64() == detail::fnv1a(body);

  detail::ByteReader r(body);
  r.raw(sizeof kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: format version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  if (!checksum_ok) throw CheckpointError("checkpoint: checksum mismatch (corrupt or truncated)");

  EgadModel m;
  ModelConfig& c = m.config;
  c.window = r.u64();
  c.heads = r.u64();
  c.d1 = r.u64();
  c.d2 = r.u64();
  c.lr = r.f64();
  c.epochs = r.u64();
  c.gamma = r.f64();
  c.seed = r.u64();
  const std::uint8_t role = r.u8();
  if (role > 1) throw CheckpointError("checkpoint: bad role flag");
  c.role = static_cast<Role>(role);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  m.window_end = r.u64();
  const std::uint64_t n_global = r.u64();

  // Allocate the expected tensors, then fill them by name in canonical order.
  m.w1 = Matrix(n_global, c.d1);
  m.w2.assign(c.window + 1, Matrix(c.d1, c.d2));
  m.transitions.assign(c.window, TransitionParams{});
  for (auto& t : m.transitions) t.heads.assign(c.heads, AttentionHeadParams{Matrix(c.d1, c.d1), Matrix(2 * c.d1, 1)});
  const auto names = m.parameter_names();
  const auto params = m.parameters();
  const std::uint64_t count = r.u64();
  if (count != params.size()) {
    throw CheckpointError("checkpoint: " + std::to_string(count) + " tensors, config implies " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = r.str();
    if (name != names[i]) throw CheckpointError("checkpoint: tensor '" + name + "' where '" + names[i] + "' expected");
    const std::uint64_t rows = r.u64(), cols = r.u64();
    if (rows != params[i]->rows() || cols != params[i]->cols()) {
      throw ShapeError("checkpoint: tensor " + name + " is " + std::to_string(rows) + "x" + std::to_string(cols) +
                       ", config implies " + params[i]->shape_str());
    }
    for (double& x : params[i]->data()) x = r.f64();
  }
  const std::uint64_t n_registry = r.u64();
  if (n_registry != n_global) throw CheckpointError("checkpoint: registry size differs from W1 rows");
  m.registry.resize(n_registry);
  for (auto& id : m.registry) id = r.i64();
  if (r.remaining() != 0) throw CheckpointError("checkpoint: trailing bytes");
  m.check_shapes();
  return m;
}

/// Loads and checks that the stored architecture matches `expected`.
inline EgadModel load_checkpoint(std::string_view bytes, const ModelConfig& expected) {
  EgadModel m = load_checkpoint(bytes);
  const ModelConfig& c = m.config;
  if (c.window != expected.window || c.heads != expected.heads || c.d1 != expected.d1 || c.d2 != expected.d2) {
    throw ShapeError("checkpoint: stored l=" + std::to_string(c.window) + " h=" + std::to_string(c.heads) +
                     " d1=" + std::to_string(c.d1) + " d2=" + std::to_string(c.d2) + ", pipeline expects l=" +
                     std::to_string(expected.window) + " h=" + std::to_string(expected.heads) +
                     " d1=" + std::to_string(expected.d1) + " d2=" + std::to_string(expected.d2));
  }
  return m;
}

inline void save_checkpoint_file(const EgadModel& model, const fs::path& path) {
  detail::write_file(path, save_checkpoint(model));
}

inline EgadModel load_checkpoint_file(const fs::path& path) { return load_checkpoint(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Traces and reports
// ---------------------------------------------------------------------------

inline std::string trace_csv(const TrainingTrace& trace) {
  std::string out = "epoch,loss,seconds\n";
  for (std::size_t i = 0; i < trace.loss.size(); ++i) {
    out += std::to_string(i) + ',' + format_double(trace.loss[i]) + ',' + format_double(trace.seconds[i]) + '\n';
  }
  return out;
}

inline json to_json(const ModelConfig& c) {
  return json{{"l", c.window}, {"h", c.heads},          {"d1", c.d1},     {"d2", c.d2},
              {"lr", c.lr},    {"epochs", c.epochs},    {"gamma", c.gamma}, {"seed", c.seed},
              {"role", to_string(c.role)}};
}

/// Missing fields keep the values of `base`.
inline ModelConfig model_config_from_json(const json& j, ModelConfig base) {
  try {
    base.window = j.value("l", base.window);
    base.heads = j.value("h", base.heads);
    base.d1 = j.value("d1", base.d1);
    base.d2 = j.value("d2", base.d2);
    base.lr = j.value("lr", base.lr);
    base.epochs = j.value("epochs", base.epochs);
    base.gamma = j.value("gamma", base.gamma);
    base.seed = j.value("seed", base.seed);
    if (j.contains("role")) base.role = role_from_string(j.at("role").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  base.validate();
  return base;
}

namespace detail {
inline json to_json(const Metrics& m) { return json{{"rmse", m.rmse}, {"mae", m.mae}}; }
inline json to_json(const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; }
inline json to_json(const ModelSummary& s) { return json{{"rmse", to_json(s.rmse)}, {"mae", to_json(s.mae)}}; }
}  // namespace detail

/// Numeric payload only; deterministic for a fixed configuration and seed.
inline json report_payload(const EvalReport& r) {
  json trials = json::array();
  for (const TrialRecord& t : r.trials) {
    trials.push_back(json{{"trial", t.trial},
                          {"seed", t.seed},
                          {"split_seed", t.split_seed},
                          {"n_validation", t.n_validation},
                          {"n_test", t.n_test},
                          {"teacher", {{"metrics", detail::to_json(t.teacher.metrics)}, {"final_loss", t.teacher.final_loss}}},
                          {"student", {{"metrics", detail::to_json(t.student.metrics)}, {"final_loss", t.student.final_loss}}},
                          {"baseline", {{"metrics", detail::to_json(t.baseline)}, {"value", t.baseline_value}}}});
  }
  return json{{"event", r.event},
              {"k", r.k},
              {"scorer", to_string(r.scorer)},
              {"teacher_config", to_json(r.teacher_config)},
              {"student_config", to_json(r.student_config)},
              {"teacher", detail::to_json(r.teacher)},
              {"student", detail::to_json(r.student)},
              {"baseline", detail::to_json(r.baseline)},
              {"trials", trials},
              {"param_count_teacher", r.param_count_teacher},
              {"param_count_student", r.param_count_student},
              {"compression_ratio",
               {{"num", r.compression_ratio.num},
                {"den", r.compression_ratio.den},
                {"value", r.compression_ratio.value()},
                {"presentation", r.compression_ratio.presentation()}}},
              {"split_seeds", r.split_seeds}};
}

/// Full report document: the payload plus a `meta` object for run-specific
/// details such as timestamps.
inline json report_json(const EvalReport& r, const json& meta = json::object()) {
  json j = report_payload(r);
  j["meta"] = meta;
  return j;
}

/// One row per trial, model and metric.
inline std::string report_csv(const EvalReport& r) {
  std::string out = "scorer,trial,model,metric,value\n";
  const std::string scorer = to_string(r.scorer);
  auto row = [&](std::size_t trial, const char* model, const Metrics& m) {
    out += scorer + ',' + std::to_string(trial) + ',' + model + ",rmse," + format_double(m.rmse) + '\n';
    out += scorer + ',' + std::to_string(trial) + ',' + model + ",mae," + format_double(m.mae) + '\n';
  };
  for (const TrialRecord& t : r.trials) {
    row(t.trial, "teacher", t.teacher.metrics);
    row(t.trial, "student", t.student.metrics);
    row(t.trial, "baseline", t.baseline);
  }
  return out;
}

inline std::string gamma_sweep_csv(const std::vector<GammaPoint>& points) {
  std::string out = "gamma,rmse,mae,runs\n";
  for (const GammaPoint& p : points) {
    out += format_double(p.gamma) + ',' + format_double(p.rmse) + ',' + format_double(p.mae) + ',' +
           std::to_string(p.runs) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation config and run config
// ---------------------------------------------------------------------------

inline json to_json(const SimConfig& s) {
  return json{{"name", s.name},
              {"offices", s.offices},
              {"viewers_total", s.viewers_total},
              {"snapshots", s.snapshots},
              {"arrival", to_string(s.arrival)},
              {"intra_bw", {{"mean", s.intra_bw.mean}, {"spread", s.intra_bw.spread}}},
              {"inter_bw", {{"mean", s.inter_bw.mean}, {"spread", s.inter_bw.spread}}},
              {"degree_cap", s.degree_cap},
              {"rewire_prob", s.rewire_prob},
              {"same_office_pref", s.same_office_pref},
              {"weight_jitter", s.weight_jitter},
              {"depart_prob", s.depart_prob},
              {"seed", s.seed}};
}

inline SimConfig sim_config_from_json(const json& j) {
  SimConfig s;
  try {
    s.name = j.value("name", s.name);
    s.offices = j.value("offices", s.offices);
    s.viewers_total = j.value("viewers_total", s.viewers_total);
    s.snapshots = j.value("snapshots", s.snapshots);
    if (j.contains("arrival")) s.arrival = arrival_from_string(j.at("arrival").get<std::string>());
    auto bw = [&](const char* key, Bandwidth& b) {
      if (!j.contains(key)) return;
      b.mean = j.at(key).value("mean", b.mean);
      b.spread = j.at(key).value("spread", b.spread);
    };
    bw("intra_bw", s.intra_bw);
    bw("inter_bw", s.inter_bw);
    s.degree_cap = j.value("degree_cap", s.degree_cap);
    s.rewire_prob = j.value("rewire_prob", s.rewire_prob);
    s.same_office_pref = j.value("same_office_pref", s.same_office_pref);
    s.weight_jitter = j.value("weight_jitter", s.weight_jitter);
    s.depart_prob = j.value("depart_prob", s.depart_prob);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("simulate config: ") + e.what());
  }
  s.validate();
  return s;
}

/// Everything a CLI command needs. Relative paths are resolved against the
/// directory of the config file.
struct RunConfig {
  ModelConfig teacher = default_teacher_config();
  ModelConfig student = default_student_config();
  std::vector<ScorerKind> scorers{ScorerKind::dot};
  std::size_t trials = 5;
  std::vector<std::size_t> ks;  // empty: K - 2
  bool raw_inner_product = false;
  std::optional<fs::path> manifest;
  std::optional<SimConfig> simulate;
  fs::path output = "out";
  std::uint64_t seed = 0;

  void validate() const {
    teacher.validate();
    student.validate();
    if (student.window != teacher.window) throw ConfigError("run config: student l must equal teacher l");
    if (trials < 1) throw ConfigError("run config: trials must be >= 1");
    if (manifest && simulate) throw ConfigError("run config: give either data.manifest or data.simulate, not both");
    if (manifest && !fs::exists(*manifest)) throw ConfigError("run config: manifest " + manifest->string() + " not found");
  }
};

inline std::vector<ScorerKind> scorers_from_string(const std::string& s) {
  if (s == "both") return {ScorerKind::dot, ScorerKind::mlp};
  return {scorer_from_string(s)};
}

inline RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig rc;
  try {
    rc.seed = j.value("seed", rc.seed);
    if (j.contains("teacher")) rc.teacher = model_config_from_json(j.at("teacher"), rc.teacher);
    if (j.contains("student")) rc.student = model_config_from_json(j.at("student"), rc.student);
    rc.teacher.role = Role::teacher;
    rc.student.role = Role::student;
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      if (e.contains("scorer")) rc.scorers = scorers_from_string(e.at("scorer").get<std::string>());
      rc.trials = e.value("trials", rc.trials);
      if (e.contains("k")) {
        const json& k = e.at("k");
        rc.ks = k.is_array() ? k.get<std::vector<std::size_t>>() : std::vector<std::size_t>{k.get<std::size_t>()};
      }
      rc.raw_inner_product = e.value("raw_inner_product", rc.raw_inner_product);
    }
    if (j.contains("data")) {
      const json& d = j.at("data");
      if (d.contains("manifest")) rc.manifest = base_dir / d.at("manifest").get<std::string>();
      if (d.contains("simulate")) rc.simulate = sim_config_from_json(d.at("simulate"));
    }
    if (j.contains("output")) rc.output = base_dir / j.at("output").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  rc.validate();
  return rc;
}

inline RunConfig read_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("run config " + path.string() + " not found");
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("run config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

}  // namespace egad
