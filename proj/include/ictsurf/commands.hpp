#pragma once

// Command implementations shared by the CLI and the tests: checkpoints,
// run manifests, and the simulate / train / evaluate / predict / cv /
// experiment operations.

#include <nlohmann/json.hpp>

#include <chrono>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ictsurf/data.hpp"
#include "ictsurf/errors.hpp"
#include "ictsurf/metrics.hpp"
#include "ictsurf/model.hpp"
#include "ictsurf/training.hpp"

namespace ictsurf {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Files

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline void write_json(const std::string& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// `path` with a trailing extension replaced: strip_extension("a/b.csv") = "a/b".
inline std::string strip_extension(const std::string& path) {
  const std::filesystem::path p(path);
  if (!p.has_extension()) return path;
  return (p.parent_path() / p.stem()).string();
}

/// Keeps large matrix buffers on the heap instead of mapping and unmapping
/// them on every allocation (glibc only; a no-op elsewhere).
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

// ---------------------------------------------------------------------------
// Checkpoint

/// A trained network with everything needed to score raw data again.
struct Checkpoint {
  HazardNetwork model;
  PreprocessStats stats;
  Schema schema;
  TrainConfig config;
  std::size_t best_epoch = 0;

  nlohmann::json to_json() const {
    return {{"format", "ictsurf-checkpoint"}, {"version", kVersion},     {"schema", schema.to_json()},
            {"config", config.to_json()},    {"best_epoch", best_epoch}, {"preprocess", stats.to_json()},
            {"model", model.to_json()}};
  }

  static Checkpoint from_json(const nlohmann::json& doc) {
    try {
      if (doc.at("format").get<std::string>() != "ictsurf-checkpoint") throw InputError("not a checkpoint");
      Checkpoint c;
      c.schema = Schema::from_json(doc.at("schema"));
      c.config = TrainConfig::from_json(doc.at("config"));
      c.best_epoch = doc.at("best_epoch").get<std::size_t>();
      c.stats = PreprocessStats::from_json(doc.at("preprocess"));
      c.model = HazardNetwork::from_json(doc.at("model"));
      if (c.model.covariates() != c.stats.encoded_width()) {
        throw InputError("checkpoint model width does not match its preprocessing");
      }
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("checkpoint: ") + e.what());
    }
  }
};

inline void save_checkpoint(const std::string& path, const Checkpoint& c) { write_json(path, c.to_json()); }

inline Checkpoint load_checkpoint(const std::string& path) { return Checkpoint::from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// Manifest

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double seconds = 0.0;

  nlohmann::json to_json() const {
    return {{"command", command}, {"config", config},   {"seed", seed},          {"inputs", inputs},
            {"outputs", outputs}, {"version", kVersion}, {"wall_seconds", seconds}};
  }
};

inline std::string manifest_path(const std::string& out) { return strip_extension(out) + ".manifest.json"; }

class ManifestScope {
 public:
  explicit ManifestScope(std::string command) : start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
  }
  RunManifest& manifest() { return manifest_; }
  void write(const std::string& out) {
    manifest_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(manifest_path(out), manifest_.to_json());
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// simulate

enum class SimulationKind { nonlinear, competing };

inline SimulationKind parse_simulation_kind(std::string_view s) {
  if (s == "nonlinear") return SimulationKind::nonlinear;
  if (s == "competing") return SimulationKind::competing;
  throw InputError("unknown simulation kind '" + std::string(s) + "' (expected nonlinear or competing)");
}

inline Dataset simulate(SimulationKind kind, std::size_t n, std::uint64_t seed) {
  return kind == SimulationKind::nonlinear ? simulate_nonlinear(n, seed) : simulate_competing(n, seed);
}

/// Writes the CSV, its schema (default: <out stem>.schema.json) and a manifest.
inline void cmd_simulate(SimulationKind kind, std::size_t n, std::uint64_t seed, const std::string& out,
                         std::string schema_path = {}) {
  ManifestScope scope("simulate");
  if (schema_path.empty()) schema_path = strip_extension(out) + ".schema.json";
  const Dataset d = simulate(kind, n, seed);
  write_csv(out, d);
  save_schema(schema_path, d.schema);
  auto& m = scope.manifest();
  m.seed = seed;
  m.config = {{"kind", kind == SimulationKind::nonlinear ? "nonlinear" : "competing"}, {"n", n}};
  m.outputs = {out, schema_path};
  scope.write(out);
}

// ---------------------------------------------------------------------------
// train

struct TrainOutcome {
  Checkpoint checkpoint;
  std::vector<EpochRecord> log;
};

/// Holdout protocol on a raw dataset: stratified 15% holdout, preprocessing
/// fit on the remaining rows, model chosen by holdout loss.
inline TrainOutcome train_on_dataset(const Dataset& raw, const TrainConfig& config, double holdout_fraction = 0.15) {
  config.validate();
  if (raw.schema.risks != config.risks) {
    throw InputError("dataset has " + std::to_string(raw.schema.risks) + " risks but the configuration expects " +
                     std::to_string(config.risks));
  }
  const CvSplit split = make_cv_split(raw.labels, 2, holdout_fraction, config.seed);
  std::vector<std::size_t> rest;
  for (const auto& f : split.folds) rest.insert(rest.end(), f.begin(), f.end());
  std::sort(rest.begin(), rest.end());
  const Dataset raw_train = raw.subset(rest);
  const Dataset raw_holdout = raw.subset(split.holdout);
  TrainOutcome out;
  out.checkpoint.stats = fit_preprocess(raw_train, mean_time(raw_holdout));
  SurvivalData train_set = apply_preprocess(raw_train, out.checkpoint.stats);
  SurvivalData holdout = apply_preprocess(raw_holdout, out.checkpoint.stats);
  train_set.ids = rest;
  holdout.ids = split.holdout;
  TrainResult r = train(train_set, holdout, config);
  out.checkpoint.model = std::move(r.model);
  out.checkpoint.schema = raw.schema;
  out.checkpoint.config = config;
  out.checkpoint.best_epoch = r.best_epoch;
  out.log = std::move(r.log);
  return out;
}

inline std::string training_log_path(const std::string& model_out) { return strip_extension(model_out) + ".log.csv"; }

inline void cmd_train(const std::string& data_path, const std::string& schema_path, const TrainConfig& config,
                      const std::string& out) {
  ManifestScope scope("train");
  const Schema schema = load_schema(schema_path);
  const Dataset raw = load_csv(data_path, schema);
  const TrainOutcome result = train_on_dataset(raw, config);
  save_checkpoint(out, result.checkpoint);
  const std::string log_path = training_log_path(out);
  write_table(log_path, training_log_table(result.log));
  auto& m = scope.manifest();
  m.config = config.to_json();
  m.seed = config.seed;
  m.inputs = {data_path, schema_path};
  m.outputs = {out, log_path};
  scope.write(out);
}

// ---------------------------------------------------------------------------
// evaluate

struct Evaluation {
  std::vector<double> horizons;
  MetricReport ipcw;
  MetricReport plain;

  nlohmann::json to_json() const {
    return {{"horizons", horizons}, {"ipcw", ipcw.to_json()}, {"plain", plain.to_json()}};
  }
};

/// Scores preprocessed data at the 25/50/75% event-time horizons of `data`.
/// The censoring distribution is estimated on the evaluated data itself.
template <HazardModel M>
Evaluation evaluate_model(const M& model, const SurvivalData& data, std::size_t mesh_points = 101) {
  if (static_cast<std::size_t>(data.covariates.cols()) != model.covariates()) {
    throw InputError("model expects " + std::to_string(model.covariates()) + " covariates, data has " +
                     std::to_string(data.covariates.cols()));
  }
  Evaluation e;
  const auto events = data.event_indicators();
  e.horizons = event_time_percentiles(data.times, events, default_horizon_fractions());
  const HorizonPredictions pred = predict_at_horizons(model, data.covariates, e.horizons, mesh_points);
  const CensoringEstimate censoring = km_censoring(data.times, events);
  const auto& fractions = default_horizon_fractions();
  e.ipcw = score_predictions(pred.survival, pred.incidence, data.times, data.labels, fractions, e.horizons, &censoring);
  e.plain = score_predictions(pred.survival, pred.incidence, data.times, data.labels, fractions, e.horizons, nullptr);
  return e;
}

/// Evaluation reported in the dataset's own time units.
inline Evaluation evaluate_checkpoint(const Checkpoint& c, const Dataset& raw) {
  if (raw.columns.size() != c.schema.features.size()) {
    throw InputError("dataset has " + std::to_string(raw.columns.size()) + " features, the model was trained on " +
                     std::to_string(c.schema.features.size()));
  }
  Evaluation e = evaluate_model(c.model, apply_preprocess(raw, c.stats), c.config.eval_mesh_points);
  for (double& h : e.horizons) h *= c.stats.time_scale;
  for (auto* r : {&e.ipcw, &e.plain}) {
    for (auto& entry : r->entries) entry.horizon_time *= c.stats.time_scale;
  }
  return e;
}

inline void cmd_evaluate(const std::string& model_path, const std::string& data_path, const std::string& schema_path,
                         const std::string& out) {
  ManifestScope scope("evaluate");
  const Checkpoint c = load_checkpoint(model_path);
  const Dataset raw = load_csv(data_path, load_schema(schema_path));
  write_json(out, evaluate_checkpoint(c, raw).to_json());
  auto& m = scope.manifest();
  m.seed = c.config.seed;
  m.config = c.config.to_json();
  m.inputs = {model_path, data_path, schema_path};
  m.outputs = {out};
  scope.write(out);
}

// ---------------------------------------------------------------------------
// predict

/// "0,0.5,2" lists the points; "count:max" spaces `count` points evenly on
/// [0, max]. Points are in the dataset's time units.
inline std::vector<double> parse_mesh(std::string_view spec) {
  auto number = [&](std::string_view s) {
    const auto v = parse_number(s);
    if (!v || !std::isfinite(*v)) throw InputError("mesh: cannot parse '" + std::string(s) + "'");
    return *v;
  };
  std::vector<double> mesh;
  if (const auto colon = spec.find(':'); colon != std::string_view::npos) {
    const double count = number(spec.substr(0, colon));
    const double end = number(spec.substr(colon + 1));
    if (count < 1 || count != std::floor(count)) throw InputError("mesh: count must be a positive integer");
    if (count == 1) return {0.0};
    if (!(end > 0.0)) throw InputError("mesh: max time must be positive");
    mesh = linspace(end, static_cast<std::size_t>(count));
  } else {
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      const auto comma = spec.find(',', pos);
      const auto piece = spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      mesh.push_back(number(piece));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  validate_mesh(mesh);
  return mesh;
}

/// Survival (and incidence for K >= 2) for row `row` of a covariate table.
/// Time and label columns are optional in the table.
inline Table predict_table(const Checkpoint& c, const Table& covariates, std::size_t row,
                           std::span<const double> mesh) {
  validate_mesh(mesh);
  Table t = covariates;
  const auto has = [&](const std::string& name) {
    return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
  };
  if (!has(c.schema.time_column)) {
    t.header.push_back(c.schema.time_column);
    for (auto& r : t.rows) r.push_back("1");
  }
  if (!has(c.schema.label_column)) {
    t.header.push_back(c.schema.label_column);
    for (auto& r : t.rows) r.push_back("0");
  }
  if (row >= t.rows.size()) {
    throw InputError("row " + std::to_string(row) + " requested but the table has " + std::to_string(t.rows.size()) +
                     " rows");
  }
  t.rows = {t.rows[row]};
  const SurvivalData d = apply_preprocess(dataset_from_table(t, c.schema), c.stats);
  std::vector<double> scaled(mesh.begin(), mesh.end());
  for (double& v : scaled) v /= c.stats.time_scale;
  std::vector<double> xs(static_cast<std::size_t>(d.covariates.cols()));
  for (Index j = 0; j < d.covariates.cols(); ++j) xs[static_cast<std::size_t>(j)] = d.covariates(0, j);
  Table out;
  out.header = {"time", "survival"};
  const std::size_t k = c.model.risks();
  if (k >= 2) {
    for (std::size_t r = 1; r <= k; ++r) out.header.push_back("cif_" + std::to_string(r));
    const CifCurve curve = predict_cif(c.model, xs, scaled);
    for (std::size_t j = 0; j < mesh.size(); ++j) {
      std::vector<std::string> fields{format_number(mesh[j]), format_number(j == 0 ? 1.0 : curve.survival[j])};
      for (std::size_t r = 0; r < k; ++r) fields.push_back(format_number(curve.incidence[r][j]));
      out.rows.push_back(std::move(fields));
    }
  } else {
    const SurvivalCurve curve = predict_survival_curve(c.model, xs, scaled);
    for (std::size_t j = 0; j < mesh.size(); ++j) {
      out.rows.push_back({format_number(mesh[j]), format_number(curve.survival[j])});
    }
  }
  return out;
}

inline void cmd_predict(const std::string& model_path, const std::string& data_path, std::size_t row,
                        const std::string& mesh_spec, const std::string& out) {
  ManifestScope scope("predict");
  const Checkpoint c = load_checkpoint(model_path);
  const std::vector<double> mesh = parse_mesh(mesh_spec);
  write_table(out, predict_table(c, read_table(data_path), row, mesh));
  auto& m = scope.manifest();
  m.seed = c.config.seed;
  m.config = {{"row", row}, {"mesh", mesh_spec}};
  m.inputs = {model_path, data_path};
  m.outputs = {out};
  scope.write(out);
}

// ---------------------------------------------------------------------------
// cv

inline nlohmann::json cv_to_json(const CvResult& cv) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : cv.folds) {
    folds.push_back({{"best_epoch", f.best_epoch},
                     {"epochs", f.log.size()},
                     {"ipcw", f.ipcw.to_json()},
                     {"plain", f.plain.to_json()}});
  }
  return {{"horizons", cv.horizons}, {"holdout_size", cv.split.holdout.size()}, {"folds", folds}};
}

inline void cmd_cv(const std::string& data_path, const std::string& schema_path, const TrainConfig& config,
                   const std::string& out, const CvOptions& options = {}) {
  ManifestScope scope("cv");
  const Dataset raw = load_csv(data_path, load_schema(schema_path));
  const CvResult cv = cross_validate(raw, config, options);
  write_table(out, cv_summary_table(cv));
  const std::string detail_path = strip_extension(out) + ".folds.json";
  write_json(detail_path, cv_to_json(cv));
  auto& m = scope.manifest();
  m.config = config.to_json();
  m.config["folds"] = options.folds;
  m.seed = config.seed;
  m.inputs = {data_path, schema_path};
  m.outputs = {out, detail_path};
  scope.write(out);
}

// ---------------------------------------------------------------------------
// discretization experiment

inline const std::vector<std::size_t>& default_experiment_grid_sizes() {
  static const std::vector<std::size_t> m{3, 5, 10, 30, 50, 100};
  return m;
}

struct ExperimentRow {
  GridScheme scheme = GridScheme::per_sample;
  std::size_t m = 0;
  int risk = 1;
  double horizon_fraction = 0.0;
  double horizon_time = 0.0;
  double ctd_mean = 0.0;
  double ctd_se = 0.0;
};

/// k-fold CV for every (scheme, m); IPCW Ctd per risk and horizon. Row
/// order follows the argument order.
inline std::vector<ExperimentRow> discretization_experiment(const Dataset& raw, const TrainConfig& config,
                                                            std::span<const std::size_t> grid_sizes,
                                                            std::span<const GridScheme> schemes,
                                                            const CvOptions& options = {}) {
  std::vector<ExperimentRow> rows;
  for (GridScheme scheme : schemes) {
    for (std::size_t m : grid_sizes) {
      TrainConfig c = config;
      c.scheme = scheme;
      c.grid_points = m;
      const CvResult cv = cross_validate(raw, c, options);
      for (const auto& a : cv.aggregate) {
        if (a.weighting != "ipcw") continue;
        rows.push_back({scheme, m, a.risk, a.horizon_fraction, a.horizon_time, a.ctd_mean, a.ctd_se});
      }
    }
  }
  return rows;
}

inline Table experiment_table(std::span<const ExperimentRow> rows) {
  Table t;
  t.header = {"scheme", "m", "risk", "horizon_fraction", "horizon_time", "ctd_mean", "ctd_se"};
  for (const auto& r : rows) {
    t.rows.push_back({to_string(r.scheme), std::to_string(r.m), std::to_string(r.risk),
                      format_number(r.horizon_fraction), format_number(r.horizon_time), format_number(r.ctd_mean),
                      format_number(r.ctd_se)});
  }
  return t;
}

inline void cmd_experiment(const std::string& data_path, const std::string& schema_path, const TrainConfig& config,
                           std::span<const std::size_t> grid_sizes, std::span<const GridScheme> schemes,
                           const std::string& out, const CvOptions& options = {}) {
  ManifestScope scope("experiment");
  const Dataset raw = load_csv(data_path, load_schema(schema_path));
  write_table(out, experiment_table(discretization_experiment(raw, config, grid_sizes, schemes, options)));
  auto& m = scope.manifest();
  m.config = config.to_json();
  m.config["m_list"] = std::vector<std::size_t>(grid_sizes.begin(), grid_sizes.end());
  std::vector<std::string> names;
  for (auto s : schemes) names.push_back(to_string(s));
  m.config["schemes"] = names;
  m.config["folds"] = options.folds;
  m.seed = config.seed;
  m.inputs = {data_path, schema_path};
  m.outputs = {out};
  scope.write(out);
}

}  // namespace ictsurf
