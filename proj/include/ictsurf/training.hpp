#pragma once

// Adam, mini-batch training with holdout model selection, and the
// holdout + k-fold cross-validation protocol.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ictsurf/autodiff.hpp"
#include "ictsurf/data.hpp"
#include "ictsurf/discretization.hpp"
#include "ictsurf/errors.hpp"
#include "ictsurf/loss.hpp"
#include "ictsurf/metrics.hpp"
#include "ictsurf/model.hpp"
#include "ictsurf/random.hpp"

namespace ictsurf {

inline std::string to_string(GridScheme s) { return s == GridScheme::per_sample ? "A" : "B"; }

inline GridScheme parse_scheme(std::string_view text) {
  if (text == "A" || text == "a" || text == "per_sample") return GridScheme::per_sample;
  if (text == "B" || text == "b" || text == "global") return GridScheme::global;
  throw InputError("unknown discretization scheme '" + std::string(text) + "' (expected A or B)");
}

struct TrainConfig {
  double learning_rate = 2e-4;
  std::size_t batch_size = 256;
  std::size_t grid_points = 50;
  GridScheme scheme = GridScheme::per_sample;
  std::size_t max_epochs = 500;
  std::size_t patience = 10;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 64;
  std::size_t embed_dim = 16;
  TimeEncoding encoding = TimeEncoding::time2vec;
  std::size_t risks = 1;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Mesh resolution for survival / incidence curves at evaluation time.
  std::size_t eval_mesh_points = 101;

  /// Every violated constraint, not just the first.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) out.push_back("learning_rate must be > 0");
    if (batch_size < 1) out.push_back("batch_size must be >= 1");
    if (grid_points < 2) out.push_back("grid_points (m) must be >= 2");
    if (max_epochs < 1) out.push_back("max_epochs must be >= 1");
    if (patience < 1) out.push_back("patience must be >= 1");
    if (hidden1 < 1 || hidden2 < 1) out.push_back("hidden sizes must be >= 1");
    if (encoding != TimeEncoding::raw && embed_dim < 1) out.push_back("embed_dim must be >= 1");
    if (risks < 1) out.push_back("risks must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) out.push_back("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) out.push_back("beta2 must be in [0, 1)");
    if (!(adam_epsilon > 0.0)) out.push_back("adam_epsilon must be > 0");
    if (eval_mesh_points < 2) out.push_back("eval_mesh_points must be >= 2");
    return out;
  }

  void validate() const {
    const auto p = problems();
    if (p.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& s : p) msg += "\n  - " + s;
    throw InputError(msg);
  }

  NetworkShape network_shape(std::size_t covariates) const {
    return NetworkShape{covariates, embed_dim, hidden1, hidden2, risks, encoding};
  }

  nlohmann::json to_json() const {
    return {{"learning_rate", learning_rate}, {"batch_size", batch_size},
            {"grid_points", grid_points},     {"scheme", to_string(scheme)},
            {"max_epochs", max_epochs},       {"patience", patience},
            {"hidden", {hidden1, hidden2}},   {"embed_dim", embed_dim},
            {"encoder", to_string(encoding)}, {"risks", risks},
            {"seed", seed},                   {"beta1", beta1},
            {"beta2", beta2},                 {"adam_epsilon", adam_epsilon},
            {"eval_mesh_points", eval_mesh_points}};
  }

  /// Overlays the keys present in `doc` on `base`. Unknown keys and type
  /// errors are collected and reported together.
  static TrainConfig from_json(const nlohmann::json& doc) { return from_json(doc, TrainConfig{}); }

  static TrainConfig from_json(const nlohmann::json& doc, TrainConfig base) {
    if (!doc.is_object()) throw InputError("configuration must be a JSON object");
    std::vector<std::string> errors;
    TrainConfig c = base;
    for (const auto& [key, value] : doc.items()) {
      try {
        if (key == "learning_rate") c.learning_rate = value.get<double>();
        else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
        else if (key == "grid_points") c.grid_points = value.get<std::size_t>();
        else if (key == "scheme") c.scheme = parse_scheme(value.get<std::string>());
        else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
        else if (key == "patience") c.patience = value.get<std::size_t>();
        else if (key == "hidden") {
          c.hidden1 = value.at(0).get<std::size_t>();
          c.hidden2 = value.at(1).get<std::size_t>();
          if (value.size() != 2) errors.push_back("hidden must list exactly two widths");
        } else if (key == "embed_dim") c.embed_dim = value.get<std::size_t>();
        else if (key == "encoder") c.encoding = parse_encoding(value.get<std::string>());
        else if (key == "risks") c.risks = value.get<std::size_t>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "beta1") c.beta1 = value.get<double>();
        else if (key == "beta2") c.beta2 = value.get<double>();
        else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
        else if (key == "eval_mesh_points") c.eval_mesh_points = value.get<std::size_t>();
        else errors.push_back("unknown key '" + key + "'");
      } catch (const nlohmann::json::exception& e) {
        errors.push_back("key '" + key + "': " + e.what());
      } catch (const InputError& e) {
        errors.push_back("key '" + key + "': " + e.what());
      }
    }
    for (auto& p : c.problems()) errors.push_back(std::move(p));
    if (!errors.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& s : errors) msg += "\n  - " + s;
      throw InputError(msg);
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const ad::ParamSet& params) {
    for (const auto& p : params) {
      first.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      second.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
};

/// Bias-corrected Adam update using the gradients stored in `params`.
inline void adam_step(ad::ParamSet& params, AdamState& state, const TrainConfig& config) {
  if (state.first.size() != params.size()) throw DimensionError("Adam state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (!p.grad.allFinite()) throw NumericalError("non-finite gradient in parameter '" + p.name + "'");
    if (state.first[i].rows() != p.value.rows() || state.first[i].cols() != p.value.cols()) {
      throw DimensionError("Adam state shape mismatch for '" + p.name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    Matrix& m = state.first[i];
    Matrix& v = state.second[i];
    m = config.beta1 * m + (1.0 - config.beta1) * p.grad;
    v = config.beta2 * v + (1.0 - config.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= config.learning_rate * (m.array() / c1) /
                       ((v.array() / c2).sqrt() + config.adam_epsilon);
  }
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double holdout_loss = 0.0;
};

struct TrainResult {
  HazardNetwork model;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_holdout_loss = std::numeric_limits<double>::infinity();
};

struct TrainHooks {
  /// Called with the row ids of every mini-batch before its gradient step.
  std::function<void(std::span<const std::size_t>)> on_batch;
};

inline Table training_log_table(std::span<const EpochRecord> log) {
  Table t;
  t.header = {"epoch", "train_loss", "holdout_loss"};
  for (const auto& r : log) {
    t.rows.push_back({std::to_string(r.epoch), format_number(r.train_loss), format_number(r.holdout_loss)});
  }
  return t;
}

namespace detail {
inline void check_data(const SurvivalData& d, std::size_t risks, const char* what) {
  if (d.size() == 0) throw InputError(std::string(what) + " set is empty");
  if (d.covariates.rows() != static_cast<Index>(d.size()) || d.labels.size() != d.size()) {
    throw DimensionError(std::string(what) + " set has inconsistent sizes");
  }
  for (int l : d.labels) {
    if (l < 0 || static_cast<std::size_t>(l) > risks) {
      throw InputError(std::string(what) + " set has label " + std::to_string(l) + " outside 0.." +
                       std::to_string(risks));
    }
  }
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}
}  // namespace detail

/// Mean negative log-likelihood of `data` under `model` in inference mode.
inline double evaluate_nll(const HazardNetwork& model, const SurvivalData& data, GridScheme scheme,
                           double t_max, std::size_t m) {
  const auto rows = detail::all_rows(data.size());
  const LikelihoodBatch batch =
      make_likelihood_batch(data.covariates, data.times, data.labels, rows, scheme, t_max, m);
  return nll_value(model.hazards(batch.covariates, batch.times), batch.grids, batch.labels, model.risks());
}

/// Trains on `train`, keeping the snapshot with the lowest holdout loss.
/// Stops after max_epochs or `patience` epochs without improvement.
inline TrainResult train(const SurvivalData& train_set, const SurvivalData& holdout, const TrainConfig& config,
                         const TrainHooks& hooks = {}) {
  config.validate();
  detail::check_data(train_set, config.risks, "training");
  detail::check_data(holdout, config.risks, "holdout");
  if (holdout.covariates.cols() != train_set.covariates.cols()) {
    throw DimensionError("holdout and training covariate widths differ");
  }
  Rng init_rng = make_stream(config.seed, "weight-init");
  Rng shuffle_rng = make_stream(config.seed, "batch-shuffle");
  HazardNetwork net(config.network_shape(static_cast<std::size_t>(train_set.covariates.cols())), init_rng);
  AdamState adam(net.params());
  const double t_max = *std::max_element(train_set.times.begin(), train_set.times.end());

  const auto holdout_rows = detail::all_rows(holdout.size());
  const LikelihoodBatch holdout_batch = make_likelihood_batch(
      holdout.covariates, holdout.times, holdout.labels, holdout_rows, config.scheme, t_max, config.grid_points);

  TrainResult result;
  std::vector<std::size_t> order = detail::all_rows(train_set.size());
  std::vector<std::size_t> ids;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      const std::span<const std::size_t> selection(order.data() + start, len);
      if (hooks.on_batch) {
        ids.clear();
        for (std::size_t r : selection) ids.push_back(train_set.ids.empty() ? r : train_set.ids[r]);
        hooks.on_batch(ids);
      }
      const LikelihoodBatch batch = make_likelihood_batch(train_set.covariates, train_set.times, train_set.labels,
                                                          selection, config.scheme, t_max, config.grid_points);
      ad::Graph graph(net.params());
      const auto applied = net.apply(graph, batch.covariates, batch.times, ad::BatchNormMode::training);
      const ad::Var loss = multi_risk_nll(graph, applied.hazards, batch.grids, batch.labels, config.risks);
      double value = 0.0;
      try {
        value = graph.forward()(0, 0);
      } catch (const DomainError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) + ": " +
                             e.what());
      }
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      net.params().zero_grad();
      graph.backward(loss);
      adam_step(net.params(), adam, config);
      net.update_running_stats(graph, applied);
      loss_sum += value * static_cast<double>(len);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.holdout_loss = nll_value(net.hazards(holdout_batch.covariates, holdout_batch.times), holdout_batch.grids,
                                 holdout_batch.labels, config.risks);
    if (!std::isfinite(rec.holdout_loss)) {
      throw NumericalError("non-finite holdout loss at epoch " + std::to_string(epoch));
    }
    result.log.push_back(rec);
    if (rec.holdout_loss < result.best_holdout_loss) {
      result.best_holdout_loss = rec.holdout_loss;
      result.best_epoch = epoch;
      result.model = net;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Cross-validation

/// Holdout rows plus a partition of the remaining rows into folds.
struct CvSplit {
  std::vector<std::size_t> holdout;
  std::vector<std::vector<std::size_t>> folds;
};

/// Holdout of floor(fraction * n) rows stratified by event indicator; the
/// rest shuffled into `folds` parts whose sizes differ by at most one.
inline CvSplit make_cv_split(std::span<const int> labels, std::size_t folds, double holdout_fraction,
                             std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (folds < 2) throw InputError("need at least 2 folds");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw InputError("holdout fraction outside [0, 1)");
  const auto holdout_size = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(n)));
  if (n < holdout_size + folds) {
    throw InputError("dataset of " + std::to_string(n) + " samples is too small for " + std::to_string(folds) +
                     " folds");
  }
  Rng rng = make_stream(seed, "data-split");
  std::vector<std::size_t> events;
  std::vector<std::size_t> censored;
  for (std::size_t i = 0; i < n; ++i) (labels[i] != 0 ? events : censored).push_back(i);
  shuffle(events, rng);
  shuffle(censored, rng);
  std::size_t take_events = static_cast<std::size_t>(
      std::floor(static_cast<double>(holdout_size) * static_cast<double>(events.size()) / static_cast<double>(n) + 0.5));
  take_events = std::min(take_events, events.size());
  std::size_t take_censored = holdout_size - take_events;
  if (take_censored > censored.size()) {
    take_censored = censored.size();
    take_events = holdout_size - take_censored;
  }
  CvSplit split;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < events.size(); ++i) (i < take_events ? split.holdout : rest).push_back(events[i]);
  for (std::size_t i = 0; i < censored.size(); ++i) (i < take_censored ? split.holdout : rest).push_back(censored[i]);
  std::sort(split.holdout.begin(), split.holdout.end());
  std::sort(rest.begin(), rest.end());
  shuffle(rest, rng);
  split.folds.resize(folds);
  const std::size_t base = rest.size() / folds;
  const std::size_t extra = rest.size() % folds;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    split.folds[f].assign(rest.begin() + static_cast<std::ptrdiff_t>(pos),
                          rest.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(split.folds[f].begin(), split.folds[f].end());
    pos += len;
  }
  return split;
}

struct CvOptions {
  std::size_t folds = 5;
  double holdout_fraction = 0.15;
  /// Train folds concurrently (results do not depend on this).
  bool parallel = false;
  TrainHooks hooks;
};

struct FoldResult {
  MetricReport ipcw;
  MetricReport plain;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

struct AggregateEntry {
  std::string weighting;
  int risk = 1;
  double horizon_fraction = 0.0;
  double horizon_time = 0.0;  // in the dataset's time units
  double ctd_mean = 0.0;
  double ctd_se = 0.0;
  double brier_mean = 0.0;
  double brier_se = 0.0;
};

struct CvResult {
  CvSplit split;
  std::vector<double> horizons;  // dataset time units
  std::vector<FoldResult> folds;
  std::vector<AggregateEntry> aggregate;

  const AggregateEntry& find(const std::string& weighting, int risk, double fraction) const {
    for (const auto& a : aggregate) {
      if (a.weighting == weighting && a.risk == risk && a.horizon_fraction == fraction) return a;
    }
    throw InputError("no aggregate entry for " + weighting + " risk " + std::to_string(risk));
  }
};

/// Mean and standard error (sample standard deviation / sqrt(count)) of
/// the finite values; NaN for both when none is finite.
inline std::pair<double, double> mean_and_se(std::span<const double> values) {
  if (values.empty()) throw InputError("no values to aggregate");
  std::vector<double> finite;
  for (double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  if (std::all_of(finite.begin(), finite.end(), [&](double v) { return v == finite.front(); })) {
    return {finite.front(), 0.0};
  }
  const double n = static_cast<double>(finite.size());
  const double mean = std::accumulate(finite.begin(), finite.end(), 0.0) / n;
  if (finite.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : finite) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

namespace detail {
inline std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  Rng rng = make_stream(seed, "fold", fold);
  return rng();
}

inline FoldResult run_fold(const Dataset& raw, const CvSplit& split, std::size_t f, const TrainConfig& config,
                           std::span<const double> horizons, const TrainHooks& hooks) {
  FoldResult out;
  for (std::size_t g = 0; g < split.folds.size(); ++g) {
    if (g == f) continue;
    out.train_rows.insert(out.train_rows.end(), split.folds[g].begin(), split.folds[g].end());
  }
  std::sort(out.train_rows.begin(), out.train_rows.end());
  out.test_rows = split.folds[f];

  const Dataset raw_train = raw.subset(out.train_rows);
  const Dataset raw_holdout = raw.subset(split.holdout);
  const Dataset raw_test = raw.subset(out.test_rows);
  const PreprocessStats stats = fit_preprocess(raw_train, mean_time(raw_holdout));
  SurvivalData train_set = apply_preprocess(raw_train, stats);
  SurvivalData holdout = apply_preprocess(raw_holdout, stats);
  SurvivalData test = apply_preprocess(raw_test, stats);
  train_set.ids = out.train_rows;
  holdout.ids = split.holdout;
  test.ids = out.test_rows;

  TrainConfig fold_config = config;
  fold_config.seed = fold_seed(config.seed, f);
  TrainResult trained = train(train_set, holdout, fold_config, hooks);
  out.log = std::move(trained.log);
  out.best_epoch = trained.best_epoch;

  std::vector<double> scaled(horizons.size());
  for (std::size_t h = 0; h < horizons.size(); ++h) scaled[h] = horizons[h] / stats.time_scale;
  const HorizonPredictions pred =
      predict_at_horizons(trained.model, test.covariates, scaled, config.eval_mesh_points);
  const CensoringEstimate censoring = km_censoring(train_set.times, train_set.event_indicators());
  const auto& fractions = default_horizon_fractions();
  out.ipcw = score_predictions(pred.survival, pred.incidence, test.times, test.labels, fractions, scaled, &censoring);
  out.plain = score_predictions(pred.survival, pred.incidence, test.times, test.labels, fractions, scaled, nullptr);
  for (auto* report : {&out.ipcw, &out.plain}) {
    for (auto& e : report->entries) e.horizon_time *= stats.time_scale;
  }
  return out;
}
}  // namespace detail

/// Holdout split, then for each fold: fit preprocessing on the training
/// folds, train with holdout selection, and score the held-out fold at the
/// 25/50/75% event-time horizons of the whole dataset.
inline CvResult cross_validate(const Dataset& raw, const TrainConfig& config, const CvOptions& options = {}) {
  config.validate();
  if (raw.schema.risks != config.risks) {
    throw InputError("dataset has " + std::to_string(raw.schema.risks) + " risks but the configuration expects " +
                     std::to_string(config.risks));
  }
  CvResult result;
  result.split = make_cv_split(raw.labels, options.folds, options.holdout_fraction, config.seed);
  result.horizons = event_time_percentiles(raw.times, raw.event_indicators(), default_horizon_fractions());

  result.folds.resize(options.folds);
  if (options.parallel) {
    std::vector<std::future<FoldResult>> jobs;
    for (std::size_t f = 0; f < options.folds; ++f) {
      jobs.push_back(std::async(std::launch::async, [&, f] {
        return detail::run_fold(raw, result.split, f, config, result.horizons, options.hooks);
      }));
    }
    for (std::size_t f = 0; f < options.folds; ++f) result.folds[f] = jobs[f].get();
  } else {
    for (std::size_t f = 0; f < options.folds; ++f) {
      result.folds[f] = detail::run_fold(raw, result.split, f, config, result.horizons, options.hooks);
    }
  }

  for (const std::string weighting : {"ipcw", "plain"}) {
    const MetricReport& first = weighting == "ipcw" ? result.folds[0].ipcw : result.folds[0].plain;
    for (std::size_t e = 0; e < first.entries.size(); ++e) {
      std::vector<double> ctd;
      std::vector<double> brier;
      for (const auto& fold : result.folds) {
        const MetricReport& r = weighting == "ipcw" ? fold.ipcw : fold.plain;
        ctd.push_back(r.entries[e].ctd);
        brier.push_back(r.entries[e].brier);
      }
      AggregateEntry a;
      a.weighting = weighting;
      a.risk = first.entries[e].risk;
      a.horizon_fraction = first.entries[e].horizon_fraction;
      a.horizon_time = first.entries[e].horizon_time;
      std::tie(a.ctd_mean, a.ctd_se) = mean_and_se(ctd);
      std::tie(a.brier_mean, a.brier_se) = mean_and_se(brier);
      result.aggregate.push_back(a);
    }
  }
  return result;
}

inline Table cv_summary_table(const CvResult& cv) {
  Table t;
  t.header = {"weighting", "risk", "horizon_fraction", "horizon_time", "ctd_mean", "ctd_se", "brier_mean", "brier_se"};
  for (const auto& a : cv.aggregate) {
    t.rows.push_back({a.weighting, std::to_string(a.risk), format_number(a.horizon_fraction),
                      format_number(a.horizon_time), format_number(a.ctd_mean), format_number(a.ctd_se),
                      format_number(a.brier_mean), format_number(a.brier_se)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Hyperparameter selection

struct GridCandidate {
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 64;
  std::size_t embed_dim = 16;
  double holdout_loss = 0.0;
};

/// Enumerates hidden widths {64, 128} x {64, 128} and embedding sizes
/// {16, 32}; each candidate is trained on the non-holdout rows and scored by
/// its best holdout loss. Returns the candidates in enumeration order.
inline std::vector<GridCandidate> holdout_grid_search(const Dataset& raw, const TrainConfig& config,
                                                      double holdout_fraction = 0.15) {
  config.validate();
  const CvSplit split = make_cv_split(raw.labels, 2, holdout_fraction, config.seed);
  std::vector<std::size_t> rest;
  for (const auto& f : split.folds) rest.insert(rest.end(), f.begin(), f.end());
  std::sort(rest.begin(), rest.end());
  const Dataset raw_train = raw.subset(rest);
  const Dataset raw_holdout = raw.subset(split.holdout);
  const PreprocessStats stats = fit_preprocess(raw_train, mean_time(raw_holdout));
  const SurvivalData train_set = apply_preprocess(raw_train, stats);
  const SurvivalData holdout = apply_preprocess(raw_holdout, stats);
  std::vector<GridCandidate> out;
  for (std::size_t h1 : {64, 128}) {
    for (std::size_t h2 : {64, 128}) {
      for (std::size_t b : {16, 32}) {
        TrainConfig c = config;
        c.hidden1 = h1;
        c.hidden2 = h2;
        c.embed_dim = b;
        const TrainResult r = train(train_set, holdout, c);
        out.push_back({h1, h2, b, r.best_holdout_loss});
      }
    }
  }
  return out;
}

}  // namespace ictsurf
