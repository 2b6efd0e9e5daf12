#pragma once

// Censored-data evaluation: Kaplan-Meier estimators, time-dependent
// concordance and Brier score (IPCW and unweighted), evaluation horizons.

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ictsurf/errors.hpp"

namespace ictsurf {

/// Right-continuous step function starting at 1: value(t) is the value after
/// the last jump at or before t.
struct StepFunction {
  std::vector<double> times;   // jump times, ascending
  std::vector<double> values;  // value from times[j] (inclusive) onwards

  double at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return it == times.begin() ? 1.0 : values[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  /// Limit from the left, value(t-).
  double left_limit(double t) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    return it == times.begin() ? 1.0 : values[static_cast<std::size_t>(it - times.begin()) - 1];
  }
};

/// Kaplan-Meier estimate G of the censoring survival function.
using CensoringEstimate = StepFunction;

namespace detail {
inline void check_survival_input(std::span<const double> times, std::span<const int> events) {
  if (times.empty()) throw InputError("no samples");
  if (times.size() != events.size()) throw DimensionError("times and event indicators differ in length");
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("times must be finite and nonnegative");
  }
}

/// Product-limit estimator. With `censoring` set the drops happen at
/// indicator-0 samples; at tied times events (indicator 1) leave the risk set
/// before censorings.
inline StepFunction product_limit(std::span<const double> times, std::span<const int> events,
                                  bool censoring) {
  check_survival_input(times, events);
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  StepFunction out;
  double value = 1.0;
  std::size_t at_risk = times.size();
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = times[order[i]];
    std::size_t deaths = 0;
    std::size_t censored = 0;
    while (i < order.size() && times[order[i]] == t) {
      (events[order[i]] != 0 ? deaths : censored) += 1;
      ++i;
    }
    if (censoring) {
      const std::size_t exposed = at_risk - deaths;
      if (censored > 0) {
        value *= 1.0 - static_cast<double>(censored) / static_cast<double>(exposed);
        out.times.push_back(t);
        out.values.push_back(value);
      }
    } else if (deaths > 0) {
      value *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      out.times.push_back(t);
      out.values.push_back(value);
    }
    at_risk -= deaths + censored;
  }
  return out;
}
}  // namespace detail

/// G(t): censoring indicator (events == 0) is the "event" of this estimator.
inline CensoringEstimate km_censoring(std::span<const double> times, std::span<const int> events) {
  return detail::product_limit(times, events, true);
}

/// Ordinary survival Kaplan-Meier estimate.
inline StepFunction kaplan_meier(std::span<const double> times, std::span<const int> events) {
  return detail::product_limit(times, events, false);
}

namespace detail {
/// Fenwick tree of counts over ranks 1..n.
class CountTree {
 public:
  explicit CountTree(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank) {
    for (std::size_t i = rank; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Number of inserted ranks <= rank.
  std::size_t prefix(std::size_t rank) const {
    std::size_t total = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) total += tree_[i];
    return total;
  }

 private:
  std::vector<std::size_t> tree_;
};

inline void check_metric_input(std::span<const double> scores, std::span<const double> times,
                               std::span<const int> events) {
  if (scores.size() != times.size() || times.size() != events.size()) {
    throw DimensionError("scores, times and event indicators differ in length");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw InputError("non-finite prediction");
  }
}

/// Weighted concordance. `censoring` may be null for unit weights.
inline double concordance(std::span<const double> risk, std::span<const double> times,
                          std::span<const int> events, const CensoringEstimate* censoring, double horizon) {
  check_metric_input(risk, times, events);
  const std::size_t n = times.size();
  std::vector<double> distinct(risk.begin(), risk.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), risk[i]) -
                                       distinct.begin()) + 1;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });

  CountTree tree(distinct.size());
  std::size_t inserted = 0;
  double numerator = 0.0;
  double denominator = 0.0;
  std::size_t g = 0;
  while (g < n) {
    std::size_t end = g;
    const double t = times[order[g]];
    while (end < n && times[order[end]] == t) ++end;
    // every sample already inserted has a strictly later time
    if (t <= horizon && inserted > 0) {
      double weight = 1.0;
      if (censoring != nullptr) {
        const double gl = censoring->left_limit(t);
        weight = gl > 0.0 ? 1.0 / (gl * gl) : 0.0;
      }
      for (std::size_t q = g; q < end; ++q) {
        const std::size_t i = order[q];
        if (events[i] == 0 || weight == 0.0) continue;
        const std::size_t below = tree.prefix(rank[i] - 1);
        const std::size_t tied = tree.prefix(rank[i]) - below;
        numerator += weight * (static_cast<double>(below) + 0.5 * static_cast<double>(tied));
        denominator += weight * static_cast<double>(inserted);
      }
    }
    for (std::size_t q = g; q < end; ++q) tree.add(rank[order[q]]);
    inserted += end - g;
    g = end;
  }
  if (!(denominator > 0.0)) {
    throw UndefinedMetricError("concordance undefined at horizon " + std::to_string(horizon) +
                               ": no comparable pairs");
  }
  return numerator / denominator;
}

inline double brier(std::span<const double> survival, std::span<const double> times,
                    std::span<const int> events, const CensoringEstimate* censoring, double horizon) {
  check_metric_input(survival, times, events);
  if (times.empty()) throw InputError("no samples");
  const double g_horizon = censoring != nullptr ? censoring->at(horizon) : 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double s = survival[i];
    if (times[i] <= horizon && events[i] != 0) {
      const double gl = censoring != nullptr ? censoring->left_limit(times[i]) : 1.0;
      if (!(gl > 0.0)) {
        throw UndefinedMetricError("Brier score undefined at horizon " + std::to_string(horizon) +
                                   ": censoring survival vanishes before an event");
      }
      total += s * s / gl;
    } else if (times[i] > horizon) {
      if (!(g_horizon > 0.0)) {
        throw UndefinedMetricError("Brier score undefined at horizon " + std::to_string(horizon) +
                                   ": censoring survival is zero there");
      }
      total += (1.0 - s) * (1.0 - s) / g_horizon;
    }
  }
  return total / static_cast<double>(times.size());
}
}  // namespace detail

/// Time-dependent concordance at `horizon`: pairs (i, j) with T_i < T_j,
/// event at T_i <= horizon, weighted by 1 / G(T_i-)^2. Ties in risk count 1/2.
inline double ctd_ipcw(std::span<const double> risk, std::span<const double> times,
                       std::span<const int> events, const CensoringEstimate& censoring, double horizon) {
  return detail::concordance(risk, times, events, &censoring, horizon);
}

inline double plain_cindex(std::span<const double> risk, std::span<const double> times,
                           std::span<const int> events, double horizon) {
  return detail::concordance(risk, times, events, nullptr, horizon);
}

/// Graf-style Brier score of survival predictions S_i(horizon).
inline double brier_ipcw(std::span<const double> survival, std::span<const double> times,
                         std::span<const int> events, const CensoringEstimate& censoring, double horizon) {
  return detail::brier(survival, times, events, &censoring, horizon);
}

inline double plain_brier(std::span<const double> survival, std::span<const double> times,
                          std::span<const int> events, double horizon) {
  return detail::brier(survival, times, events, nullptr, horizon);
}

inline const std::vector<double>& default_horizon_fractions() {
  static const std::vector<double> fractions{0.25, 0.5, 0.75};
  return fractions;
}

/// Quantiles of the uncensored times, linearly interpolated between order
/// statistics (position q * (count - 1)).
inline std::vector<double> event_time_percentiles(std::span<const double> times, std::span<const int> events,
                                                  std::span<const double> fractions) {
  if (times.size() != events.size()) throw DimensionError("times and event indicators differ in length");
  std::vector<double> observed;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (events[i] != 0) observed.push_back(times[i]);
  }
  if (observed.empty()) throw InputError("no events to place evaluation horizons");
  std::sort(observed.begin(), observed.end());
  std::vector<double> out;
  out.reserve(fractions.size());
  for (double q : fractions) {
    if (!(q >= 0.0 && q <= 1.0)) throw InputError("percentile fraction outside [0, 1]");
    const double pos = q * static_cast<double>(observed.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, observed.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out.push_back(observed[lo] + frac * (observed[hi] - observed[lo]));
  }
  return out;
}

struct MetricEntry {
  int risk = 1;
  double horizon_fraction = 0.0;
  double horizon_time = 0.0;
  double ctd = 0.0;
  double brier = 0.0;
};

/// Ctd and Brier per risk and horizon. `weighting` is "ipcw" or "plain".
struct MetricReport {
  std::string weighting = "ipcw";
  std::vector<MetricEntry> entries;

  const MetricEntry& find(int risk, double fraction) const {
    for (const auto& e : entries) {
      if (e.risk == risk && e.horizon_fraction == fraction) return e;
    }
    throw InputError("no metric entry for risk " + std::to_string(risk));
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : entries) {
      rows.push_back({{"risk", e.risk},
                      {"horizon_fraction", e.horizon_fraction},
                      {"horizon_time", e.horizon_time},
                      {"ctd", e.ctd},
                      {"brier", e.brier}});
    }
    return {{"weighting", weighting}, {"entries", rows}};
  }

  static MetricReport from_json(const nlohmann::json& doc) {
    MetricReport r;
    r.weighting = doc.at("weighting").get<std::string>();
    for (const auto& row : doc.at("entries")) {
      auto number = [&](const char* key) {
        const auto& v = row.at(key);
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
      };
      r.entries.push_back({row.at("risk").get<int>(), number("horizon_fraction"), number("horizon_time"),
                           number("ctd"), number("brier")});
    }
    return r;
  }
};

/// Builds a report from per-sample predictions at each horizon. Undefined
/// metrics (see concordance and brier) are stored as NaN.
/// survival_at(i, h) / incidence_at[k](i, h) follow HorizonPredictions.
/// Single-risk data is scored by 1 - S(h); competing risks by F_k(h), with
/// other causes treated as censoring for risk k.
template <class SurvivalMatrix>
MetricReport score_predictions(const SurvivalMatrix& survival_at,
                               const std::vector<SurvivalMatrix>& incidence_at,
                               std::span<const double> times, std::span<const int> labels,
                               std::span<const double> fractions, std::span<const double> horizons,
                               const CensoringEstimate* censoring) {
  if (fractions.size() != horizons.size()) throw DimensionError("fractions and horizons differ in length");
  const std::size_t n = times.size();
  const std::size_t risks = incidence_at.size();
  MetricReport report;
  report.weighting = censoring != nullptr ? "ipcw" : "plain";
  std::vector<double> score(n);
  std::vector<double> surv(n);
  std::vector<int> events(n);
  for (std::size_t k = 1; k <= std::max<std::size_t>(risks, 1); ++k) {
    for (std::size_t i = 0; i < n; ++i) events[i] = labels[i] == static_cast<int>(k) ? 1 : 0;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto col = static_cast<Eigen::Index>(h);
        if (risks <= 1) {
          surv[i] = survival_at(row, col);
        } else {
          surv[i] = 1.0 - incidence_at[k - 1](row, col);
        }
        score[i] = 1.0 - surv[i];
      }
      MetricEntry e;
      e.risk = static_cast<int>(k);
      e.horizon_fraction = fractions[h];
      e.horizon_time = horizons[h];
      // a metric with no comparable pairs or no usable weights is reported as NaN
      try {
        e.ctd = detail::concordance(score, times, events, censoring, horizons[h]);
      } catch (const UndefinedMetricError&) {
        e.ctd = std::numeric_limits<double>::quiet_NaN();
      }
      try {
        e.brier = detail::brier(surv, times, events, censoring, horizons[h]);
      } catch (const UndefinedMetricError&) {
        e.brier = std::numeric_limits<double>::quiet_NaN();
      }
      report.entries.push_back(e);
    }
  }
  return report;
}

}  // namespace ictsurf
