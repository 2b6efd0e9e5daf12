#pragma once

// Continuous-time negative log-likelihood with the hazard integral
// approximated by the trapezoidal rule on each sample's grid.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ictsurf/autodiff.hpp"
#include "ictsurf/discretization.hpp"
#include "ictsurf/errors.hpp"

namespace ictsurf {

/// One batch of samples flattened to (sample, grid point) rows. Row r of the
/// hazard matrix belongs to sample owner[r]; samples occupy contiguous row
/// blocks in order.
struct LikelihoodBatch {
  std::vector<TimeGrid> grids;
  std::vector<int> labels;  // 0 = censored, k in 1..K = event of risk k
  ad::Matrix covariates;    // one row per (sample, grid point)
  std::vector<double> times;

  std::size_t samples() const { return grids.size(); }
  std::size_t rows() const { return times.size(); }
};

/// Builds grids for the selected samples and the flattened covariate/time
/// rows the network is evaluated on.
inline LikelihoodBatch make_likelihood_batch(const ad::Matrix& x, std::span<const double> event_times,
                                             std::span<const int> labels,
                                             std::span<const std::size_t> selection,
                                             GridScheme scheme, double t_max, std::size_t m) {
  LikelihoodBatch batch;
  batch.grids.reserve(selection.size());
  batch.labels.reserve(selection.size());
  std::size_t total = 0;
  for (std::size_t idx : selection) {
    if (idx >= event_times.size()) throw DimensionError("sample index out of range");
    batch.grids.push_back(make_grid(scheme, event_times[idx], t_max, m));
    batch.labels.push_back(labels[idx]);
    total += batch.grids.back().size();
  }
  batch.covariates.resize(static_cast<ad::Index>(total), x.cols());
  batch.times.resize(total);
  std::size_t r = 0;
  for (std::size_t s = 0; s < selection.size(); ++s) {
    for (double t : batch.grids[s].points) {
      batch.covariates.row(static_cast<ad::Index>(r)) = x.row(static_cast<ad::Index>(selection[s]));
      batch.times[r] = t;
      ++r;
    }
  }
  return batch;
}

namespace detail {
inline void check_labels(std::span<const int> labels, std::size_t risks) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) > risks) {
      throw InputError("sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                       " outside 0.." + std::to_string(risks));
    }
  }
}
}  // namespace detail

/// Records
///   (1/K) sum_k (1/n) sum_i [ integral_0^{T_i} h_k(s, x_i) ds - 1(k_i = k) log h_k(T_i, x_i) ]
/// into `graph`. `hazards` is the (rows x K) node produced for the batch.
inline ad::Var multi_risk_nll(ad::Graph& graph, ad::Var hazards, std::span<const TimeGrid> grids,
                              std::span<const int> labels, std::size_t risks) {
  if (risks == 0) throw InputError("at least one risk is required");
  if (grids.size() != labels.size()) throw DimensionError("grids and labels differ in length");
  if (grids.empty()) throw InputError("empty batch");
  detail::check_labels(labels, risks);
  std::size_t rows = 0;
  for (const auto& g : grids) rows += g.size();
  const auto k = static_cast<ad::Index>(risks);
  const double norm = 1.0 / (static_cast<double>(grids.size()) * static_cast<double>(risks));
  ad::Matrix integral_weights(static_cast<ad::Index>(rows), k);
  ad::Matrix event_mask = ad::Matrix::Zero(static_cast<ad::Index>(rows), k);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const std::vector<double> w = trapezoid_weights(grids[i]);
    for (std::size_t j = 0; j < w.size(); ++j) {
      integral_weights.row(static_cast<ad::Index>(offset + j)).setConstant(w[j] * norm);
    }
    if (labels[i] > 0) {
      event_mask(static_cast<ad::Index>(offset + grids[i].anchor), labels[i] - 1) = norm;
    }
    offset += grids[i].size();
  }
  const ad::Var integral = graph.sum(graph.mul(graph.constant(std::move(integral_weights)), hazards));
  const ad::Var log_term =
      graph.sum(graph.mul(graph.constant(std::move(event_mask)), graph.log(hazards)));
  return graph.add(integral, graph.negate(log_term));
}

/// Single-risk form: labels are 0 (censored) or 1 (event).
inline ad::Var single_risk_nll(ad::Graph& graph, ad::Var hazards, std::span<const TimeGrid> grids,
                               std::span<const int> labels) {
  return multi_risk_nll(graph, hazards, grids, labels, 1);
}

/// Same quantity evaluated directly on a hazard matrix without a graph.
inline double nll_value(const ad::Matrix& hazards, std::span<const TimeGrid> grids,
                        std::span<const int> labels, std::size_t risks) {
  if (grids.size() != labels.size()) throw DimensionError("grids and labels differ in length");
  if (grids.empty()) throw InputError("empty batch");
  detail::check_labels(labels, risks);
  if (hazards.cols() != static_cast<ad::Index>(risks)) throw DimensionError("hazard width != risks");
  double total = 0.0;
  std::size_t offset = 0;
  std::vector<double> column;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const std::size_t len = grids[i].size();
    if (offset + len > static_cast<std::size_t>(hazards.rows())) {
      throw DimensionError("hazard rows do not cover the grids");
    }
    for (std::size_t k = 0; k < risks; ++k) {
      column.resize(len);
      for (std::size_t j = 0; j < len; ++j) {
        column[j] = hazards(static_cast<ad::Index>(offset + j), static_cast<ad::Index>(k));
      }
      total += trapezoid(column, grids[i]);
      if (labels[i] == static_cast<int>(k + 1)) {
        const double h = column[grids[i].anchor];
        if (!(h > 0.0)) throw DomainError("non-positive hazard at the event time of sample " + std::to_string(i));
        total -= std::log(h);
      }
    }
    offset += len;
  }
  if (offset != static_cast<std::size_t>(hazards.rows())) {
    throw DimensionError("hazard rows do not match the grids");
  }
  return total / (static_cast<double>(grids.size()) * static_cast<double>(risks));
}

}  // namespace ictsurf
