#pragma once

// Integration grids for the hazard integral and trapezoidal quadrature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ictsurf/errors.hpp"

namespace ictsurf {

/// Event times at or below this value are clamped before building a grid.
inline constexpr double kMinEventTime = 1e-6;
/// Points closer than this fraction of t_max are merged in the global grid.
inline constexpr double kMergeTolerance = 1e-9;

enum class GridScheme {
  per_sample,  // m equal steps from 0 to the sample's own event time
  global,      // m equal steps on [0, t_max] plus the event time inserted
};

/// Ascending points starting at 0. `anchor` is the 0-based index of the
/// point equal to the sample's event time.
struct TimeGrid {
  std::vector<double> points;
  std::size_t anchor = 0;

  std::size_t size() const { return points.size(); }
  /// Spacing between point j and point j-1 (j >= 1).
  double spacing(std::size_t j) const { return points[j] - points[j - 1]; }
  double anchor_time() const { return points[anchor]; }
};

namespace detail {
inline double clamp_event_time(double event_time) {
  if (!std::isfinite(event_time)) throw DomainError("event time must be finite");
  return std::max(event_time, kMinEventTime);
}

inline void require_count(std::size_t m) {
  if (m < 2) throw DomainError("grid needs at least 2 points, got " + std::to_string(m));
}
}  // namespace detail

/// Equally spaced points 0 = p_0 < ... < p_{m-1} = end. Points are computed
/// by interpolating the endpoints and the last one is assigned exactly.
inline std::vector<double> linspace(double end, std::size_t m) {
  detail::require_count(m);
  std::vector<double> points(m);
  const double denom = static_cast<double>(m - 1);
  for (std::size_t j = 0; j < m; ++j) points[j] = end * (static_cast<double>(j) / denom);
  points.front() = 0.0;
  points.back() = end;
  return points;
}

inline TimeGrid per_sample_grid(double event_time, std::size_t m) {
  const double end = detail::clamp_event_time(event_time);
  TimeGrid grid{linspace(end, m), m - 1};
  return grid;
}

/// Shared grid on [0, t_max] with the event time inserted. Event times past
/// t_max extend the grid by one point.
inline TimeGrid global_grid(double event_time, double t_max, std::size_t m) {
  const double event = detail::clamp_event_time(event_time);
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("t_max must be positive");
  TimeGrid grid{linspace(t_max, m), 0};
  const double tol = kMergeTolerance * t_max;
  auto it = std::lower_bound(grid.points.begin(), grid.points.end(), event);
  if (it != grid.points.end() && std::abs(*it - event) <= tol) {
    grid.anchor = static_cast<std::size_t>(it - grid.points.begin());
    *it = event;
    return grid;
  }
  if (it != grid.points.begin() && std::abs(*(it - 1) - event) <= tol && it - 1 != grid.points.begin()) {
    --it;
    grid.anchor = static_cast<std::size_t>(it - grid.points.begin());
    *it = event;
    return grid;
  }
  it = grid.points.insert(it, event);
  grid.anchor = static_cast<std::size_t>(it - grid.points.begin());
  return grid;
}

inline TimeGrid make_grid(GridScheme scheme, double event_time, double t_max, std::size_t m) {
  return scheme == GridScheme::per_sample ? per_sample_grid(event_time, m)
                                          : global_grid(event_time, t_max, m);
}

/// Composite trapezoid over points [0, upto] (inclusive, 0-based). Defaults
/// to the grid anchor.
inline double trapezoid(std::span<const double> values, const TimeGrid& grid,
                        std::optional<std::size_t> upto = std::nullopt) {
  if (values.size() != grid.size()) {
    throw DimensionError("trapezoid: " + std::to_string(values.size()) + " values for a grid of " +
                         std::to_string(grid.size()) + " points");
  }
  const std::size_t last = upto.value_or(grid.anchor);
  if (last >= grid.size()) throw DimensionError("trapezoid: upper index out of range");
  double total = 0.0;
  for (std::size_t j = 1; j <= last; ++j) {
    total += 0.5 * (values[j] + values[j - 1]) * grid.spacing(j);
  }
  return total;
}

/// Index of the last grid point, for integrating over the whole grid.
inline std::size_t grid_end(const TimeGrid& grid) { return grid.size() - 1; }

/// Weights w with sum_j w_j v_j == trapezoid(v, grid, upto).
inline std::vector<double> trapezoid_weights(const TimeGrid& grid,
                                             std::optional<std::size_t> upto = std::nullopt) {
  const std::size_t last = upto.value_or(grid.anchor);
  if (last >= grid.size()) throw DimensionError("trapezoid_weights: upper index out of range");
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t j = 1; j <= last; ++j) {
    const double half = 0.5 * grid.spacing(j);
    w[j - 1] += half;
    w[j] += half;
  }
  return w;
}

/// Running trapezoid integral at every point of an ascending mesh.
inline std::vector<double> cumulative_trapezoid(std::span<const double> values,
                                                std::span<const double> points) {
  if (values.size() != points.size()) {
    throw DimensionError("cumulative_trapezoid: length mismatch");
  }
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t j = 1; j < points.size(); ++j) {
    out[j] = out[j - 1] + 0.5 * (values[j] + values[j - 1]) * (points[j] - points[j - 1]);
  }
  return out;
}

}  // namespace ictsurf
