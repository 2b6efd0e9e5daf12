#pragma once

// The hazard network: (covariates, time) -> one positive hazard per risk,
// plus survival / cumulative-incidence curves derived from any hazard model.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ictsurf/autodiff.hpp"
#include "ictsurf/discretization.hpp"
#include "ictsurf/errors.hpp"
#include "ictsurf/random.hpp"

namespace ictsurf {

using ad::Index;
using ad::Matrix;

enum class TimeEncoding { raw, positional, time2vec };

inline std::string to_string(TimeEncoding e) {
  switch (e) {
    case TimeEncoding::raw: return "raw";
    case TimeEncoding::positional: return "pe";
    case TimeEncoding::time2vec: return "t2v";
  }
  return "?";
}

inline TimeEncoding parse_encoding(std::string_view text) {
  if (text == "raw") return TimeEncoding::raw;
  if (text == "pe" || text == "positional") return TimeEncoding::positional;
  if (text == "t2v" || text == "time2vec") return TimeEncoding::time2vec;
  throw InputError("unknown time encoding '" + std::string(text) + "' (expected raw, pe or t2v)");
}

struct NetworkShape {
  std::size_t covariates = 0;
  std::size_t embed_dim = 16;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 64;
  std::size_t risks = 1;
  TimeEncoding encoding = TimeEncoding::time2vec;

  std::size_t time_width() const { return encoding == TimeEncoding::raw ? 1 : embed_dim; }
  std::size_t input_width() const { return covariates + time_width(); }
};

/// Time features for a single time point. `omega` and `phi` are only read in
/// time2vec mode.
inline std::vector<double> encode_time(double t, TimeEncoding mode, std::size_t dim,
                                       std::span<const double> omega = {},
                                       std::span<const double> phi = {}) {
  if (!std::isfinite(t)) throw DomainError("encode_time: time must be finite");
  if (t < 0.0) throw DomainError("encode_time: negative time " + std::to_string(t));
  switch (mode) {
    case TimeEncoding::raw:
      return {t};
    case TimeEncoding::positional: {
      std::vector<double> out(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t pair = i / 2;
        const double freq =
            std::pow(10000.0, -2.0 * static_cast<double>(pair) / static_cast<double>(dim));
        out[i] = (i % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq);
      }
      return out;
    }
    case TimeEncoding::time2vec: {
      if (omega.size() != dim || phi.size() != dim) {
        throw DimensionError("encode_time: time2vec needs " + std::to_string(dim) +
                             " frequencies and phases");
      }
      std::vector<double> out(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        const double arg = omega[i] * t + phi[i];
        out[i] = i == 0 ? arg : std::sin(arg);
      }
      return out;
    }
  }
  return {};
}

/// Anything that maps (covariate rows, times) to an n x K hazard matrix.
template <class M>
concept HazardModel = requires(const M& m, const Matrix& x, std::span<const double> t) {
  { m.risks() } -> std::convertible_to<std::size_t>;
  { m.covariates() } -> std::convertible_to<std::size_t>;
  { m.hazards(x, t) } -> std::convertible_to<Matrix>;
};

struct BatchNormStats {
  Matrix mean;
  Matrix var;
};

/// Running statistic update: running = momentum * running + (1 - momentum) * batch.
inline constexpr double kBatchNormMomentum = 0.9;

class HazardNetwork {
 public:
  /// Graph handles of one network application.
  struct Applied {
    ad::Var hazards;
    ad::Var bn1;
    ad::Var bn2;
  };

  HazardNetwork() = default;

  /// Fresh network with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights.
  HazardNetwork(const NetworkShape& shape, Rng& rng) : shape_(shape) {
    validate_shape();
    const auto in = static_cast<Index>(shape_.input_width());
    const auto h1 = static_cast<Index>(shape_.hidden1);
    const auto h2 = static_cast<Index>(shape_.hidden2);
    const auto k = static_cast<Index>(shape_.risks);
    if (shape_.encoding == TimeEncoding::time2vec) {
      const auto b = static_cast<Index>(shape_.embed_dim);
      Matrix omega(1, b);
      for (Index i = 0; i < b; ++i) omega(0, i) = uniform01(rng);
      params_.add("t2v.omega", omega);
      params_.add("t2v.phi", Matrix::Zero(1, b));
    }
    add_linear("fc1", in, h1, rng);
    add_batch_norm("bn1", h1);
    add_linear("fc2", h1 + in, h2, rng);
    add_batch_norm("bn2", h2);
    add_linear("head", h2, k, rng);
    bn1_ = {Matrix::Zero(1, h1), Matrix::Ones(1, h1)};
    bn2_ = {Matrix::Zero(1, h2), Matrix::Ones(1, h2)};
  }

  const NetworkShape& shape() const { return shape_; }
  std::size_t risks() const { return shape_.risks; }
  std::size_t covariates() const { return shape_.covariates; }

  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }
  BatchNormStats& running(int layer) { return layer == 1 ? bn1_ : bn2_; }
  const BatchNormStats& running(int layer) const { return layer == 1 ? bn1_ : bn2_; }

  /// Records the network applied to covariate rows `x` at times `t` (one row
  /// per (sample, time) pair) into `graph`.
  Applied apply(ad::Graph& graph, const Matrix& x, std::span<const double> t,
                ad::BatchNormMode mode) const {
    if (x.cols() != static_cast<Index>(shape_.covariates)) {
      throw DimensionError("expected " + std::to_string(shape_.covariates) + " covariates, got " +
                           std::to_string(x.cols()));
    }
    if (x.rows() != static_cast<Index>(t.size())) {
      throw DimensionError("covariate rows (" + std::to_string(x.rows()) + ") and times (" +
                           std::to_string(t.size()) + ") differ");
    }
    for (double ti : t) {
      if (!std::isfinite(ti) || ti < 0.0) throw DomainError("hazard evaluated at invalid time");
    }
    const ad::Var covariates = graph.constant(x);
    const ad::Var time_features = encode(graph, t);
    const ad::Var input = graph.concat({covariates, time_features});

    Applied out{};
    ad::Var h = linear(graph, "fc1", input);
    out.bn1 = norm(graph, "bn1", h, mode, bn1_);
    h = graph.relu(out.bn1);
    h = graph.concat({h, input});
    h = linear(graph, "fc2", h);
    out.bn2 = norm(graph, "bn2", h, mode, bn2_);
    h = graph.relu(out.bn2);
    out.hazards = graph.softplus(linear(graph, "head", h));
    return out;
  }

  /// Folds the batch statistics of a training-mode application into the
  /// running estimates used at inference.
  void update_running_stats(const ad::Graph& graph, const Applied& applied) {
    blend(bn1_, graph.batch_mean(applied.bn1), graph.batch_var(applied.bn1));
    blend(bn2_, graph.batch_mean(applied.bn2), graph.batch_var(applied.bn2));
  }

  /// Inference-mode hazards for many (row, time) pairs; evaluated in chunks.
  Matrix hazards(const Matrix& x, std::span<const double> t) const {
    constexpr Index kChunk = 32768;
    Matrix out(x.rows(), static_cast<Index>(shape_.risks));
    for (Index start = 0; start < x.rows(); start += kChunk) {
      const Index len = std::min(kChunk, x.rows() - start);
      ad::Graph graph(params_);
      const Matrix rows = x.middleRows(start, len);
      const Applied applied =
          apply(graph, rows, t.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len)),
                ad::BatchNormMode::inference);
      graph.forward();
      out.middleRows(start, len) = graph.value(applied.hazards);
    }
    return out;
  }

  /// K hazards for one covariate vector at one time. Training mode
  /// normalizes with the statistics of this single row.
  std::vector<double> forward_hazard(std::span<const double> x, double t, bool training) const {
    Matrix row(1, static_cast<Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Index>(i)) = x[i];
    const double times[1] = {t};
    ad::Graph graph(params_);
    const Applied applied = apply(graph, row, times,
                                  training ? ad::BatchNormMode::training : ad::BatchNormMode::inference);
    graph.forward();
    const Matrix& h = graph.value(applied.hazards);
    return std::vector<double>(h.data(), h.data() + h.size());
  }

  std::vector<double> encode(double t) const {
    if (shape_.encoding != TimeEncoding::time2vec) {
      return encode_time(t, shape_.encoding, shape_.embed_dim);
    }
    const Matrix& omega = params_.at("t2v.omega").value;
    const Matrix& phi = params_.at("t2v.phi").value;
    return encode_time(t, shape_.encoding, shape_.embed_dim,
                       std::span<const double>(omega.data(), static_cast<std::size_t>(omega.size())),
                       std::span<const double>(phi.data(), static_cast<std::size_t>(phi.size())));
  }

  nlohmann::json to_json() const {
    nlohmann::json arch = {
        {"covariates", shape_.covariates}, {"embed_dim", shape_.embed_dim},
        {"hidden", {shape_.hidden1, shape_.hidden2}}, {"risks", shape_.risks},
        {"encoder", to_string(shape_.encoding)}};
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : params_) params.push_back(matrix_json(p.name, p.value));
    nlohmann::json stats = nlohmann::json::array();
    stats.push_back(matrix_json("bn1.running_mean", bn1_.mean));
    stats.push_back(matrix_json("bn1.running_var", bn1_.var));
    stats.push_back(matrix_json("bn2.running_mean", bn2_.mean));
    stats.push_back(matrix_json("bn2.running_var", bn2_.var));
    return {{"architecture", arch}, {"parameters", params}, {"buffers", stats}};
  }

  static HazardNetwork from_json(const nlohmann::json& doc) {
    try {
      const auto& arch = doc.at("architecture");
      NetworkShape shape;
      shape.covariates = arch.at("covariates").get<std::size_t>();
      shape.embed_dim = arch.at("embed_dim").get<std::size_t>();
      shape.hidden1 = arch.at("hidden").at(0).get<std::size_t>();
      shape.hidden2 = arch.at("hidden").at(1).get<std::size_t>();
      shape.risks = arch.at("risks").get<std::size_t>();
      shape.encoding = parse_encoding(arch.at("encoder").get<std::string>());
      Rng unused(0);
      HazardNetwork net(shape, unused);
      for (const auto& entry : doc.at("parameters")) {
        const std::string name = entry.at("name").get<std::string>();
        if (!net.params_.contains(name)) {
          throw InputError("checkpoint parameter '" + name + "' does not belong to this architecture");
        }
        read_matrix(entry, net.params_.at(name).value);
      }
      for (const auto& entry : doc.at("buffers")) {
        const std::string name = entry.at("name").get<std::string>();
        if (name == "bn1.running_mean") read_matrix(entry, net.bn1_.mean);
        else if (name == "bn1.running_var") read_matrix(entry, net.bn1_.var);
        else if (name == "bn2.running_mean") read_matrix(entry, net.bn2_.mean);
        else if (name == "bn2.running_var") read_matrix(entry, net.bn2_.var);
        else throw InputError("unknown checkpoint buffer '" + name + "'");
      }
      return net;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("malformed checkpoint: ") + e.what());
    }
  }

 private:
  void validate_shape() const {
    if (shape_.covariates == 0) throw InputError("network needs at least one covariate");
    if (shape_.risks == 0) throw InputError("network needs at least one risk");
    if (shape_.hidden1 == 0 || shape_.hidden2 == 0) throw InputError("hidden widths must be positive");
    if (shape_.encoding != TimeEncoding::raw && shape_.embed_dim == 0) {
      throw InputError("embedding dimension must be positive");
    }
  }

  void add_linear(const std::string& name, Index in, Index out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(in, out);
    for (Index j = 0; j < out; ++j) {
      for (Index i = 0; i < in; ++i) w(i, j) = uniform(rng, -bound, bound);
    }
    Matrix b(1, out);
    for (Index j = 0; j < out; ++j) b(0, j) = uniform(rng, -bound, bound);
    params_.add(name + ".weight", w);
    params_.add(name + ".bias", b);
  }

  void add_batch_norm(const std::string& name, Index width) {
    params_.add(name + ".gamma", Matrix::Ones(1, width));
    params_.add(name + ".beta", Matrix::Zero(1, width));
  }

  ad::Var encode(ad::Graph& graph, std::span<const double> t) const {
    const auto n = static_cast<Index>(t.size());
    switch (shape_.encoding) {
      case TimeEncoding::raw: {
        Matrix col(n, 1);
        for (Index i = 0; i < n; ++i) col(i, 0) = t[static_cast<std::size_t>(i)];
        return graph.constant(std::move(col));
      }
      case TimeEncoding::positional: {
        const auto b = static_cast<Index>(shape_.embed_dim);
        Matrix feats(n, b);
        for (Index i = 0; i < n; ++i) {
          const auto row = encode_time(t[static_cast<std::size_t>(i)], shape_.encoding, shape_.embed_dim);
          for (Index j = 0; j < b; ++j) feats(i, j) = row[static_cast<std::size_t>(j)];
        }
        return graph.constant(std::move(feats));
      }
      case TimeEncoding::time2vec: {
        const auto b = static_cast<Index>(shape_.embed_dim);
        Matrix col(n, 1);
        for (Index i = 0; i < n; ++i) col(i, 0) = t[static_cast<std::size_t>(i)];
        const ad::Var times = graph.constant(std::move(col));
        const ad::Var affine = graph.add_row(graph.matmul(times, graph.parameter("t2v.omega")),
                                             graph.parameter("t2v.phi"));
        const ad::Var linear_part = graph.slice_cols(affine, 0, 1);
        if (b == 1) return linear_part;
        const ad::Var periodic = graph.sine(graph.slice_cols(affine, 1, b - 1));
        return graph.concat({linear_part, periodic});
      }
    }
    throw StateError("unreachable encoding");
  }

  static ad::Var linear(ad::Graph& graph, const std::string& name, ad::Var x) {
    return graph.add_row(graph.matmul(x, graph.parameter(name + ".weight")),
                         graph.parameter(name + ".bias"));
  }

  static ad::Var norm(ad::Graph& graph, const std::string& name, ad::Var x, ad::BatchNormMode mode,
                      const BatchNormStats& running) {
    const ad::Var gamma = graph.parameter(name + ".gamma");
    const ad::Var beta = graph.parameter(name + ".beta");
    if (mode == ad::BatchNormMode::training) return graph.batch_norm(x, gamma, beta, mode);
    return graph.batch_norm(x, gamma, beta, mode, running.mean, running.var);
  }

  static void blend(BatchNormStats& stats, const Matrix& mean, const Matrix& var) {
    stats.mean = kBatchNormMomentum * stats.mean + (1.0 - kBatchNormMomentum) * mean;
    stats.var = kBatchNormMomentum * stats.var + (1.0 - kBatchNormMomentum) * var;
  }

  static nlohmann::json matrix_json(const std::string& name, const Matrix& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    return {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"data", data}};
  }

  static void read_matrix(const nlohmann::json& entry, Matrix& target) {
    const auto rows = entry.at("shape").at(0).get<Index>();
    const auto cols = entry.at("shape").at(1).get<Index>();
    const auto& data = entry.at("data");
    if (rows != target.rows() || cols != target.cols()) {
      throw InputError("checkpoint entry '" + entry.at("name").get<std::string>() + "' has shape " +
                       std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                       std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
    }
    if (data.size() != static_cast<std::size_t>(rows * cols)) {
      throw InputError("checkpoint entry '" + entry.at("name").get<std::string>() +
                       "' has the wrong number of values");
    }
    std::size_t k = 0;
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) target(r, c) = data[k++].get<double>();
    }
  }

  NetworkShape shape_;
  ad::ParamSet params_;
  BatchNormStats bn1_;
  BatchNormStats bn2_;
};

static_assert(HazardModel<HazardNetwork>);

// ---------------------------------------------------------------------------
// Curves

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> cumulative_hazard;
};

struct CifCurve {
  std::vector<double> times;
  /// incidence[k][j] = F_{k+1}(times[j])
  std::vector<std::vector<double>> incidence;
  /// Overall survival from the summed cause-specific hazards.
  std::vector<double> survival;
};

inline void validate_mesh(std::span<const double> mesh) {
  if (mesh.empty()) throw InputError("mesh is empty");
  if (mesh.front() != 0.0) throw InputError("mesh must start at 0");
  for (std::size_t j = 1; j < mesh.size(); ++j) {
    if (!(mesh[j] > mesh[j - 1])) throw InputError("mesh must be strictly increasing");
  }
}

namespace detail {
template <HazardModel M>
Matrix hazards_on_mesh(const M& model, std::span<const double> x, std::span<const double> mesh) {
  if (x.size() != model.covariates()) {
    throw DimensionError("expected " + std::to_string(model.covariates()) + " covariates, got " +
                         std::to_string(x.size()));
  }
  Matrix rows(static_cast<Index>(mesh.size()), static_cast<Index>(x.size()));
  for (Index j = 0; j < rows.rows(); ++j) {
    for (Index c = 0; c < rows.cols(); ++c) rows(j, c) = x[static_cast<std::size_t>(c)];
  }
  return model.hazards(rows, mesh);
}

/// Survival and per-risk incidence from an m x K hazard matrix on `mesh`.
inline CifCurve curves_from_hazards(const Matrix& h, std::span<const double> mesh) {
  const auto m = static_cast<std::size_t>(h.rows());
  const auto k = static_cast<std::size_t>(h.cols());
  CifCurve out;
  out.times.assign(mesh.begin(), mesh.end());
  std::vector<double> total(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) total[j] = h.row(static_cast<Index>(j)).sum();
  const std::vector<double> cum = cumulative_trapezoid(total, mesh);
  out.survival.resize(m);
  for (std::size_t j = 0; j < m; ++j) out.survival[j] = std::exp(-cum[j]);
  out.incidence.assign(k, std::vector<double>(m, 0.0));
  if (k == 1) {
    // F = 1 - S holds exactly for a single risk; the integral form would add
    // quadrature error.
    for (std::size_t j = 0; j < m; ++j) out.incidence[0][j] = 1.0 - out.survival[j];
    return out;
  }
  std::vector<double> density(m);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      density[j] = h(static_cast<Index>(j), static_cast<Index>(r)) * out.survival[j];
    }
    out.incidence[r] = cumulative_trapezoid(density, mesh);
  }
  return out;
}
}  // namespace detail

/// S(t) = exp(-integral of the summed hazard) on `mesh` (starts at 0,
/// strictly increasing).
template <HazardModel M>
SurvivalCurve predict_survival_curve(const M& model, std::span<const double> x,
                                     std::span<const double> mesh) {
  validate_mesh(mesh);
  const Matrix h = detail::hazards_on_mesh(model, x, mesh);
  std::vector<double> total(mesh.size());
  for (std::size_t j = 0; j < mesh.size(); ++j) total[j] = h.row(static_cast<Index>(j)).sum();
  SurvivalCurve curve;
  curve.times.assign(mesh.begin(), mesh.end());
  curve.cumulative_hazard = cumulative_trapezoid(total, mesh);
  curve.survival.resize(mesh.size());
  for (std::size_t j = 0; j < mesh.size(); ++j) curve.survival[j] = std::exp(-curve.cumulative_hazard[j]);
  curve.survival.front() = 1.0;
  return curve;
}

/// F_k(t) = integral of h_k(s) S(s) ds with S from the summed hazards.
template <HazardModel M>
CifCurve predict_cif(const M& model, std::span<const double> x, std::span<const double> mesh) {
  validate_mesh(mesh);
  return detail::curves_from_hazards(detail::hazards_on_mesh(model, x, mesh), mesh);
}

/// Survival and incidence of many samples at a set of horizons.
struct HorizonPredictions {
  std::vector<double> horizons;
  /// survival(i, h)
  Matrix survival;
  /// incidence[k](i, h)
  std::vector<Matrix> incidence;
};

/// Evaluates every row of `x` on a shared mesh of `mesh_points` equal steps
/// up to the largest horizon (horizons inserted) and reads the curves off
/// at the horizons.
template <HazardModel M>
HorizonPredictions predict_at_horizons(const M& model, const Matrix& x, std::span<const double> horizons,
                                       std::size_t mesh_points = 101) {
  if (horizons.empty()) throw InputError("no horizons");
  const double t_end = *std::max_element(horizons.begin(), horizons.end());
  if (!(t_end > 0.0)) throw DomainError("horizons must be positive");
  std::vector<double> mesh = linspace(t_end, std::max<std::size_t>(mesh_points, 2));
  mesh.insert(mesh.end(), horizons.begin(), horizons.end());
  std::sort(mesh.begin(), mesh.end());
  mesh.erase(std::unique(mesh.begin(), mesh.end()), mesh.end());
  std::vector<std::size_t> at(horizons.size());
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    at[h] = static_cast<std::size_t>(std::lower_bound(mesh.begin(), mesh.end(), horizons[h]) - mesh.begin());
  }

  const auto n = x.rows();
  const auto m = static_cast<Index>(mesh.size());
  const auto k = static_cast<Index>(model.risks());
  HorizonPredictions out;
  out.horizons.assign(horizons.begin(), horizons.end());
  out.survival.resize(n, static_cast<Index>(horizons.size()));
  out.incidence.assign(static_cast<std::size_t>(k), Matrix(n, static_cast<Index>(horizons.size())));

  const Index per_chunk = std::max<Index>(1, 65536 / m);
  for (Index start = 0; start < n; start += per_chunk) {
    const Index len = std::min(per_chunk, n - start);
    Matrix rows(len * m, x.cols());
    std::vector<double> times(static_cast<std::size_t>(len * m));
    for (Index i = 0; i < len; ++i) {
      for (Index j = 0; j < m; ++j) {
        rows.row(i * m + j) = x.row(start + i);
        times[static_cast<std::size_t>(i * m + j)] = mesh[static_cast<std::size_t>(j)];
      }
    }
    const Matrix h = model.hazards(rows, times);
    for (Index i = 0; i < len; ++i) {
      const CifCurve c = detail::curves_from_hazards(h.middleRows(i * m, m), mesh);
      for (std::size_t q = 0; q < horizons.size(); ++q) {
        out.survival(start + i, static_cast<Index>(q)) = c.survival[at[q]];
        for (Index r = 0; r < k; ++r) {
          out.incidence[static_cast<std::size_t>(r)](start + i, static_cast<Index>(q)) =
              c.incidence[static_cast<std::size_t>(r)][at[q]];
        }
      }
    }
  }
  return out;
}

}  // namespace ictsurf
