#pragma once

// Dataset ingestion, preprocessing and the synthetic generators.

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ictsurf/errors.hpp"
#include "ictsurf/random.hpp"

namespace ictsurf {

// ---------------------------------------------------------------------------
// Warnings

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest representation that round-trips.
inline std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

// ---------------------------------------------------------------------------
// Delimited text tables

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw InputError("table has no column '" + std::string(name) + "'");
  }
};

namespace detail {
inline std::vector<std::string> split_record(const std::string& line, char delim, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw InputError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

inline std::string quote_field(const std::string& field, char delim) {
  if (field.find_first_of(std::string{delim, '"', '\n'}) == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace detail

inline Table parse_table(std::istream& in, char delim = ',') {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_record(line, delim, line_no);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw InputError("table has no header row");
  return table;
}

inline Table read_table(const std::string& path, char delim = ',') {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_table(in, delim);
}

inline void write_table(std::ostream& out, const Table& table, char delim = ',') {
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out << delim;
      out << detail::quote_field(fields[i], delim);
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
}

inline void write_table(const std::string& path, const Table& table, char delim = ',') {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_table(out, table, delim);
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Schema and raw datasets

enum class FeatureKind { numeric, categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
};

/// Column layout of an ingestion CSV.
struct Schema {
  std::string time_column = "time";
  std::string label_column = "label";
  std::vector<FeatureSpec> features;
  /// Number of event types; labels must lie in 0..risks.
  std::size_t risks = 1;

  nlohmann::json to_json() const {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : features) {
      feats.push_back({{"name", f.name}, {"kind", f.kind == FeatureKind::numeric ? "numeric" : "categorical"}});
    }
    return {{"time", time_column}, {"label", label_column}, {"risks", risks}, {"features", feats}};
  }

  static Schema from_json(const nlohmann::json& doc) {
    static const std::set<std::string> known{"time", "label", "risks", "features"};
    for (const auto& [key, value] : doc.items()) {
      if (!known.contains(key)) throw InputError("schema: unknown key '" + key + "'");
    }
    try {
      Schema s;
      s.time_column = doc.value("time", std::string("time"));
      s.label_column = doc.value("label", std::string("label"));
      s.risks = doc.value("risks", std::size_t{1});
      if (s.risks == 0) throw InputError("schema: risks must be at least 1");
      for (const auto& f : doc.at("features")) {
        FeatureSpec spec;
        spec.name = f.at("name").get<std::string>();
        const std::string kind = f.value("kind", std::string("numeric"));
        if (kind == "numeric") spec.kind = FeatureKind::numeric;
        else if (kind == "categorical") spec.kind = FeatureKind::categorical;
        else throw InputError("schema: feature '" + spec.name + "' has unknown kind '" + kind + "'");
        s.features.push_back(std::move(spec));
      }
      return s;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("schema: ") + e.what());
    }
  }
};

inline Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema '" + path + "'");
  try {
    return Schema::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("schema '" + path + "': " + e.what());
  }
}

inline void save_schema(const std::string& path, const Schema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << schema.to_json().dump(2) << '\n';
}

/// One raw feature column; missing cells are flagged, not imputed.
struct FeatureColumn {
  FeatureSpec spec;
  std::vector<double> numeric;           // numeric kind
  std::vector<std::string> categorical;  // categorical kind
  std::vector<bool> missing;
};

/// Raw survival table: features as read, times, labels (0 = censored).
struct Dataset {
  Schema schema;
  std::vector<FeatureColumn> columns;
  std::vector<double> times;
  std::vector<int> labels;
  std::string note;

  std::size_t size() const { return times.size(); }

  std::vector<int> event_indicators() const {
    std::vector<int> d(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) d[i] = labels[i] != 0 ? 1 : 0;
    return d;
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.schema = schema;
    out.note = note;
    for (const auto& c : columns) {
      FeatureColumn sub{c.spec, {}, {}, {}};
      for (std::size_t r : rows) {
        if (c.spec.kind == FeatureKind::numeric) sub.numeric.push_back(c.numeric[r]);
        else sub.categorical.push_back(c.categorical[r]);
        sub.missing.push_back(c.missing[r]);
      }
      out.columns.push_back(std::move(sub));
    }
    for (std::size_t r : rows) {
      out.times.push_back(times[r]);
      out.labels.push_back(labels[r]);
    }
    return out;
  }
};

inline Dataset dataset_from_table(const Table& table, const Schema& schema) {
  std::set<std::string> expected{schema.time_column, schema.label_column};
  for (const auto& f : schema.features) expected.insert(f.name);
  for (const auto& h : table.header) {
    if (!expected.contains(h)) throw InputError("column '" + h + "' is not in the schema");
  }
  Dataset data;
  data.schema = schema;
  const std::size_t time_col = table.column(schema.time_column);
  const std::size_t label_col = table.column(schema.label_column);
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.features) {
    feature_cols.push_back(table.column(f.name));
    data.columns.push_back(FeatureColumn{f, {}, {}, {}});
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = "row " + std::to_string(r + 1) + ", column ";
    const auto t = parse_number(row[time_col]);
    if (!t || !std::isfinite(*t)) throw InputError(where + "'" + schema.time_column + "': unparsable time '" + row[time_col] + "'");
    if (*t < 0.0) throw InputError(where + "'" + schema.time_column + "': negative time");
    const auto lab = parse_number(row[label_col]);
    if (!lab || *lab != std::floor(*lab) || *lab < 0.0 || *lab > static_cast<double>(schema.risks)) {
      throw InputError(where + "'" + schema.label_column + "': unknown label '" + row[label_col] +
                       "' (expected 0.." + std::to_string(schema.risks) + ")");
    }
    data.times.push_back(*t);
    data.labels.push_back(static_cast<int>(*lab));
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      FeatureColumn& col = data.columns[f];
      const std::string& cell = row[feature_cols[f]];
      const bool missing = cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN";
      col.missing.push_back(missing);
      if (col.spec.kind == FeatureKind::numeric) {
        double v = 0.0;
        if (!missing) {
          const auto parsed = parse_number(cell);
          if (!parsed || !std::isfinite(*parsed)) {
            throw InputError(where + "'" + col.spec.name + "': unparsable number '" + cell + "'");
          }
          v = *parsed;
        }
        col.numeric.push_back(v);
      } else {
        col.categorical.push_back(missing ? std::string() : cell);
      }
    }
  }
  return data;
}

inline Dataset load_csv(const std::string& path, const Schema& schema) {
  return dataset_from_table(read_table(path), schema);
}

inline Table dataset_to_table(const Dataset& data) {
  Table table;
  for (const auto& c : data.columns) table.header.push_back(c.spec.name);
  table.header.push_back(data.schema.time_column);
  table.header.push_back(data.schema.label_column);
  for (std::size_t r = 0; r < data.size(); ++r) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    for (const auto& c : data.columns) {
      if (c.missing[r]) row.emplace_back();
      else if (c.spec.kind == FeatureKind::numeric) row.push_back(format_number(c.numeric[r]));
      else row.push_back(c.categorical[r]);
    }
    row.push_back(format_number(data.times[r]));
    row.push_back(std::to_string(data.labels[r]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline void write_csv(const std::string& path, const Dataset& data) {
  write_table(path, dataset_to_table(data));
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Model-ready data: encoded covariates, scaled times.
struct SurvivalData {
  Eigen::MatrixXd covariates;
  std::vector<double> times;
  std::vector<int> labels;
  /// Row identifiers carried through subsetting (original row numbers).
  std::vector<std::size_t> ids;

  std::size_t size() const { return times.size(); }

  std::vector<int> event_indicators() const {
    std::vector<int> d(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) d[i] = labels[i] != 0 ? 1 : 0;
    return d;
  }

  SurvivalData subset(std::span<const std::size_t> rows) const {
    SurvivalData out;
    out.covariates.resize(static_cast<Eigen::Index>(rows.size()), covariates.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.covariates.row(static_cast<Eigen::Index>(i)) = covariates.row(static_cast<Eigen::Index>(rows[i]));
      out.times.push_back(times[rows[i]]);
      out.labels.push_back(labels[rows[i]]);
      out.ids.push_back(ids.empty() ? rows[i] : ids[rows[i]]);
    }
    return out;
  }
};

struct NumericStats {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;
  bool dropped = false;
};

struct CategoricalStats {
  std::string name;
  std::vector<std::string> vocabulary;  // sorted
  std::string mode;
};

/// Statistics learned from a training partition.
struct PreprocessStats {
  std::vector<NumericStats> numeric;
  std::vector<CategoricalStats> categorical;
  double time_scale = 1.0;

  /// Width of the encoded covariate vector.
  std::size_t encoded_width() const {
    std::size_t w = 0;
    for (const auto& n : numeric) w += n.dropped ? 0 : 1;
    for (const auto& c : categorical) w += c.vocabulary.size();
    return w;
  }

  nlohmann::json to_json() const {
    nlohmann::json num = nlohmann::json::array();
    for (const auto& n : numeric) {
      num.push_back({{"name", n.name}, {"mean", n.mean}, {"variance", n.variance}, {"dropped", n.dropped}});
    }
    nlohmann::json cat = nlohmann::json::array();
    for (const auto& c : categorical) {
      cat.push_back({{"name", c.name}, {"vocabulary", c.vocabulary}, {"mode", c.mode}});
    }
    return {{"numeric", num}, {"categorical", cat}, {"time_scale", time_scale}};
  }

  static PreprocessStats from_json(const nlohmann::json& doc) {
    PreprocessStats s;
    for (const auto& n : doc.at("numeric")) {
      s.numeric.push_back({n.at("name").get<std::string>(), n.at("mean").get<double>(),
                           n.at("variance").get<double>(), n.at("dropped").get<bool>()});
    }
    for (const auto& c : doc.at("categorical")) {
      s.categorical.push_back({c.at("name").get<std::string>(),
                               c.at("vocabulary").get<std::vector<std::string>>(),
                               c.at("mode").get<std::string>()});
    }
    s.time_scale = doc.at("time_scale").get<double>();
    return s;
  }
};

/// Mean observed time of a partition; used as the time scale.
inline double mean_time(const Dataset& data) {
  if (data.size() == 0) throw InputError("cannot take the mean time of an empty dataset");
  const double sum = std::accumulate(data.times.begin(), data.times.end(), 0.0);
  const double mean = sum / static_cast<double>(data.size());
  if (!(mean > 0.0)) throw InputError("mean time must be positive to scale times");
  return mean;
}

/// Learns imputation, standardization and one-hot vocabularies from `train`.
inline PreprocessStats fit_preprocess(const Dataset& train, double time_scale = 1.0) {
  if (train.size() == 0) throw InputError("cannot fit preprocessing on an empty dataset");
  if (!(time_scale > 0.0) || !std::isfinite(time_scale)) throw InputError("time scale must be positive");
  PreprocessStats stats;
  stats.time_scale = time_scale;
  for (const auto& col : train.columns) {
    if (col.spec.kind == FeatureKind::numeric) {
      NumericStats s{col.spec.name, 0.0, 0.0, false};
      std::size_t count = 0;
      for (std::size_t r = 0; r < col.numeric.size(); ++r) {
        if (!col.missing[r]) {
          s.mean += col.numeric[r];
          ++count;
        }
      }
      if (count == 0) {
        s.dropped = true;
        warn("feature '" + col.spec.name + "' has no observed values; dropped");
        stats.numeric.push_back(s);
        continue;
      }
      s.mean /= static_cast<double>(count);
      for (std::size_t r = 0; r < col.numeric.size(); ++r) {
        if (!col.missing[r]) s.variance += (col.numeric[r] - s.mean) * (col.numeric[r] - s.mean);
      }
      s.variance /= static_cast<double>(count);
      if (!(s.variance > 0.0)) {
        s.dropped = true;
        warn("feature '" + col.spec.name + "' has zero variance; dropped");
      }
      stats.numeric.push_back(s);
    } else {
      std::map<std::string, std::size_t> counts;
      for (std::size_t r = 0; r < col.categorical.size(); ++r) {
        if (!col.missing[r]) ++counts[col.categorical[r]];
      }
      CategoricalStats s{col.spec.name, {}, {}};
      std::size_t best = 0;
      for (const auto& [value, count] : counts) {
        s.vocabulary.push_back(value);
        if (count > best) {
          best = count;
          s.mode = value;
        }
      }
      if (s.vocabulary.empty()) warn("feature '" + col.spec.name + "' has no observed values");
      stats.categorical.push_back(std::move(s));
    }
  }
  return stats;
}

/// Imputes, standardizes, one-hot encodes and rescales time with `stats`.
/// Categories unseen at fit time encode as all zeros.
inline SurvivalData apply_preprocess(const Dataset& data, const PreprocessStats& stats) {
  std::size_t num_i = 0;
  std::size_t cat_i = 0;
  const auto n = static_cast<Eigen::Index>(data.size());
  SurvivalData out;
  out.covariates = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(stats.encoded_width()));
  Eigen::Index col_out = 0;
  for (const auto& col : data.columns) {
    if (col.spec.kind == FeatureKind::numeric) {
      if (num_i >= stats.numeric.size() || stats.numeric[num_i].name != col.spec.name) {
        throw InputError("preprocessing statistics do not match feature '" + col.spec.name + "'");
      }
      const NumericStats& s = stats.numeric[num_i++];
      if (s.dropped) continue;
      const double inv_sd = 1.0 / std::sqrt(s.variance);
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        const double v = col.missing[ur] ? s.mean : col.numeric[ur];
        out.covariates(r, col_out) = (v - s.mean) * inv_sd;
      }
      ++col_out;
    } else {
      if (cat_i >= stats.categorical.size() || stats.categorical[cat_i].name != col.spec.name) {
        throw InputError("preprocessing statistics do not match feature '" + col.spec.name + "'");
      }
      const CategoricalStats& s = stats.categorical[cat_i++];
      std::set<std::string> unseen;
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        const std::string& v = col.missing[ur] ? s.mode : col.categorical[ur];
        const auto it = std::lower_bound(s.vocabulary.begin(), s.vocabulary.end(), v);
        if (it != s.vocabulary.end() && *it == v) {
          out.covariates(r, col_out + (it - s.vocabulary.begin())) = 1.0;
        } else if (!v.empty()) {
          unseen.insert(v);
        }
      }
      for (const auto& v : unseen) warn("feature '" + col.spec.name + "': unseen category '" + v + "' encoded as zeros");
      col_out += static_cast<Eigen::Index>(s.vocabulary.size());
    }
  }
  if (num_i != stats.numeric.size() || cat_i != stats.categorical.size()) {
    throw InputError("preprocessing statistics have more features than the dataset");
  }
  out.times.reserve(data.size());
  for (double t : data.times) out.times.push_back(t / stats.time_scale);
  out.labels = data.labels;
  out.ids.resize(data.size());
  std::iota(out.ids.begin(), out.ids.end(), 0);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace detail {
inline Dataset numeric_dataset(const std::string& prefix, std::size_t dims, std::size_t risks) {
  Dataset d;
  d.schema.risks = risks;
  for (std::size_t j = 0; j < dims; ++j) {
    FeatureSpec spec{prefix + std::to_string(j + 1), FeatureKind::numeric};
    d.schema.features.push_back(spec);
    d.columns.push_back(FeatureColumn{spec, {}, {}, {}});
  }
  return d;
}

/// Right-censors exactly floor(n/2) samples chosen uniformly without
/// replacement; each censored time is uniform on (0, T*).
inline void censor_half(Dataset& d, Rng& rng) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t count = d.size() / 2;
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
  }
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = idx[i];
    d.times[r] = uniform(rng, 0.0, d.times[r]);
    d.labels[r] = 0;
  }
}
}  // namespace detail

/// Gaussian-bump log-risk r(x) = max_log_risk * exp(-(x1^2 + x2^2) / (2 width^2)).
struct NonlinearParams {
  double max_log_risk = std::log(5.0);
  double width = 0.5;
  double base_rate = 1.0;
  std::size_t dims = 10;
};

inline double nonlinear_log_risk(std::span<const double> x, const NonlinearParams& p) {
  return p.max_log_risk * std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2.0 * p.width * p.width));
}

/// Exponential proportional-hazards data with uniform[-1, 1) covariates and
/// half of the samples right-censored.
inline Dataset simulate_nonlinear(std::size_t n, std::uint64_t seed, const NonlinearParams& p = {},
                                  bool censor = true) {
  if (n == 0) throw InputError("n must be at least 1");
  Dataset d = detail::numeric_dataset("x", p.dims, 1);
  d.note = "synthetic nonlinear";
  Rng rng = make_stream(seed, "simulate/nonlinear");
  std::vector<double> x(p.dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p.dims; ++j) {
      x[j] = uniform(rng, -1.0, 1.0);
      d.columns[j].numeric.push_back(x[j]);
      d.columns[j].missing.push_back(false);
    }
    const double rate = p.base_rate * std::exp(nonlinear_log_risk(x, p));
    d.times.push_back(exponential(rng, 1.0 / rate));
    d.labels.push_back(1);
  }
  if (censor) {
    Rng crng = make_stream(seed, "simulate/censor");
    detail::censor_half(d, crng);
  }
  return d;
}

/// Latent draws of the two-risk generator before taking the minimum.
struct CompetingLatent {
  Eigen::MatrixXd x;
  std::vector<double> t1;
  std::vector<double> t2;
};

inline constexpr std::size_t kCompetingDims = 20;

/// X ~ N(0, I_20), s = x1 + x2 + x3 + x4, T1 ~ Exp(mean cosh s),
/// T2 ~ Exp(mean |N(0,1) + sinh s|).
inline CompetingLatent simulate_competing_latent(std::size_t n, std::uint64_t seed) {
  CompetingLatent out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kCompetingDims));
  Rng rng = make_stream(seed, "simulate/competing");
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kCompetingDims); ++j) out.x(r, j) = normal(rng);
    const double s = out.x(r, 0) + out.x(r, 1) + out.x(r, 2) + out.x(r, 3);
    out.t1.push_back(exponential(rng, std::cosh(s)));
    out.t2.push_back(exponential(rng, std::abs(normal(rng) + std::sinh(s))));
  }
  return out;
}

inline Dataset simulate_competing(std::size_t n, std::uint64_t seed, bool censor = true) {
  if (n == 0) throw InputError("n must be at least 1");
  const CompetingLatent latent = simulate_competing_latent(n, seed);
  Dataset d = detail::numeric_dataset("x", kCompetingDims, 2);
  d.note = "synthetic competing";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kCompetingDims; ++j) {
      d.columns[j].numeric.push_back(latent.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      d.columns[j].missing.push_back(false);
    }
    const bool first = latent.t1[i] <= latent.t2[i];
    d.times.push_back(first ? latent.t1[i] : latent.t2[i]);
    d.labels.push_back(first ? 1 : 2);
  }
  if (censor) {
    Rng crng = make_stream(seed, "simulate/censor");
    detail::censor_half(d, crng);
  }
  return d;
}

}  // namespace ictsurf
