#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ictsurf/data.hpp"

using namespace ictsurf;

namespace {

// Captures warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  WarningSink saved;
  WarningCapture() : saved(warning_sink()) {
    warning_sink() = [this](const std::string& m) { messages.push_back(m); };
  }
  ~WarningCapture() { warning_sink() = saved; }
};

Schema mixed_schema() {
  Schema s;
  s.features = {{"age", FeatureKind::numeric}, {"group", FeatureKind::categorical}};
  return s;
}

Dataset parse(const std::string& text, const Schema& schema) {
  std::istringstream in(text);
  return dataset_from_table(parse_table(in), schema);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ictsurf_test_data_" + name);
}

}  // namespace

TEST(Csv, ParsesQuotedFields) {
  std::istringstream in("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n");
  const Table t = parse_table(in);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "x,1");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
}

TEST(Csv, RaggedRowRejected) {
  std::istringstream in("a,b\n1,2,3\n");
  EXPECT_THROW(parse_table(in), InputError);
}

TEST(Csv, RoundTripIsLossless) {
  const Dataset d = parse("age,group,time,label\n1.5,a,0.25,1\n,b,3,0\n0.1,,2.125,1\n", mixed_schema());
  const auto path = temp_path("roundtrip.csv");
  write_csv(path.string(), d);
  const Dataset back = load_csv(path.string(), mixed_schema());
  EXPECT_EQ(back.times, d.times);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.columns[0].numeric, d.columns[0].numeric);
  EXPECT_EQ(back.columns[0].missing, d.columns[0].missing);
  EXPECT_EQ(back.columns[1].categorical, d.columns[1].categorical);
  std::filesystem::remove(path);
}

TEST(Csv, FullPrecisionNumbers) {
  const double v = 0.1 + 0.2;
  EXPECT_EQ(parse_number(format_number(v)).value(), v);
  EXPECT_FALSE(parse_number("1.5x").has_value());
}

TEST(Dataset, MissingCellFlagged) {
  const Dataset d = parse("age,group,time,label\n,a,1,1\n2,b,2,0\n", mixed_schema());
  EXPECT_TRUE(d.columns[0].missing[0]);
  EXPECT_FALSE(d.columns[0].missing[1]);
}

TEST(Dataset, UnknownColumnNamed) {
  try {
    parse("age,group,bogus,time,label\n1,a,3,1,1\n", mixed_schema());
    FAIL() << "expected an error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
}

TEST(Dataset, MissingColumnNamed) {
  try {
    parse("age,time,label\n1,1,1\n", mixed_schema());
    FAIL() << "expected an error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("group"), std::string::npos);
  }
}

TEST(Dataset, BadLabelAndTime) {
  EXPECT_THROW(parse("age,group,time,label\n1,a,1,2\n", mixed_schema()), InputError);
  EXPECT_THROW(parse("age,group,time,label\n1,a,-1,1\n", mixed_schema()), InputError);
  EXPECT_THROW(parse("age,group,time,label\n1,a,soon,1\n", mixed_schema()), InputError);
}

TEST(Schema, MissingFileIsIoError) {
  try {
    load_schema("/nonexistent/schema.json");
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/schema.json"), std::string::npos);
  }
}

TEST(Schema, JsonRoundTrip) {
  Schema s = mixed_schema();
  s.risks = 2;
  const Schema back = Schema::from_json(s.to_json());
  EXPECT_EQ(back.risks, 2u);
  ASSERT_EQ(back.features.size(), 2u);
  EXPECT_EQ(back.features[1].kind, FeatureKind::categorical);
  EXPECT_THROW(Schema::from_json({{"features", nlohmann::json::array()}, {"extra", 1}}), InputError);
}

TEST(Preprocess, StandardizesWithPopulationVariance) {
  Schema s;
  s.features = {{"x", FeatureKind::numeric}};
  const Dataset d = parse("x,time,label\n1,1,1\n2,1,1\n3,1,1\n", s);
  const SurvivalData out = apply_preprocess(d, fit_preprocess(d));
  const double z = std::sqrt(1.5);
  EXPECT_NEAR(out.covariates(0, 0), -z, 1e-12);
  EXPECT_NEAR(out.covariates(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(out.covariates(2, 0), z, 1e-12);
}

TEST(Preprocess, OneHotSortedVocabulary) {
  Schema s;
  s.features = {{"g", FeatureKind::categorical}};
  const Dataset d = parse("g,time,label\na,1,1\nb,1,0\na,1,1\n", s);
  const SurvivalData out = apply_preprocess(d, fit_preprocess(d));
  Eigen::MatrixXd expected(3, 2);
  expected << 1, 0, 0, 1, 1, 0;
  EXPECT_EQ(out.covariates, expected);
}

TEST(Preprocess, TimesScaled) {
  const Dataset d = parse("age,group,time,label\n1,a,2,1\n2,b,4,0\n", mixed_schema());
  const double scale = mean_time(d);
  EXPECT_EQ(scale, 3.0);
  const SurvivalData out = apply_preprocess(d, fit_preprocess(d, scale));
  EXPECT_DOUBLE_EQ(out.times[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(out.times[1], 4.0 / 3.0);
}

TEST(Preprocess, ImputesMeanAndMode) {
  const Dataset d = parse("age,group,time,label\n1,a,1,1\n3,a,1,1\n,,1,0\n5,b,2,1\n", mixed_schema());
  const PreprocessStats st = fit_preprocess(d);
  EXPECT_DOUBLE_EQ(st.numeric[0].mean, 3.0);
  EXPECT_EQ(st.categorical[0].mode, "a");
  const SurvivalData out = apply_preprocess(d, st);
  EXPECT_EQ(out.covariates(2, 0), 0.0);
  EXPECT_EQ(out.covariates(2, 1), 1.0);
  EXPECT_EQ(out.covariates(2, 2), 0.0);
}

TEST(Preprocess, ZeroVarianceDroppedWithWarning) {
  Schema s;
  s.features = {{"c", FeatureKind::numeric}, {"x", FeatureKind::numeric}};
  const Dataset d = parse("c,x,time,label\n7,1,1,1\n7,2,1,1\n", s);
  WarningCapture w;
  const PreprocessStats st = fit_preprocess(d);
  EXPECT_TRUE(st.numeric[0].dropped);
  EXPECT_EQ(st.encoded_width(), 1u);
  ASSERT_EQ(w.messages.size(), 1u);
  EXPECT_NE(w.messages[0].find("'c'"), std::string::npos);
  EXPECT_EQ(apply_preprocess(d, st).covariates.cols(), 1);
}

TEST(Preprocess, UnseenCategoryEncodesZeros) {
  Schema s;
  s.features = {{"g", FeatureKind::categorical}};
  const Dataset train = parse("g,time,label\na,1,1\nb,1,0\n", s);
  const Dataset test = parse("g,time,label\nc,1,1\n", s);
  WarningCapture w;
  const SurvivalData out = apply_preprocess(test, fit_preprocess(train));
  EXPECT_EQ(out.covariates.row(0).sum(), 0.0);
  EXPECT_EQ(w.messages.size(), 1u);
}

TEST(Preprocess, StandardizedMomentsAndIdempotence) {
  const Dataset d = simulate_nonlinear(500, 3);
  const PreprocessStats st = fit_preprocess(d);
  const SurvivalData out = apply_preprocess(d, st);
  for (Eigen::Index j = 0; j < out.covariates.cols(); ++j) {
    const double mean = out.covariates.col(j).mean();
    const double var = (out.covariates.col(j).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-9);
  }
  Dataset again = d;
  for (std::size_t j = 0; j < again.columns.size(); ++j) {
    for (std::size_t r = 0; r < again.size(); ++r) {
      again.columns[j].numeric[r] = out.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
    }
  }
  const PreprocessStats st2 = fit_preprocess(again);
  for (const auto& n : st2.numeric) {
    EXPECT_NEAR(n.mean, 0.0, 1e-9);
    EXPECT_NEAR(n.variance, 1.0, 1e-9);
  }
}

TEST(Preprocess, StatsJsonRoundTrip) {
  const Dataset d = parse("age,group,time,label\n1,a,2,1\n2,b,4,0\n", mixed_schema());
  const PreprocessStats st = fit_preprocess(d, 3.0);
  const PreprocessStats back = PreprocessStats::from_json(nlohmann::json::parse(st.to_json().dump()));
  EXPECT_EQ(apply_preprocess(d, back).covariates, apply_preprocess(d, st).covariates);
  EXPECT_EQ(back.time_scale, 3.0);
}

TEST(Preprocess, EmptyTrainingSet) { EXPECT_THROW(fit_preprocess(Dataset{}), InputError); }

TEST(Simulate, NonlinearExactCensoring) {
  for (std::size_t n : {1u, 7u, 5000u}) {
    const Dataset d = simulate_nonlinear(n, 11);
    std::size_t censored = 0;
    for (int l : d.labels) censored += l == 0 ? 1 : 0;
    EXPECT_EQ(censored, n / 2);
    EXPECT_EQ(d.columns.size(), 10u);
  }
}

TEST(Simulate, NonlinearCovariateRange) {
  const Dataset d = simulate_nonlinear(2000, 5);
  for (const auto& c : d.columns) {
    for (double v : c.numeric) {
      EXPECT_GE(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Simulate, LogRiskPeaksAtOrigin) {
  const NonlinearParams p;
  std::vector<double> x(10, 0.0);
  EXPECT_DOUBLE_EQ(nonlinear_log_risk(x, p), std::log(5.0));
  x[5] = 0.9;  // only the first two coordinates matter
  EXPECT_DOUBLE_EQ(nonlinear_log_risk(x, p), std::log(5.0));
  x[0] = 0.5;
  EXPECT_DOUBLE_EQ(nonlinear_log_risk(x, p), std::log(5.0) * std::exp(-0.5));
}

TEST(Simulate, Reproducible) {
  const Dataset a = simulate_competing(300, 9);
  const Dataset b = simulate_competing(300, 9);
  const Dataset c = simulate_competing(300, 10);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.columns[3].numeric, b.columns[3].numeric);
  EXPECT_NE(a.times, c.times);
  EXPECT_EQ(simulate_nonlinear(100, 4).times, simulate_nonlinear(100, 4).times);
}

TEST(Simulate, CompetingExactCensoringAndLabels) {
  const Dataset d = simulate_competing(30000, 1);
  std::size_t censored = 0;
  std::size_t first = 0;
  for (int l : d.labels) {
    censored += l == 0 ? 1 : 0;
    first += l == 1 ? 1 : 0;
  }
  EXPECT_EQ(censored, 15000u);
  EXPECT_EQ(d.columns.size(), 20u);
  const double fraction = static_cast<double>(first) / 15000.0;
  // P(label 1) = E[a / (a + cosh s)] with a = |z + sinh s|, s ~ N(0, 4), z ~ N(0, 1),
  // integrated by the midpoint rule.
  double expected = 0.0;
  const int cells = 1500;
  const double sh = 24.0 / cells;
  const double zh = 12.0 / cells;
  for (int i = 0; i < cells; ++i) {
    const double s = -12.0 + (i + 0.5) * sh;
    const double ps = std::exp(-s * s / 8.0) / std::sqrt(8.0 * M_PI) * sh;
    for (int j = 0; j < cells; ++j) {
      const double z = -6.0 + (j + 0.5) * zh;
      const double a = std::abs(z + std::sinh(s));
      expected += ps * std::exp(-z * z / 2.0) / std::sqrt(2.0 * M_PI) * zh * a / (a + std::cosh(s));
    }
  }
  EXPECT_NEAR(fraction, expected, 0.015);
  // Reference fraction 0.456; the generator as written sits about 0.017 below it.
  EXPECT_NEAR(fraction, 0.456, 0.03);
}

TEST(Simulate, FirstRiskMeanNearOneWhenSumVanishes) {
  const CompetingLatent latent = simulate_competing_latent(100000, 2);
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < latent.x.rows(); ++i) {
    const double s = latent.x(i, 0) + latent.x(i, 1) + latent.x(i, 2) + latent.x(i, 3);
    if (std::abs(s) < 0.1) {
      sum += latent.t1[static_cast<std::size_t>(i)];
      ++count;
    }
  }
  ASSERT_GT(count, 1000u);
  EXPECT_NEAR(sum / static_cast<double>(count), 1.0, 0.05);
}

TEST(Simulate, ZeroSamples) {
  EXPECT_THROW(simulate_nonlinear(0, 1), InputError);
  EXPECT_THROW(simulate_competing(0, 1), InputError);
}
