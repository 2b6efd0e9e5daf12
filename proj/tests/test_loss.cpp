#include <gtest/gtest.h>

#include <cmath>

#include "ictsurf/loss.hpp"
#include "ictsurf/model.hpp"
#include "ictsurf/random.hpp"

using namespace ictsurf;

namespace {

// Loss through the graph with hazards held in a parameter so gradients can be read.
double graph_loss(const Matrix& hazards, const std::vector<TimeGrid>& grids, const std::vector<int>& labels,
                  std::size_t k) {
  ad::ParamSet p;
  p.add("h", hazards);
  ad::Graph g(p);
  multi_risk_nll(g, g.parameter("h"), grids, labels, k);
  return g.forward()(0, 0);
}

// Multi-risk likelihood written out term by term with explicit panel sums.
double oracle_loss(const Matrix& h, const std::vector<TimeGrid>& grids, const std::vector<int>& labels,
                   std::size_t k) {
  double total = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    double risk_sum = 0.0;
    Index offset = 0;
    for (std::size_t i = 0; i < grids.size(); ++i) {
      const auto& pts = grids[i].points;
      double integral = 0.0;
      for (std::size_t j = 1; j <= grids[i].anchor; ++j) {
        integral += 0.5 * (h(offset + static_cast<Index>(j), static_cast<Index>(r)) +
                           h(offset + static_cast<Index>(j) - 1, static_cast<Index>(r))) *
                    (pts[j] - pts[j - 1]);
      }
      const double log_term =
          labels[i] == static_cast<int>(r + 1)
              ? std::log(h(offset + static_cast<Index>(grids[i].anchor), static_cast<Index>(r)))
              : 0.0;
      risk_sum += integral - log_term;
      offset += static_cast<Index>(pts.size());
    }
    total += risk_sum / static_cast<double>(grids.size());
  }
  return total / static_cast<double>(k);
}

Matrix random_hazards(Rng& rng, std::size_t rows, std::size_t k) {
  Matrix h(static_cast<Index>(rows), static_cast<Index>(k));
  for (Index i = 0; i < h.size(); ++i) h.data()[i] = uniform(rng, 0.05, 3.0);
  return h;
}

}  // namespace

TEST(SingleRisk, HandExampleEvent) {
  const std::vector<TimeGrid> grids{{{0.0, 0.5, 1.0}, 2}};
  Matrix h(3, 1);
  h << 0.2, 0.4, 0.8;
  const double expected = 0.45 - std::log(0.8);
  EXPECT_NEAR(graph_loss(h, grids, {1}, 1), expected, 1e-14);
  EXPECT_NEAR(nll_value(h, grids, std::vector<int>{1}, 1), expected, 1e-14);
  EXPECT_NEAR(expected, 0.6731, 1e-4);
}

TEST(SingleRisk, HandExampleCensored) {
  const std::vector<TimeGrid> grids{{{0.0, 0.5, 1.0}, 2}};
  Matrix h(3, 1);
  h << 0.2, 0.4, 0.8;
  EXPECT_NEAR(graph_loss(h, grids, {0}, 1), 0.45, 1e-15);
}

TEST(SingleRisk, UnitConstants) {
  const std::vector<TimeGrid> grids{per_sample_grid(1.0, 2)};
  EXPECT_DOUBLE_EQ(graph_loss(Matrix::Ones(2, 1), grids, {1}, 1), 1.0);
}

TEST(SingleRisk, EqualsMultiRiskWithOneRisk) {
  Rng rng = make_stream(1, "single");
  std::vector<TimeGrid> grids;
  std::vector<int> labels;
  std::size_t rows = 0;
  for (int i = 0; i < 6; ++i) {
    grids.push_back(per_sample_grid(uniform(rng, 0.1, 3), 5));
    labels.push_back(i % 2);
    rows += 5;
  }
  const Matrix h = random_hazards(rng, rows, 1);
  ad::ParamSet p;
  p.add("h", h);
  ad::Graph g1(p);
  single_risk_nll(g1, g1.parameter("h"), grids, labels);
  ad::Graph g2(p);
  multi_risk_nll(g2, g2.parameter("h"), grids, labels, 1);
  EXPECT_EQ(g1.forward()(0, 0), g2.forward()(0, 0));
}

TEST(MultiRisk, IndicatorStructure) {
  const std::vector<TimeGrid> grids{{{0.0, 1.0}, 1}};
  Matrix h(2, 2);
  h << 0.5, 0.25, 0.7, 0.3;
  const double risk1 = 0.5 * (0.5 + 0.7) - std::log(0.7);
  const double risk2 = 0.5 * (0.25 + 0.3);
  EXPECT_NEAR(graph_loss(h, grids, {1}, 2), 0.5 * (risk1 + risk2), 1e-15);
}

TEST(MultiRisk, AllCensored) {
  Rng rng = make_stream(2, "cens");
  std::vector<TimeGrid> grids{per_sample_grid(1.0, 4), global_grid(0.4, 2.0, 5)};
  const Matrix h = random_hazards(rng, 4 + grids[1].size(), 2);
  double expected = 0.0;
  Index offset = 0;
  for (const auto& g : grids) {
    for (Index k = 0; k < 2; ++k) {
      std::vector<double> col;
      for (std::size_t j = 0; j < g.size(); ++j) col.push_back(h(offset + static_cast<Index>(j), k));
      expected += trapezoid(col, g);
    }
    offset += static_cast<Index>(g.size());
  }
  expected /= 2.0 * 2.0;
  EXPECT_NEAR(graph_loss(h, grids, {0, 0}, 2), expected, 1e-14);
}

TEST(MultiRisk, SymmetricBatchHasEqualRiskTerms) {
  const std::vector<TimeGrid> grids{per_sample_grid(1.0, 3), per_sample_grid(1.0, 3)};
  Matrix h(6, 2);
  h << 0.3, 0.5, 0.4, 0.6, 0.9, 0.2,  //
      0.5, 0.3, 0.6, 0.4, 0.2, 0.9;
  // risk 1 sees sample 0 as its event, risk 2 sees sample 1 with mirrored hazards
  const std::vector<int> labels{1, 2};
  const Matrix h1 = h.col(0);
  Matrix swapped(6, 1);
  swapped << h(3, 1), h(4, 1), h(5, 1), h(0, 1), h(1, 1), h(2, 1);
  const std::vector<int> first{1, 0};
  const double term1 = nll_value(h1, grids, first, 1);
  const double term2 = nll_value(swapped, grids, first, 1);
  EXPECT_NEAR(term1, term2, 1e-15);
  EXPECT_NEAR(nll_value(h, grids, labels, 2), term1, 1e-15);
}

TEST(MultiRisk, LabelOutOfRange) {
  const std::vector<TimeGrid> grids{per_sample_grid(1.0, 2)};
  EXPECT_THROW(graph_loss(Matrix::Ones(2, 2), grids, {3}, 2), InputError);
  EXPECT_THROW(nll_value(Matrix::Ones(2, 2), grids, std::vector<int>{-1}, 2), InputError);
}

TEST(Loss, NonPositiveAnchorHazard) {
  const std::vector<TimeGrid> grids{per_sample_grid(1.0, 2)};
  Matrix h(2, 1);
  h << 1.0, 0.0;
  EXPECT_THROW(graph_loss(h, grids, {1}, 1), DomainError);
  EXPECT_THROW(nll_value(h, grids, std::vector<int>{1}, 1), DomainError);
}

TEST(Loss, MatchesOracleOnRandomBatches) {
  Rng rng = make_stream(3, "oracle");
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t k = 1 + uniform_index(rng, 3);
    const std::size_t n = 1 + uniform_index(rng, 8);
    const auto scheme = uniform01(rng) < 0.5 ? GridScheme::per_sample : GridScheme::global;
    std::vector<TimeGrid> grids;
    std::vector<int> labels;
    std::size_t rows = 0;
    for (std::size_t i = 0; i < n; ++i) {
      grids.push_back(make_grid(scheme, uniform(rng, 0.01, 4.0), 3.0, 2 + uniform_index(rng, 8)));
      labels.push_back(static_cast<int>(uniform_index(rng, k + 1)));
      rows += grids.back().size();
    }
    const Matrix h = random_hazards(rng, rows, k);
    const double oracle = oracle_loss(h, grids, labels, k);
    EXPECT_NEAR(graph_loss(h, grids, labels, k), oracle, 1e-12);
    EXPECT_NEAR(nll_value(h, grids, labels, k), oracle, 1e-12);
  }
}

TEST(Loss, TimeRescalingCovariance) {
  Rng rng = make_stream(4, "scale");
  const double c = 2.5;
  std::vector<TimeGrid> grids;
  std::vector<TimeGrid> scaled;
  std::vector<int> labels{1, 0, 1};
  std::size_t rows = 0;
  for (int i = 0; i < 3; ++i) {
    grids.push_back(per_sample_grid(uniform(rng, 0.5, 2), 6));
    TimeGrid s = grids.back();
    for (double& t : s.points) t *= c;
    scaled.push_back(s);
    rows += 6;
  }
  const Matrix h = random_hazards(rng, rows, 1);
  const Matrix hs = h / c;
  const double d_sum = 2.0;
  const double base = nll_value(h, grids, labels, 1);
  const double after = nll_value(hs, scaled, labels, 1);
  EXPECT_NEAR(after, base + d_sum * std::log(c) / 3.0, 1e-12);
}

TEST(Loss, FiniteDifferenceOnNetworkGraph) {
  Rng rng = make_stream(5, "fd");
  for (std::size_t k : {1u, 2u}) {
    NetworkShape shape;
    shape.covariates = 3;
    shape.embed_dim = 4;
    shape.hidden1 = 6;
    shape.hidden2 = 5;
    shape.risks = k;
    HazardNetwork net(shape, rng);
    Matrix x(3, 3);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    const std::vector<double> times{0.7, 1.3, 0.4};
    const std::vector<int> labels{1, 0, static_cast<int>(k)};
    const std::vector<std::size_t> sel{0, 1, 2};
    const LikelihoodBatch batch =
        make_likelihood_batch(x, times, labels, sel, GridScheme::per_sample, 1.3, 4);
    ad::Graph g(net.params());
    const auto applied = net.apply(g, batch.covariates, batch.times, ad::BatchNormMode::training);
    multi_risk_nll(g, applied.hazards, batch.grids, batch.labels, k);
    // Small batch-norm batches make the composite strongly curved, so a
    // smaller step is used and coordinates that cross a ReLU kink are skipped.
    const auto coarse = ad::finite_difference_report(g, {}, 1e-3, true);
    const auto fine = ad::finite_difference_report(g, {}, 1e-4, true);
    EXPECT_LT(fine.max_error, 1e-3) << "K=" << k;
    EXPECT_LE(fine.max_error, coarse.max_error) << "K=" << k;
    EXPECT_GT(fine.checked, fine.skipped);
  }
}

TEST(Loss, FiniteDifferenceOnHazards) {
  Rng rng = make_stream(6, "fd-h");
  for (std::size_t k : {1u, 2u}) {
    std::vector<TimeGrid> grids;
    std::vector<int> labels;
    std::size_t rows = 0;
    for (int i = 0; i < 3; ++i) {
      grids.push_back(per_sample_grid(uniform(rng, 0.2, 2.0), 5));
      labels.push_back(static_cast<int>(uniform_index(rng, k + 1)));
      rows += 5;
    }
    labels[0] = 1;
    ad::ParamSet p;
    p.add("h", random_hazards(rng, rows, k));
    ad::Graph g(p);
    if (k == 1) single_risk_nll(g, g.parameter("h"), grids, labels);
    else multi_risk_nll(g, g.parameter("h"), grids, labels, k);
    EXPECT_LT(ad::finite_difference_check(g, {}, 1e-3), 1e-4) << "K=" << k;
  }
}

TEST(Batch, FlattensRowsInSampleOrder) {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  const std::vector<double> times{1.0, 2.0, 4.0};
  const std::vector<int> labels{1, 0, 1};
  const std::vector<std::size_t> sel{2, 0};
  const LikelihoodBatch b = make_likelihood_batch(x, times, labels, sel, GridScheme::global, 4.0, 3);
  ASSERT_EQ(b.samples(), 2u);
  EXPECT_EQ(b.grids[0].points, (std::vector<double>{0.0, 2.0, 4.0}));
  EXPECT_EQ(b.grids[1].points, (std::vector<double>{0.0, 1.0, 2.0, 4.0}));
  EXPECT_EQ(b.rows(), 7u);
  EXPECT_EQ(b.covariates(0, 0), 5.0);
  EXPECT_EQ(b.covariates(3, 1), 2.0);
  EXPECT_EQ(b.labels, (std::vector<int>{1, 1}));
}
