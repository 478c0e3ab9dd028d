#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fractalnet/generators.hpp"
#include "fractalnet/stats.hpp"

namespace fractalnet {
namespace {

DeltaSample sample(Distance diam, double dim_g, double dim_r) {
  DeltaSample s;
  s.diameter = diam;
  s.dim_g = dim_g;
  s.dim_r = dim_r;
  s.delta = dim_g - dim_r;
  return s;
}

TEST(CollectDelta, CompleteGraphsGiveWarning) {
  const std::vector<Graph> graphs{complete_graph(4), complete_graph(6), complete_graph(9)};
  const DeltaCollection c = collect_delta(graphs, 1, 3, 0);
  EXPECT_EQ(c.usable, 0u);
  EXPECT_TRUE(c.warning.has_value());
  EXPECT_EQ(c.samples.size(), 3u);
  for (const auto& s : c.samples) EXPECT_TRUE(s.graph_gated);
}

TEST(CollectDelta, PathTrials) {
  const std::vector<Graph> graphs{path_graph(201)};
  const DeltaCollection c = collect_delta(graphs, 1, 10, 17);
  ASSERT_EQ(c.samples.size(), 10u);
  EXPECT_EQ(c.usable, 10u);
  EXPECT_FALSE(c.warning.has_value());
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(c.samples[t].trial, t);
    EXPECT_LT(std::abs(c.samples[t].delta), 0.3);
  }
}

TEST(CollectDelta, ThreadCountDoesNotChangeResults) {
  const std::vector<Graph> graphs{path_graph(60), grid_graph(8, 8), cycle_graph(40), complete_graph(3)};
  const DeltaCollection a = collect_delta(graphs, 1, 4, 5, 1);
  const DeltaCollection b = collect_delta(graphs, 1, 4, 5, 3);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].graph_id, b.samples[i].graph_id);
    EXPECT_EQ(a.samples[i].delta, b.samples[i].delta);
    EXPECT_EQ(a.samples[i].renorm_gated, b.samples[i].renorm_gated);
  }
}

TEST(CollectDelta, RejectsZeroTrialsOrRadius) {
  const std::vector<Graph> graphs{path_graph(20)};
  EXPECT_THROW(collect_delta(graphs, 1, 0, 0), ArgumentError);
  EXPECT_THROW(collect_delta(graphs, 0, 1, 0), ArgumentError);
}

TEST(Pearson, KnownValuesAndDegenerateInput) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 5, 4, 5};
  const PearsonResult r = pearson_correlation(x, y);
  EXPECT_NEAR(r.r, 0.7745966692414834, 1e-12);
  // t = 2.12132 on 3 degrees of freedom.
  EXPECT_NEAR(r.p_value, 0.1240270, 1e-6);
  const std::vector<double> c(5, 1.0);
  EXPECT_EQ(pearson_correlation(x, c).r, 0.0);
  EXPECT_EQ(pearson_correlation(x, c).p_value, 1.0);
  EXPECT_EQ(pearson_correlation(x, x).p_value, 0.0);
}

TEST(Pearson, MatchesPermutationTest) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  for (double coupling : {0.0, 0.15, 0.3}) {
    std::vector<double> x(100), y(100);
    for (int i = 0; i < 100; ++i) {
      x[i] = normal(rng);
      y[i] = coupling * x[i] + normal(rng);
    }
    const PearsonResult observed = pearson_correlation(x, y);
    std::vector<double> shuffled = y;
    int extreme = 0;
    const int shuffles = 10000;
    for (int k = 0; k < shuffles; ++k) {
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      if (std::abs(pearson_correlation(x, shuffled).r) >= std::abs(observed.r)) ++extreme;
    }
    EXPECT_NEAR(observed.p_value, double(extreme) / shuffles, 0.02) << "coupling " << coupling;
  }
}

TEST(Diagnostics, IdenticalDimensions) {
  std::vector<DeltaSample> samples;
  for (int i = 0; i < 20; ++i) samples.push_back(sample(50, 1.0 + 0.05 * i, 1.0 + 0.05 * i));
  const GaussianDiagnostics d = gaussian_diagnostics(samples);
  EXPECT_EQ(d.n, 20u);
  EXPECT_EQ(d.mean, 0.0);
  EXPECT_EQ(d.std, 0.0);
  EXPECT_NEAR(d.slope, 1.0, 1e-12);
  EXPECT_NEAR(d.r_squared, 1.0, 1e-12);
  EXPECT_EQ(d.corr_p_value, 1.0);
}

TEST(Diagnostics, RecoversKnownSlope) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> dim(0.8, 2.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<DeltaSample> samples;
  for (int i = 0; i < 10000; ++i) {
    const double g = dim(rng);
    samples.push_back(sample(100, g, 0.2 + 0.8 * g + noise(rng)));
  }
  const GaussianDiagnostics d = gaussian_diagnostics(samples);
  EXPECT_GE(d.slope, 0.79);
  EXPECT_LE(d.slope, 0.81);
  EXPECT_NEAR(d.intercept, 0.2, 0.02);
}

TEST(Diagnostics, SlopeIsScaleEquivariant) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<DeltaSample> a, b;
  for (int i = 0; i < 200; ++i) {
    const double g = 1.2 + 0.3 * normal(rng);
    const double r = 0.1 + 0.9 * g + 0.05 * normal(rng);
    a.push_back(sample(40, g, r));
    b.push_back(sample(40, 2 * g, 2 * r));
  }
  const GaussianDiagnostics da = gaussian_diagnostics(a);
  const GaussianDiagnostics db = gaussian_diagnostics(b);
  EXPECT_NEAR(db.slope, da.slope, 1e-12);
  EXPECT_NEAR(db.intercept, 2 * da.intercept, 1e-12);
}

TEST(Diagnostics, GaussianLimitModelHasCalibratedMeanAndPValues) {
  std::mt19937_64 rng(2718);
  std::uniform_int_distribution<Distance> diam(20, 2000);
  std::uniform_real_distribution<double> dim(1.0, 2.0);
  std::normal_distribution<double> normal;
  int rejections = 0;
  const int replications = 200;
  for (int rep = 0; rep < replications; ++rep) {
    std::vector<DeltaSample> samples;
    for (int i = 0; i < 300; ++i) {
      const Distance d = diam(rng);
      const double g = dim(rng);
      samples.push_back(sample(d, g, g - std::sqrt(kappa_squared(d, 0.1)) * normal(rng)));
    }
    const GaussianDiagnostics diag = gaussian_diagnostics(samples);
    EXPECT_LE(std::abs(diag.mean), 3 * diag.std / std::sqrt(double(diag.n)));
    if (diag.corr_p_value < 0.05) ++rejections;
  }
  const double fraction = double(rejections) / replications;
  EXPECT_GE(fraction, 0.01);
  EXPECT_LE(fraction, 0.10);
}

TEST(Diagnostics, Errors) {
  std::vector<DeltaSample> few;
  for (int i = 0; i < 9; ++i) few.push_back(sample(50, 1.0 + i, 1.0));
  EXPECT_THROW(gaussian_diagnostics(few), InsufficientDataError);
  few.push_back(sample(50, 3.0, 1.0));
  DeltaSample flagged = sample(50, 1.0, 1.0);
  flagged.renorm_gated = true;
  few.back() = flagged;
  EXPECT_THROW(gaussian_diagnostics(few), InsufficientDataError);
  std::vector<DeltaSample> flat(12, sample(50, 1.5, 1.4));
  EXPECT_THROW(gaussian_diagnostics(flat), NumericError);
}

TEST(VarianceScaling, SyntheticModelRatiosNearOne) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  std::vector<DeltaSample> samples;
  for (Distance d : {16u, 64u, 256u, 1024u}) {
    for (int i = 0; i < 500; ++i) samples.push_back(sample(d, 1.5, 1.5 - std::sqrt(kappa_squared(d, 0.1)) * normal(rng)));
  }
  const VarianceScaling v = variance_scaling_check(samples, 0.1);
  ASSERT_EQ(v.buckets.size(), 4u);
  for (const auto& b : v.buckets) {
    EXPECT_EQ(b.n, 500u);
    EXPECT_GE(b.ratio, 0.7);
    EXPECT_LE(b.ratio, 1.4);
  }
  EXPECT_TRUE(v.monotone_decreasing);
}

TEST(VarianceScaling, SingleDiameterIsACoverageError) {
  std::vector<DeltaSample> samples(100, sample(64, 1.5, 1.4));
  try {
    variance_scaling_check(samples, 0.1);
    FAIL();
  } catch (const InsufficientDataError& e) {
    EXPECT_NE(std::string(e.what()).find("64-64:100"), std::string::npos) << e.what();
  }
}

TEST(VarianceScaling, SmallBinsMergeFromTheSmallEnd) {
  std::vector<DeltaSample> samples;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  // Ten samples in each of six adjacent half-octave bins, then one large bin.
  for (Distance d : {10u, 15u, 20u, 30u, 40u, 60u})
    for (int i = 0; i < 10; ++i) samples.push_back(sample(d, 1.0, 1.0 + normal(rng)));
  for (int i = 0; i < 40; ++i) samples.push_back(sample(500, 1.0, 1.0 + normal(rng)));
  VarianceScalingOptions opts;
  opts.min_buckets = 2;
  const VarianceScaling v = variance_scaling_check(samples, 0.1, opts);
  ASSERT_EQ(v.buckets.size(), 3u);
  EXPECT_EQ(v.buckets[0].diameter_lo, 10u);
  EXPECT_EQ(v.buckets[0].diameter_hi, 20u);
  EXPECT_EQ(v.buckets[1].diameter_lo, 30u);
  EXPECT_EQ(v.buckets[1].diameter_hi, 60u);
  EXPECT_EQ(v.buckets[1].n, 30u);
  EXPECT_EQ(v.buckets[2].n, 40u);
}

TEST(Prevalence, CountsStrictExceedance) {
  std::vector<DimensionEstimate> est(4);
  est[0].r_squared = 0.99;
  est[1].r_squared = 0.9;
  est[2].r_squared = 0.6;
  est[3].gated = true;
  const auto rows = r2_prevalence(est, default_prevalence_thresholds());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].count, 3u);
  EXPECT_EQ(rows[1].count, 2u);
  EXPECT_EQ(rows[2].count, 1u);
  EXPECT_EQ(rows[3].count, 1u);
  EXPECT_DOUBLE_EQ(rows[0].percent, 75.0);
}

TEST(Prevalence, CompleteGraphsNeverCount) {
  std::vector<DimensionEstimate> est;
  for (std::size_t n = 2; n < 8; ++n) est.push_back(estimate_dimension(complete_graph(n)));
  for (const auto& row : r2_prevalence(est, default_prevalence_thresholds())) EXPECT_EQ(row.count, 0u);
  EXPECT_THROW(r2_prevalence({}, default_prevalence_thresholds()), ArgumentError);
  const std::vector<double> unsorted{0.9, 0.5};
  EXPECT_THROW(r2_prevalence(est, unsorted), ArgumentError);
}

}  // namespace
}  // namespace fractalnet
