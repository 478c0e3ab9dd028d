#pragma once

#include <algorithm>
#include <iterator>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "fractalnet/box_dim.hpp"
#include "fractalnet/errors.hpp"
#include "fractalnet/graph.hpp"
#include "fractalnet/parallel.hpp"
#include "fractalnet/random.hpp"
#include "fractalnet/regression.hpp"
#include "fractalnet/renorm.hpp"

namespace fractalnet {

// ---------------------------------------------------------------------------
// Delta collection
// ---------------------------------------------------------------------------

struct DeltaCollection {
  std::vector<DeltaSample> samples;    // ordered by (graph_id, trial)
  std::vector<DimensionEstimate> estimates;  // one per input graph
  std::size_t usable = 0;
  std::optional<std::string> warning;
};

inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t graph_id, std::size_t trial) {
  return derive_seed(seed, graph_id, trial);
}

/// Renormalises every ungated graph `trials` times and records the
/// dimension change. Gated graphs get a single flagged record.
inline DeltaCollection collect_delta(std::span<const Graph> graphs, std::size_t radius, std::size_t trials,
                                     std::uint64_t seed, unsigned threads = 1,
                                     const BoxCountOptions& options = {}) {
  if (trials == 0) throw ArgumentError("collect_delta: trials must be >= 1");
  if (radius == 0) throw ArgumentError("collect_delta: radius must be >= 1");
  DeltaCollection out;
  out.estimates.resize(graphs.size());
  parallel_for(graphs.size(), threads, [&](std::size_t i) {
    out.estimates[i] = graphs[i].empty() ? gated_estimate(0, 0, false) : estimate_dimension(graphs[i], options);
  });

  struct Task {
    std::size_t graph;
    std::size_t trial;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (out.estimates[i].gated) {
      tasks.push_back({i, 0});
    } else {
      for (std::size_t t = 0; t < trials; ++t) tasks.push_back({i, t});
    }
  }
  out.samples.resize(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const auto [gi, trial] = tasks[k];
    const DimensionEstimate& est = out.estimates[gi];
    DeltaSample s;
    if (est.gated) {
      s.diameter = est.diameter_used;
      s.graph_gated = true;
    } else {
      s = delta_dimension(graphs[gi], est, radius, trial_seed(seed, gi, trial), options);
    }
    s.graph_id = gi;
    s.trial = trial;
    out.samples[k] = s;
  });
  out.usable = static_cast<std::size_t>(
      std::count_if(out.samples.begin(), out.samples.end(), [](const DeltaSample& s) { return s.usable(); }));
  if (out.usable == 0) out.warning = "no usable samples: every graph or renormalisation was gated";
  return out;
}

inline DeltaCollection collect_delta(const GraphCollection& collection, std::size_t radius, std::size_t trials,
                                     std::uint64_t seed, unsigned threads = 1,
                                     const BoxCountOptions& options = {}) {
  return collect_delta(std::span<const Graph>(collection.graphs), radius, trials, seed, threads, options);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct PearsonResult {
  double r = 0.0;
  double p_value = 1.0;
};

// Two-tailed p-value from t = r sqrt((n-2)/(1-r^2)) against Student-t(n-2).
// A constant input has no defined correlation; it is reported as r=0, p=1.
inline PearsonResult pearson_correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw ArgumentError("pearson_correlation: length mismatch");
  if (n < 3) throw InsufficientDataError("pearson_correlation: need at least 3 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  PearsonResult out;
  if (!(sxx > 0.0) || !(syy > 0.0)) return out;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double one_minus = 1.0 - out.r * out.r;
  if (one_minus <= 0.0) {
    out.p_value = 0.0;
    return out;
  }
  const double dof = static_cast<double>(n - 2);
  const double t = std::abs(out.r) * std::sqrt(dof / one_minus);
  const boost::math::students_t dist(dof);
  out.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
  return out;
}

struct GaussianDiagnostics {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // n - 1 denominator
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  double corr = 0.0;
  double corr_p_value = 1.0;
};

inline constexpr std::size_t kMinDiagnosticSamples = 10;

inline std::vector<DeltaSample> usable_samples(std::span<const DeltaSample> samples) {
  std::vector<DeltaSample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out), [](const auto& s) { return s.usable(); });
  return out;
}

/// Moments of Delta, the regression dim_r = a + b dim_g, and corr(dim_g, Delta).
inline GaussianDiagnostics gaussian_diagnostics(std::span<const DeltaSample> samples) {
  const std::vector<DeltaSample> used = usable_samples(samples);
  if (used.size() < kMinDiagnosticSamples) {
    throw InsufficientDataError("gaussian_diagnostics: need at least " + std::to_string(kMinDiagnosticSamples) +
                                " usable samples, got " + std::to_string(used.size()));
  }
  std::vector<double> dim_g;
  std::vector<double> dim_r;
  std::vector<double> delta;
  for (const auto& s : used) {
    dim_g.push_back(s.dim_g);
    dim_r.push_back(s.dim_r);
    delta.push_back(s.delta);
  }
  GaussianDiagnostics d;
  d.n = used.size();
  for (double v : delta) d.mean += v;
  d.mean /= static_cast<double>(d.n);
  double ss = 0.0;
  for (double v : delta) ss += (v - d.mean) * (v - d.mean);
  d.std = std::sqrt(ss / static_cast<double>(d.n - 1));

  LinearFit fit;
  try {
    fit = ordinary_least_squares(dim_g, dim_r);
  } catch (const ArgumentError&) {
    throw NumericError("gaussian_diagnostics: dim_g has zero variance, regression is degenerate");
  }
  d.intercept = fit.intercept;
  d.slope = fit.slope;
  d.r_squared = fit.r_squared;

  const PearsonResult corr = pearson_correlation(dim_g, delta);
  d.corr = corr.r;
  d.corr_p_value = corr.p_value;
  return d;
}

// ---------------------------------------------------------------------------
// Variance versus diameter
// ---------------------------------------------------------------------------

struct VarianceBucket {
  Distance diameter_lo = 0;
  Distance diameter_hi = 0;
  double diameter_mid = 0.0;  // geometric mean of lo and hi
  std::size_t n = 0;
  double empirical_variance = 0.0;
  double kappa_squared = 0.0;
  double ratio = 0.0;  // empirical / predicted
};

struct VarianceScaling {
  std::vector<VarianceBucket> buckets;
  bool monotone_decreasing = false;
};

struct VarianceScalingOptions {
  std::size_t min_bucket_samples = 30;
  std::size_t min_buckets = 3;
  double bins_per_octave = 2.0;
};

/// Log-spaced diameter buckets, merged from the small end until each holds
/// at least min_bucket_samples; a short tail joins the last bucket.
inline VarianceScaling variance_scaling_check(std::span<const DeltaSample> samples, double sigma,
                                              const VarianceScalingOptions& opts = {}) {
  std::vector<DeltaSample> used = usable_samples(samples);
  std::stable_sort(used.begin(), used.end(),
                   [](const auto& a, const auto& b) { return a.diameter < b.diameter; });
  auto bin_of = [&](Distance d) {
    return static_cast<long>(std::floor(opts.bins_per_octave * std::log2(std::max<double>(d, 1.0))));
  };

  std::vector<std::vector<const DeltaSample*>> groups;
  std::vector<const DeltaSample*> current;
  for (std::size_t i = 0; i < used.size(); ++i) {
    current.push_back(&used[i]);
    const bool bin_ends = i + 1 == used.size() || bin_of(used[i + 1].diameter) != bin_of(used[i].diameter);
    if (bin_ends && current.size() >= opts.min_bucket_samples) {
      groups.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) {
    if (!groups.empty()) {
      groups.back().insert(groups.back().end(), current.begin(), current.end());
    } else {
      groups.push_back(std::move(current));
    }
  }

  auto coverage_error = [&] {
    std::string counts;
    for (const auto& g : groups) {
      counts += (counts.empty() ? "" : ", ") + std::to_string(g.front()->diameter) + "-" +
                std::to_string(g.back()->diameter) + ":" + std::to_string(g.size());
    }
    return InsufficientDataError("variance_scaling_check: need " + std::to_string(opts.min_buckets) +
                                 " diameter buckets of >= " + std::to_string(opts.min_bucket_samples) +
                                 " samples; have [" + counts + "]");
  };
  if (groups.size() < opts.min_buckets) throw coverage_error();
  for (const auto& g : groups) {
    if (g.size() < opts.min_bucket_samples || g.size() < 2) throw coverage_error();
  }

  VarianceScaling out;
  for (const auto& g : groups) {
    VarianceBucket b;
    b.diameter_lo = g.front()->diameter;
    b.diameter_hi = g.back()->diameter;
    b.diameter_mid = std::sqrt(static_cast<double>(b.diameter_lo) * static_cast<double>(b.diameter_hi));
    b.n = g.size();
    double mean = 0.0;
    for (const auto* s : g) mean += s->delta;
    mean /= static_cast<double>(b.n);
    double ss = 0.0;
    for (const auto* s : g) ss += (s->delta - mean) * (s->delta - mean);
    b.empirical_variance = ss / static_cast<double>(b.n - 1);
    b.kappa_squared = kappa_squared(b.diameter_mid, sigma);
    b.ratio = b.empirical_variance / b.kappa_squared;
    out.buckets.push_back(b);
  }
  out.monotone_decreasing = true;
  for (std::size_t i = 1; i < out.buckets.size(); ++i) {
    if (!(out.buckets[i].empirical_variance < out.buckets[i - 1].empirical_variance)) {
      out.monotone_decreasing = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fractality prevalence
// ---------------------------------------------------------------------------

struct PrevalenceRow {
  double threshold = 0.0;
  std::size_t count = 0;
  double percent = 0.0;
};

inline const std::vector<double>& default_prevalence_thresholds() {
  static const std::vector<double> kThresholds{0.50, 0.80, 0.90, 0.95};
  return kThresholds;
}

// Number of graphs whose fitted R^2 strictly exceeds each threshold.
inline std::vector<PrevalenceRow> r2_prevalence(std::span<const DimensionEstimate> estimates,
                                                std::span<const double> thresholds) {
  if (estimates.empty()) throw ArgumentError("r2_prevalence: empty collection");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw ArgumentError("r2_prevalence: thresholds must be sorted ascending");
  }
  std::vector<PrevalenceRow> rows;
  for (double t : thresholds) {
    PrevalenceRow row;
    row.threshold = t;
    row.count = static_cast<std::size_t>(std::count_if(estimates.begin(), estimates.end(),
                                                       [t](const DimensionEstimate& e) { return e.r_squared > t; }));
    row.percent = 100.0 * static_cast<double>(row.count) / static_cast<double>(estimates.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fractalnet
