#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "fractalnet/errors.hpp"
#include "fractalnet/graph.hpp"
#include "fractalnet/regression.hpp"

namespace fractalnet {

inline constexpr Distance kDefaultDiameterGate = 9;
inline constexpr double kDefaultPilotSigma = 0.1;

// How B(v, r) is measured while the greedy cover runs.
enum class BallMetric {
  kGraphDistance,     // d_G on the full graph, members filtered to uncovered vertices
  kInducedRemaining,  // distances inside the subgraph induced by uncovered vertices
};

struct Box {
  Vertex centre = 0;
  std::optional<Vertex> partner;  // second centre of an odd-scale pair box
  std::vector<Vertex> members;    // ascending
};

struct BoxCovering {
  std::size_t scale = 0;
  std::vector<Box> boxes;
  std::size_t box_count() const { return boxes.size(); }
};

struct ScaleCount {
  std::size_t scale = 0;
  std::size_t box_count = 0;
  friend bool operator==(const ScaleCount&, const ScaleCount&) = default;
};

struct BoxCountOptions {
  BallMetric metric = BallMetric::kGraphDistance;
  bool keep_coverings = false;
  Distance diameter_gate = kDefaultDiameterGate;
  // Above this size balls are recomputed by BFS instead of held as bitsets
  // (the table costs 2 * n^2 bits).
  std::size_t bitset_vertex_limit = 16384;
};

struct BoxCountResult {
  Distance diameter = 0;
  bool gated = false;
  std::vector<ScaleCount> counts;
  std::vector<BoxCovering> coverings;  // filled when keep_coverings is set
};

namespace detail {

// Radius-r balls of every vertex as rows of a bit matrix, grown one radius
// step at a time: B_r(v) = B_{r-1}(v) united with B_{r-1}(u) for u ~ v.
class BallTable {
 public:
  explicit BallTable(const Graph& g)
      : graph_(&g), n_(g.vertex_count()), words_((n_ + 63) / 64), rows_(n_ * words_, 0) {
    for (std::size_t v = 0; v < n_; ++v) rows_[v * words_ + v / 64] |= std::uint64_t{1} << (v % 64);
  }

  std::size_t words() const { return words_; }
  std::size_t radius() const { return radius_; }
  std::span<const std::uint64_t> row(Vertex v) const { return {rows_.data() + v * words_, words_}; }

  void grow_to(std::size_t r) {
    while (radius_ < r) {
      ++radius_;
      if (saturated_) continue;
      scratch_.assign(rows_.begin(), rows_.end());
      bool changed = false;
      for (std::size_t v = 0; v < n_; ++v) {
        std::uint64_t* out = scratch_.data() + v * words_;
        for (Vertex u : graph_->neighbors(static_cast<Vertex>(v))) {
          const std::uint64_t* in = rows_.data() + std::size_t{u} * words_;
          for (std::size_t w = 0; w < words_; ++w) {
            const std::uint64_t merged = out[w] | in[w];
            changed |= merged != out[w];
            out[w] = merged;
          }
        }
      }
      rows_.swap(scratch_);
      if (!changed) saturated_ = true;
    }
  }

 private:
  const Graph* graph_;
  std::size_t n_;
  std::size_t words_;
  std::vector<std::uint64_t> rows_;
  std::vector<std::uint64_t> scratch_;
  std::size_t radius_ = 0;
  bool saturated_ = false;
};

inline void append_bits(std::span<const std::uint64_t> bits, std::vector<Vertex>& out) {
  for (std::size_t w = 0; w < bits.size(); ++w) {
    std::uint64_t word = bits[w];
    while (word) {
      out.push_back(static_cast<Vertex>(w * 64 + static_cast<std::size_t>(std::countr_zero(word))));
      word &= word - 1;
    }
  }
}

class BitsetEvaluator {
 public:
  explicit BitsetEvaluator(const BallTable& table, std::size_t n)
      : table_(&table), remaining_(table.words(), 0), remaining_count_(n) {
    for (std::size_t v = 0; v < n; ++v) remaining_[v / 64] |= std::uint64_t{1} << (v % 64);
  }

  std::size_t remaining_count() const { return remaining_count_; }
  bool remaining(Vertex v) const { return (remaining_[v / 64] >> (v % 64)) & 1u; }

  std::size_t ball_size(Vertex v) const {
    const auto row = table_->row(v);
    std::size_t count = 0;
    for (std::size_t w = 0; w < row.size(); ++w) count += std::popcount(row[w] & remaining_[w]);
    return count;
  }

  std::size_t pair_size(Vertex v, Vertex u) const {
    const auto a = table_->row(v);
    const auto b = table_->row(u);
    std::size_t count = 0;
    for (std::size_t w = 0; w < a.size(); ++w) count += std::popcount((a[w] | b[w]) & remaining_[w]);
    return count;
  }

  void take(Vertex v, std::optional<Vertex> partner, std::vector<Vertex>* members) {
    const auto a = table_->row(v);
    mask_.assign(a.begin(), a.end());
    if (partner) {
      const auto b = table_->row(*partner);
      for (std::size_t w = 0; w < mask_.size(); ++w) mask_[w] |= b[w];
    }
    for (std::size_t w = 0; w < mask_.size(); ++w) {
      mask_[w] &= remaining_[w];
      remaining_[w] &= ~mask_[w];
      remaining_count_ -= static_cast<std::size_t>(std::popcount(mask_[w]));
    }
    if (members) append_bits(mask_, *members);
  }

 private:
  const BallTable* table_;
  std::vector<std::uint64_t> remaining_;
  std::vector<std::uint64_t> mask_;
  std::size_t remaining_count_;
};

// Ball sizes by truncated multi-source BFS. Works for either metric.
class BfsEvaluator {
 public:
  BfsEvaluator(const Graph& g, std::size_t radius, BallMetric metric)
      : graph_(&g),
        radius_(radius),
        metric_(metric),
        remaining_(g.vertex_count(), 1),
        stamp_(g.vertex_count(), 0),
        remaining_count_(g.vertex_count()) {}

  std::size_t remaining_count() const { return remaining_count_; }
  bool remaining(Vertex v) const { return remaining_[v] != 0; }

  std::size_t ball_size(Vertex v) { return explore({v, v}, 1, nullptr); }
  std::size_t pair_size(Vertex v, Vertex u) { return explore({v, u}, 2, nullptr); }

  void take(Vertex v, std::optional<Vertex> partner, std::vector<Vertex>* members) {
    found_.clear();
    explore({v, partner.value_or(v)}, partner ? 2 : 1, &found_);
    for (Vertex x : found_) remaining_[x] = 0;
    remaining_count_ -= found_.size();
    if (members) {
      std::sort(found_.begin(), found_.end());
      members->insert(members->end(), found_.begin(), found_.end());
    }
  }

 private:
  std::size_t explore(std::array<Vertex, 2> sources, int source_count, std::vector<Vertex>* collect) {
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
    const bool induced = metric_ == BallMetric::kInducedRemaining;
    frontier_.clear();
    for (int s = 0; s < source_count; ++s) {
      const Vertex src = sources[static_cast<std::size_t>(s)];
      if (stamp_[src] == epoch_) continue;
      stamp_[src] = epoch_;
      frontier_.push_back(src);
    }
    std::size_t count = 0;
    std::size_t level_begin = 0;
    for (std::size_t depth = 0;; ++depth) {
      const std::size_t level_end = frontier_.size();
      for (std::size_t i = level_begin; i < level_end; ++i) {
        const Vertex x = frontier_[i];
        if (remaining_[x]) {
          ++count;
          if (collect) collect->push_back(x);
        }
        if (depth == radius_) continue;
        for (Vertex y : graph_->neighbors(x)) {
          if (stamp_[y] == epoch_) continue;
          if (induced && !remaining_[y]) continue;
          stamp_[y] = epoch_;
          frontier_.push_back(y);
        }
      }
      if (depth == radius_ || frontier_.size() == level_end) break;
      level_begin = level_end;
    }
    return count;
  }

  const Graph* graph_;
  std::size_t radius_;
  BallMetric metric_;
  std::vector<char> remaining_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<Vertex> frontier_;
  std::vector<Vertex> found_;
  std::size_t remaining_count_;
};

// Max-heap key: larger ball first, then lowest (centre, partner).
struct CandidateKey {
  std::size_t size;
  Vertex centre;
  Vertex partner;
  friend bool operator<(const CandidateKey& a, const CandidateKey& b) {
    if (a.size != b.size) return a.size < b.size;
    if (a.centre != b.centre) return a.centre > b.centre;
    return a.partner > b.partner;
  }
};

// Greedy cover at scale l. Ball sizes only shrink as vertices are covered,
// so stale heap keys are upper bounds: a popped key that still matches its
// recomputed size is the exact argmax under the tie-break order.
template <typename Evaluator>
std::size_t greedy_cover(const Graph& g, std::size_t scale, Evaluator& eval, BoxCovering* covering) {
  std::size_t box_count = 0;
  auto record = [&](Vertex centre, std::optional<Vertex> partner) {
    ++box_count;
    if (covering) {
      Box box{centre, partner, {}};
      eval.take(centre, partner, &box.members);
      covering->boxes.push_back(std::move(box));
    } else {
      eval.take(centre, partner, nullptr);
    }
  };

  if (scale % 2 == 1) {
    std::vector<CandidateKey> initial;
    initial.reserve(g.edge_count());
    for (const auto& [u, w] : g.edges()) initial.push_back({eval.pair_size(u, w), u, w});
    std::priority_queue<CandidateKey> heap(std::less<CandidateKey>{}, std::move(initial));
    while (!heap.empty()) {
      const CandidateKey top = heap.top();
      heap.pop();
      if (!eval.remaining(top.centre) || !eval.remaining(top.partner)) continue;
      const std::size_t actual = eval.pair_size(top.centre, top.partner);
      if (actual != top.size) {
        heap.push({actual, top.centre, top.partner});
        continue;
      }
      record(top.centre, top.partner);
    }
    // No uncovered adjacent pair is left; finish with single centres.
  }

  if (eval.remaining_count() > 0) {
    std::vector<CandidateKey> initial;
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      if (eval.remaining(v)) initial.push_back({eval.ball_size(v), v, 0});
    }
    std::priority_queue<CandidateKey> heap(std::less<CandidateKey>{}, std::move(initial));
    while (eval.remaining_count() > 0) {
      const CandidateKey top = heap.top();
      heap.pop();
      if (!eval.remaining(top.centre)) continue;
      const std::size_t actual = eval.ball_size(top.centre);
      if (actual != top.size) {
        heap.push({actual, top.centre, 0});
        continue;
      }
      record(top.centre, std::nullopt);
    }
  }
  if (covering) covering->scale = scale;
  return box_count;
}

inline bool use_bitsets(const Graph& g, const BoxCountOptions& options) {
  return options.metric == BallMetric::kGraphDistance && g.vertex_count() <= options.bitset_vertex_limit;
}

}  // namespace detail

/// Greedy box covering of g at a single scale l >= 1, with no diameter gate.
/// Even l uses single centres of radius l/2; odd l uses adjacent centre pairs
/// of radius (l-1)/2, falling back to single centres once no uncovered
/// adjacent pair remains.
inline BoxCovering greedy_box_covering(const Graph& g, std::size_t scale,
                                       BallMetric metric = BallMetric::kGraphDistance) {
  if (scale == 0) throw ArgumentError("greedy_box_covering: scale must be >= 1");
  BoxCovering covering;
  const std::size_t radius = scale / 2;
  BoxCountOptions options;
  options.metric = metric;
  if (detail::use_bitsets(g, options)) {
    detail::BallTable table(g);
    table.grow_to(radius);
    detail::BitsetEvaluator eval(table, g.vertex_count());
    detail::greedy_cover(g, scale, eval, &covering);
  } else {
    detail::BfsEvaluator eval(g, radius, metric);
    detail::greedy_cover(g, scale, eval, &covering);
  }
  covering.scale = scale;
  return covering;
}

namespace detail {

inline BoxCountResult box_counts_with_diameter(const Graph& g, Distance diam, const BoxCountOptions& options) {
  BoxCountResult result;
  result.diameter = diam;
  if (diam <= options.diameter_gate) {
    result.gated = true;
    return result;
  }
  const std::size_t max_scale = diam / 2;
  std::optional<BallTable> table;
  if (use_bitsets(g, options)) table.emplace(g);
  for (std::size_t l = 1; l <= max_scale; ++l) {
    const std::size_t radius = l / 2;
    BoxCovering covering;
    BoxCovering* sink = options.keep_coverings ? &covering : nullptr;
    std::size_t count = 0;
    if (table) {
      table->grow_to(radius);
      BitsetEvaluator eval(*table, g.vertex_count());
      count = greedy_cover(g, l, eval, sink);
    } else {
      BfsEvaluator eval(g, radius, options.metric);
      count = greedy_cover(g, l, eval, sink);
    }
    result.counts.push_back({l, count});
    if (sink) {
      covering.scale = l;
      result.coverings.push_back(std::move(covering));
    }
  }
  return result;
}

}  // namespace detail

/// Box counts N_B(l) for l = 1..floor(diam/2) on a connected graph.
/// Graphs with diameter <= options.diameter_gate return gated with no counts.
inline BoxCountResult box_counts(const Graph& g, const BoxCountOptions& options = {}) {
  if (g.empty()) throw ArgumentError("box_counts: empty graph");
  if (components(g).component_count != 1) {
    throw ArgumentError("box_counts: graph is disconnected; pass its largest component");
  }
  return detail::box_counts_with_diameter(g, diameter(g).diameter, options);
}

struct DimensionEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double dimension = 0.0;  // -slope
  double r_squared = 0.0;
  double residual_variance = 0.0;
  double sxx = 0.0;
  std::vector<ScaleCount> counts;
  Distance diameter_used = 0;
  std::size_t vertex_count = 0;     // of the component that was measured
  bool on_largest_component = false;
  bool gated = false;
};

inline DimensionEstimate fit_box_dimension(std::span<const ScaleCount> counts) {
  if (counts.size() < 3) {
    throw InsufficientDataError("fit_box_dimension: need at least 3 scales, got " +
                                std::to_string(counts.size()));
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& c : counts) {
    if (c.scale == 0) throw ArgumentError("fit_box_dimension: scale 0 is invalid");
    if (c.box_count == 0) {
      throw ArgumentError("fit_box_dimension: zero box count at scale " + std::to_string(c.scale));
    }
    x.push_back(std::log(static_cast<double>(c.scale)));
    y.push_back(std::log(static_cast<double>(c.box_count)));
  }
  const LinearFit fit = ordinary_least_squares(x, y);
  DimensionEstimate est;
  est.slope = fit.slope;
  est.intercept = fit.intercept;
  est.dimension = -fit.slope;
  est.r_squared = fit.r_squared;
  est.residual_variance = fit.residual_variance;
  est.sxx = fit.sxx;
  est.counts.assign(counts.begin(), counts.end());
  return est;
}

inline DimensionEstimate gated_estimate(Distance diam, std::size_t n, bool on_lcc) {
  DimensionEstimate est;
  est.gated = true;
  est.diameter_used = diam;
  est.vertex_count = n;
  est.on_largest_component = on_lcc;
  return est;
}

/// Box dimension of g (its largest component, if disconnected).
inline DimensionEstimate estimate_dimension(const Graph& g, const BoxCountOptions& options = {}) {
  if (g.empty()) throw ArgumentError("estimate_dimension: empty graph");
  const LargestComponent lcc = largest_component(g);
  const Distance diam = diameter(lcc.graph).diameter;
  if (diam <= options.diameter_gate) {
    return gated_estimate(diam, lcc.graph.vertex_count(), lcc.was_disconnected);
  }
  BoxCountOptions inner = options;
  inner.keep_coverings = false;
  const BoxCountResult counts = detail::box_counts_with_diameter(lcc.graph, diam, inner);
  DimensionEstimate est = fit_box_dimension(counts.counts);
  est.diameter_used = diam;
  est.vertex_count = lcc.graph.vertex_count();
  est.on_largest_component = lcc.was_disconnected;
  return est;
}

// Diameter-controlled variance 6 sigma^2 / (D (ln D)^2).
inline double kappa_squared(double diam, double sigma) {
  if (!(diam >= 2.0)) throw ArgumentError("kappa_squared: diameter must be >= 2");
  if (!(sigma > 0.0)) throw ArgumentError("kappa_squared: sigma must be > 0");
  const double log_d = std::log(diam);
  return 6.0 * sigma * sigma / (diam * log_d * log_d);
}

// SE of the fitted slope, sigma / sqrt(S_xx).
inline double slope_standard_error(const DimensionEstimate& est) {
  if (est.gated || est.counts.size() < 3) {
    throw ArgumentError("slope_standard_error: estimate has fewer than 3 fitted scales");
  }
  if (!(est.sxx > 0.0)) throw ArgumentError("slope_standard_error: degenerate scale design");
  return std::sqrt(est.residual_variance / est.sxx);
}

// Large-diameter equivalent 2 sqrt(6) sigma / (sqrt(D) ln D).
inline double asymptotic_slope_standard_error(double diam, double sigma) {
  if (!(diam > 1.0)) throw ArgumentError("asymptotic_slope_standard_error: diameter must be > 1");
  return 2.0 * std::sqrt(6.0) * sigma / (std::sqrt(diam) * std::log(diam));
}

}  // namespace fractalnet
