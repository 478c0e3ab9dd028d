#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "fractalnet/box_dim.hpp"
#include "fractalnet/errors.hpp"
#include "fractalnet/graph.hpp"

namespace fractalnet {

inline constexpr std::size_t kDefaultRenormRadius = 1;
inline constexpr std::string_view kRenormRngName = "mt19937_64";

struct RenormResult {
  Graph super_graph;
  std::vector<Vertex> assignment;  // vertex -> supervertex (block index)
  std::vector<Vertex> centres;     // centre of each block, in block order
  std::size_t radius = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// Fenwick tree over a 0/1 membership vector with k-th element lookup.
class RemainingSet {
 public:
  explicit RemainingSet(std::size_t n) : tree_(n + 1, 0), size_(n) {
    for (std::size_t i = 1; i <= n; ++i) {
      tree_[i] += 1;
      const std::size_t parent = i + (i & (~i + 1));
      if (parent <= n) tree_[parent] += tree_[i];
    }
    for (std::size_t step = 1; step <= n; step <<= 1) top_bit_ = step;
  }

  std::size_t size() const { return size_; }

  void erase(std::size_t index) {
    --size_;
    for (std::size_t i = index + 1; i < tree_.size(); i += i & (~i + 1)) --tree_[i];
  }

  // Index of the k-th (0-based) remaining element in ascending order.
  std::size_t kth(std::size_t k) const {
    std::size_t pos = 0;
    std::size_t rank = k + 1;
    for (std::size_t step = top_bit_; step > 0; step >>= 1) {
      if (pos + step < tree_.size() && tree_[pos + step] < rank) {
        pos += step;
        rank -= tree_[pos];
      }
    }
    return pos;
  }

 private:
  std::vector<std::size_t> tree_;
  std::size_t size_;
  std::size_t top_bit_ = 0;
};

}  // namespace detail

/// Random-centre renormalisation at radius r.
///
/// Repeatedly draws a centre uniformly from the uncovered vertices (index
/// = next mt19937_64 output mod count, over the ascending uncovered list),
/// collapses every uncovered vertex within d_G <= r of it into one
/// supervertex, and joins two supervertices iff a G-edge crosses them.
inline RenormResult renormalise(const Graph& g, std::size_t radius, std::uint64_t seed) {
  if (radius == 0) throw ArgumentError("renormalise: radius must be >= 1");
  if (g.empty()) throw ArgumentError("renormalise: empty graph");

  const std::size_t n = g.vertex_count();
  constexpr auto kUnassigned = std::numeric_limits<Vertex>::max();
  RenormResult out;
  out.radius = radius;
  out.seed = seed;
  out.assignment.assign(n, kUnassigned);

  std::mt19937_64 rng(seed);
  detail::RemainingSet remaining(n);
  std::vector<Distance> depth(n, kUnreachable);
  std::vector<Vertex> frontier;
  while (remaining.size() > 0) {
    const auto centre = static_cast<Vertex>(remaining.kth(rng() % remaining.size()));
    const auto block = static_cast<Vertex>(out.centres.size());
    out.centres.push_back(centre);

    frontier.assign(1, centre);
    depth[centre] = 0;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const Vertex x = frontier[head];
      if (depth[x] == radius) continue;
      for (Vertex y : g.neighbors(x)) {
        if (depth[y] != kUnreachable) continue;
        depth[y] = depth[x] + 1;
        frontier.push_back(y);
      }
    }
    for (Vertex x : frontier) {
      depth[x] = kUnreachable;
      if (out.assignment[x] == kUnassigned) {
        out.assignment[x] = block;
        remaining.erase(x);
      }
    }
  }

  std::vector<Edge> super_edges;
  for (const auto& [u, v] : g.edges()) {
    if (out.assignment[u] != out.assignment[v]) super_edges.emplace_back(out.assignment[u], out.assignment[v]);
  }
  out.super_graph = Graph::from_edges(out.centres.size(), super_edges);
  return out;
}

struct AugmentedView {
  Graph graph;  // G followed by R(G), no edges between the halves
  std::size_t original_size = 0;
  std::size_t renorm_size = 0;
  RenormResult renorm;
};

inline AugmentedView augment(const Graph& g, std::size_t radius, std::uint64_t seed) {
  RenormResult renorm = renormalise(g, radius, seed);
  AugmentedView view;
  view.graph = disjoint_union(g, renorm.super_graph);
  view.original_size = g.vertex_count();
  view.renorm_size = renorm.super_graph.vertex_count();
  view.renorm = std::move(renorm);
  return view;
}

// Per-graph record of the dimension change under one renormalisation.
struct DeltaSample {
  std::size_t graph_id = 0;
  std::size_t trial = 0;
  Distance diameter = 0;
  double dim_g = 0.0;
  double dim_r = 0.0;
  double delta = 0.0;  // dim_g - dim_r
  double r_squared_g = 0.0;
  double r_squared_r = 0.0;
  bool graph_gated = false;
  bool renorm_gated = false;

  bool usable() const { return !graph_gated && !renorm_gated; }
};

// Uses an already computed estimate for g, which must not be gated.
inline DeltaSample delta_dimension(const Graph& g, const DimensionEstimate& est_g, std::size_t radius,
                                   std::uint64_t seed, const BoxCountOptions& options = {}) {
  if (est_g.gated) {
    throw ArgumentError("delta_dimension: graph fails the diameter gate (diam=" +
                        std::to_string(est_g.diameter_used) + ")");
  }
  const RenormResult renorm = renormalise(g, radius, seed);
  const DimensionEstimate est_r = estimate_dimension(renorm.super_graph, options);
  DeltaSample s;
  s.diameter = est_g.diameter_used;
  s.dim_g = est_g.dimension;
  s.r_squared_g = est_g.r_squared;
  s.renorm_gated = est_r.gated;
  s.dim_r = est_r.dimension;
  s.r_squared_r = est_r.r_squared;
  s.delta = s.dim_g - s.dim_r;
  return s;
}

inline DeltaSample delta_dimension(const Graph& g, std::size_t radius, std::uint64_t seed,
                                   const BoxCountOptions& options = {}) {
  return delta_dimension(g, estimate_dimension(g, options), radius, seed, options);
}

}  // namespace fractalnet
