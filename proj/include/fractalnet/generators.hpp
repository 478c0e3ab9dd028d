#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fractalnet/errors.hpp"
#include "fractalnet/graph.hpp"

namespace fractalnet {

inline Graph empty_graph(std::size_t n) { return Graph::from_edges(n, {}); }

inline Graph path_graph(std::size_t n) {
  if (n == 0) throw ArgumentError("path_graph: n must be >= 1");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph::from_edges(n, edges);
}

inline Graph cycle_graph(std::size_t n) {
  if (n < 3) throw ArgumentError("cycle_graph: n must be >= 3");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, edges);
}

// w x h lattice, 4-neighborhood, vertex id = row * w + col.
inline Graph grid_graph(std::size_t w, std::size_t h) {
  if (w == 0 || h == 0) throw ArgumentError("grid_graph: sides must be >= 1");
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t v = r * w + c;
      if (c + 1 < w) edges.emplace_back(v, v + 1);
      if (r + 1 < h) edges.emplace_back(v, v + w);
    }
  }
  return Graph::from_edges(w * h, edges);
}

inline Graph complete_graph(std::size_t n) {
  if (n == 0) throw ArgumentError("complete_graph: n must be >= 1");
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  }
  return Graph::from_edges(n, edges);
}

// Centre 0 joined to leaves 1..n-1.
inline Graph star_graph(std::size_t n) {
  if (n == 0) throw ArgumentError("star_graph: n must be >= 1");
  std::vector<Edge> edges;
  for (std::size_t v = 1; v < n; ++v) edges.emplace_back(0, v);
  return Graph::from_edges(n, edges);
}

// Complete `branching`-ary tree of the given depth, breadth-first ids.
inline Graph balanced_tree(std::size_t branching, std::size_t depth) {
  if (branching == 0) throw ArgumentError("balanced_tree: branching must be >= 1");
  std::size_t n = 1;
  std::size_t level = 1;
  for (std::size_t d = 0; d < depth; ++d) {
    level *= branching;
    n += level;
  }
  std::vector<Edge> edges;
  for (std::size_t child = 1; child < n; ++child) edges.emplace_back((child - 1) / branching, child);
  return Graph::from_edges(n, edges);
}

// ---------------------------------------------------------------------------
// Iterated graph systems: every edge is repeatedly replaced by a motif copy.
// ---------------------------------------------------------------------------

struct MotifSpec {
  Graph motif;
  Vertex anchor_a = 0;
  Vertex anchor_b = 1;
};

inline void validate_motif(const MotifSpec& spec) {
  const std::size_t n = spec.motif.vertex_count();
  if (spec.anchor_a >= n || spec.anchor_b >= n) throw ArgumentError("motif anchors out of range");
  if (spec.anchor_a == spec.anchor_b) throw ArgumentError("motif anchors must differ");
  if (components(spec.motif).component_count != 1) throw ArgumentError("motif must be connected");
}

// Path a-x-y-b with pendant leaves x-p and y-q; anchors a=0, b=3.
inline MotifSpec h_motif() {
  return {Graph::from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {1, 4}, {2, 5}}), 0, 3};
}

struct IgsGraph {
  Graph graph;
  std::size_t iteration = 0;
  MotifSpec motif;
};

/// Applies the edge-substitution rule `k` times to a single seed edge.
///
/// Edges of the current graph are processed in canonical order; for edge
/// (u, v) with u < v the motif's anchor_a maps to u, anchor_b to v, and the
/// remaining motif vertices receive fresh ids in ascending motif order.
inline IgsGraph igs_iterate(const MotifSpec& spec, std::size_t k) {
  validate_motif(spec);
  const std::size_t motif_n = spec.motif.vertex_count();
  const auto motif_edges = spec.motif.edges();

  Graph current = Graph::from_edges(2, {{0, 1}});
  std::vector<Vertex> map(motif_n);
  for (std::size_t it = 0; it < k; ++it) {
    const auto old_edges = current.edges();
    std::size_t next_id = current.vertex_count();
    std::vector<Edge> new_edges;
    new_edges.reserve(old_edges.size() * motif_edges.size());
    for (const auto& [u, v] : old_edges) {
      for (Vertex m = 0; m < motif_n; ++m) {
        if (m == spec.anchor_a) {
          map[m] = u;
        } else if (m == spec.anchor_b) {
          map[m] = v;
        } else {
          map[m] = static_cast<Vertex>(next_id++);
        }
      }
      for (const auto& [a, b] : motif_edges) new_edges.emplace_back(map[a], map[b]);
    }
    current = Graph::from_edges(next_id, new_edges);
  }
  return {std::move(current), k, spec};
}

}  // namespace fractalnet
