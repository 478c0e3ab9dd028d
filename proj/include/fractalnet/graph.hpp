#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fractalnet/errors.hpp"
#include "fractalnet/parallel.hpp"

namespace fractalnet {

using Vertex = std::uint32_t;
using Distance = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

inline constexpr Distance kUnreachable = std::numeric_limits<Distance>::max();

// Counters for input cleanup performed while building a simple graph.
struct EdgeImportStats {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;

  EdgeImportStats& operator+=(const EdgeImportStats& other) {
    self_loops_dropped += other.self_loops_dropped;
    duplicates_dropped += other.duplicates_dropped;
    return *this;
  }
};

/// Immutable simple undirected graph in compressed adjacency form.
///
/// Neighbor lists are sorted and free of self-loops and duplicates; the edge
/// relation is symmetric. Vertex ids are dense in [0, vertex_count()).
class Graph {
 public:
  Graph() : offsets_{0} {}

  // Builds a graph from an arbitrary edge list. Self-loops and repeated
  // edges (in either orientation) are dropped and tallied into `stats`.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges,
                          EdgeImportStats* stats = nullptr) {
    if (n > std::numeric_limits<Vertex>::max() - 1) {
      throw ArgumentError("graph too large for 32-bit vertex ids");
    }
    std::vector<Edge> canon;
    canon.reserve(edges.size());
    EdgeImportStats local;
    for (const auto& [u, v] : edges) {
      if (u >= n || v >= n) {
        throw ArgumentError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") references a vertex >= n=" + std::to_string(n));
      }
      if (u == v) {
        ++local.self_loops_dropped;
        continue;
      }
      canon.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(canon.begin(), canon.end());
    const auto unique_end = std::unique(canon.begin(), canon.end());
    local.duplicates_dropped = static_cast<std::size_t>(canon.end() - unique_end);
    canon.erase(unique_end, canon.end());
    if (stats) *stats += local;

    Graph g;
    g.offsets_.assign(n + 1, 0);
    for (const auto& [u, v] : canon) {
      ++g.offsets_[u + 1];
      ++g.offsets_[v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.neighbors_.resize(g.offsets_[n]);
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : canon) {
      g.neighbors_[cursor[u]++] = v;
      g.neighbors_[cursor[v]++] = u;
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
                g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
    }
    g.edge_count_ = canon.size();
    return g;
  }

  static Graph from_edges(std::size_t n, std::initializer_list<Edge> edges) {
    return from_edges(n, std::span<const Edge>(edges.begin(), edges.size()));
  }

  std::size_t vertex_count() const { return offsets_.size() - 1; }
  std::size_t edge_count() const { return edge_count_; }
  bool empty() const { return vertex_count() == 0; }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {neighbors_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }

  bool has_edge(Vertex u, Vertex v) const {
    const auto adj = neighbors(u);
    return std::binary_search(adj.begin(), adj.end(), v);
  }

  // Canonical edge list: u < v, lexicographically sorted.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (Vertex u = 0; u < vertex_count(); ++u) {
      for (Vertex v : neighbors(u)) {
        if (u < v) out.emplace_back(u, v);
      }
    }
    return out;
  }

  std::vector<std::size_t> degree_sequence() const {
    std::vector<std::size_t> out(vertex_count());
    for (Vertex v = 0; v < vertex_count(); ++v) out[v] = degree(v);
    return out;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Vertex> neighbors_;
  std::size_t edge_count_ = 0;
};

struct GraphCollection {
  std::string name;
  std::vector<Graph> graphs;
  std::optional<std::vector<long long>> labels;
  EdgeImportStats import_stats;

  std::size_t size() const { return graphs.size(); }
};

struct ComponentInfo {
  std::vector<std::uint32_t> component_id;
  std::size_t component_count = 0;
  std::vector<Vertex> largest_component_vertices;  // ascending
};

inline std::vector<Distance> bfs_distances(const Graph& g, Vertex source) {
  if (source >= g.vertex_count()) {
    throw ArgumentError("bfs source " + std::to_string(source) + " out of range (n=" +
                        std::to_string(g.vertex_count()) + ")");
  }
  std::vector<Distance> dist(g.vertex_count(), kUnreachable);
  std::vector<Vertex> frontier{source};
  dist[source] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const Vertex u = frontier[head];
    for (Vertex w : g.neighbors(u)) {
      if (dist[w] == kUnreachable) {
        dist[w] = dist[u] + 1;
        frontier.push_back(w);
      }
    }
  }
  return dist;
}

// Components are numbered in order of their smallest vertex. The largest
// component is the one with most vertices; ties go to the lowest id.
inline ComponentInfo components(const Graph& g) {
  ComponentInfo info;
  const std::size_t n = g.vertex_count();
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  info.component_id.assign(n, kUnset);
  std::vector<std::size_t> sizes;
  std::vector<Vertex> queue;
  for (Vertex s = 0; s < n; ++s) {
    if (info.component_id[s] != kUnset) continue;
    const auto id = static_cast<std::uint32_t>(sizes.size());
    queue.assign(1, s);
    info.component_id[s] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (Vertex w : g.neighbors(queue[head])) {
        if (info.component_id[w] == kUnset) {
          info.component_id[w] = id;
          queue.push_back(w);
        }
      }
    }
    sizes.push_back(queue.size());
  }
  info.component_count = sizes.size();
  if (!sizes.empty()) {
    const auto largest = static_cast<std::uint32_t>(
        std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    info.largest_component_vertices.reserve(sizes[largest]);
    for (Vertex v = 0; v < n; ++v) {
      if (info.component_id[v] == largest) info.largest_component_vertices.push_back(v);
    }
  }
  return info;
}

/// Subgraph induced by `vertices` (ascending, unique), relabelled 0..k-1 in
/// the given order.
inline Graph induced_subgraph(const Graph& g, std::span<const Vertex> vertices) {
  constexpr auto kAbsent = std::numeric_limits<Vertex>::max();
  std::vector<Vertex> remap(g.vertex_count(), kAbsent);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i] >= g.vertex_count()) throw ArgumentError("induced_subgraph: vertex out of range");
    remap[vertices[i]] = static_cast<Vertex>(i);
  }
  std::vector<Edge> edges;
  for (Vertex u : vertices) {
    for (Vertex w : g.neighbors(u)) {
      if (u < w && remap[w] != kAbsent) edges.emplace_back(remap[u], remap[w]);
    }
  }
  return Graph::from_edges(vertices.size(), edges);
}

// Largest connected component as a standalone graph, plus a flag telling
// whether anything was cut away.
struct LargestComponent {
  Graph graph;
  std::vector<Vertex> original_ids;
  bool was_disconnected = false;
};

inline LargestComponent largest_component(const Graph& g) {
  ComponentInfo info = components(g);
  if (info.component_count <= 1) {
    std::vector<Vertex> ids(g.vertex_count());
    for (Vertex v = 0; v < ids.size(); ++v) ids[v] = v;
    return {g, std::move(ids), false};
  }
  Graph sub = induced_subgraph(g, info.largest_component_vertices);
  return {std::move(sub), std::move(info.largest_component_vertices), true};
}

struct DiameterResult {
  Distance diameter = 0;
  bool on_largest_component = false;  // true iff the input was disconnected
};

// Exact diameter of the largest connected component by all-sources BFS.
inline DiameterResult diameter(const Graph& g, unsigned threads = 1) {
  if (g.empty()) throw ArgumentError("diameter of an empty graph is undefined");
  const LargestComponent lcc = largest_component(g);
  const Graph& h = lcc.graph;
  std::vector<Distance> eccentricity(h.vertex_count(), 0);
  parallel_for(h.vertex_count(), threads, [&](std::size_t s) {
    const auto dist = bfs_distances(h, static_cast<Vertex>(s));
    eccentricity[s] = *std::max_element(dist.begin(), dist.end());
  });
  return {*std::max_element(eccentricity.begin(), eccentricity.end()), lcc.was_disconnected};
}

// Vertices of g2 are shifted by g1.vertex_count(); no edges cross the halves.
inline Graph disjoint_union(const Graph& g1, const Graph& g2) {
  const auto offset = static_cast<Vertex>(g1.vertex_count());
  std::vector<Edge> edges = g1.edges();
  edges.reserve(g1.edge_count() + g2.edge_count());
  for (const auto& [u, v] : g2.edges()) edges.emplace_back(u + offset, v + offset);
  return Graph::from_edges(g1.vertex_count() + g2.vertex_count(), edges);
}

}  // namespace fractalnet
