#include <gtest/gtest.h>

#include "fractalnet/box_dim.hpp"
#include "fractalnet/generators.hpp"

namespace fractalnet {
namespace {

TEST(Generators, SizesOfStandardFamilies) {
  EXPECT_EQ(path_graph(5).vertex_count(), 5u);
  EXPECT_EQ(path_graph(5).edge_count(), 4u);
  EXPECT_EQ(grid_graph(3, 3).vertex_count(), 9u);
  EXPECT_EQ(grid_graph(3, 3).edge_count(), 12u);
  EXPECT_EQ(balanced_tree(2, 3).vertex_count(), 15u);
  EXPECT_EQ(balanced_tree(2, 3).edge_count(), 14u);
  EXPECT_EQ(cycle_graph(7).edge_count(), 7u);
  EXPECT_EQ(complete_graph(6).edge_count(), 15u);
  EXPECT_EQ(star_graph(5).edge_count(), 4u);
}

TEST(Generators, GridUsesFourNeighbourhood) {
  const Graph g = grid_graph(4, 3);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(0, 4));
  EXPECT_FALSE(g.has_edge(0, 5));
  EXPECT_EQ(diameter(g).diameter, 5u);
}

TEST(Generators, RejectsDisallowedSizes) {
  EXPECT_THROW(path_graph(0), ArgumentError);
  EXPECT_THROW(cycle_graph(2), ArgumentError);
  EXPECT_THROW(grid_graph(0, 3), ArgumentError);
  EXPECT_THROW(complete_graph(0), ArgumentError);
  EXPECT_THROW(balanced_tree(0, 2), ArgumentError);
}

TEST(Igs, ZeroIterationsIsTheSeedEdge) {
  const IgsGraph g = igs_iterate(h_motif(), 0);
  EXPECT_EQ(g.graph, path_graph(2));
  EXPECT_EQ(g.iteration, 0u);
}

TEST(Igs, EdgeCountRecurrence) {
  for (const MotifSpec& spec : {h_motif(), MotifSpec{path_graph(3), 0, 2},
                                MotifSpec{Graph::from_edges(4, {{0, 1}, {1, 2}, {1, 3}}), 0, 2}}) {
    const std::size_t e = spec.motif.edge_count();
    std::size_t expected = 1;
    for (std::size_t k = 0; k <= 4; ++k) {
      const IgsGraph g = igs_iterate(spec, k);
      EXPECT_EQ(g.graph.edge_count(), expected) << "k=" << k;
      EXPECT_EQ(components(g.graph).component_count, 1u) << "k=" << k;
      expected *= e;
    }
  }
}

TEST(Igs, SubdividedPathIsAPath) {
  const IgsGraph g = igs_iterate({path_graph(3), 0, 2}, 3);
  EXPECT_EQ(g.graph.vertex_count(), 9u);
  EXPECT_EQ(g.graph.edge_count(), 8u);
  EXPECT_EQ(diameter(g.graph).diameter, 8u);
  for (Vertex v = 0; v < 9; ++v) EXPECT_LE(g.graph.degree(v), 2u);
}

TEST(Igs, BoxDimensionOfSubdividedPathMatchesPlainPath) {
  // Same graph up to relabelling; greedy tie-breaks follow ids, so the two
  // estimates agree only approximately.
  const IgsGraph g = igs_iterate({path_graph(3), 0, 2}, 9);
  const DimensionEstimate a = estimate_dimension(g.graph);
  const DimensionEstimate b = estimate_dimension(path_graph(513));
  EXPECT_EQ(a.diameter_used, b.diameter_used);
  EXPECT_NEAR(a.dimension, b.dimension, 0.1);
  EXPECT_NEAR(a.dimension, 1.0, 0.15);
  EXPECT_NEAR(b.dimension, 1.0, 0.15);
}

TEST(Igs, DiameterStrictlyIncreases) {
  const MotifSpec y_motif{Graph::from_edges(4, {{0, 1}, {1, 2}, {1, 3}}), 0, 2};
  for (const MotifSpec& spec : {MotifSpec{path_graph(3), 0, 2}, y_motif, h_motif()}) {
    Distance prev = 0;
    for (std::size_t k = 0; k <= 4; ++k) {
      const Distance d = diameter(igs_iterate(spec, k).graph).diameter;
      EXPECT_GT(d, prev) << "k=" << k;
      prev = d;
    }
  }
}

TEST(Igs, DefaultMotifDiameters) {
  const Distance expected[] = {1, 3, 9, 27, 81};
  for (std::size_t k = 0; k < 5; ++k) {
    const IgsGraph g = igs_iterate(h_motif(), k);
    EXPECT_EQ(diameter(g.graph).diameter, expected[k]);
  }
}

TEST(Igs, NumberingIsDeterministic) {
  const IgsGraph g = igs_iterate(h_motif(), 1);
  EXPECT_EQ(g.graph.edges(), (std::vector<Edge>{{0, 2}, {1, 3}, {2, 3}, {2, 4}, {3, 5}}));
}

TEST(Igs, RejectsBadMotifs) {
  EXPECT_THROW(igs_iterate({Graph::from_edges(4, {{0, 1}, {2, 3}}), 0, 3}, 1), ArgumentError);
  EXPECT_THROW(igs_iterate({path_graph(3), 1, 1}, 1), ArgumentError);
  EXPECT_THROW(igs_iterate({path_graph(3), 0, 5}, 1), ArgumentError);
}

}  // namespace
}  // namespace fractalnet
