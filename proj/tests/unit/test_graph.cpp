#include "marsupial/graph.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace marsupial;

TEST(Graph, EdgesAreUndirectedAndEuclidean) {
  ExplorationGraph g;
  const int a = g.add_vertex(Pose(0, 0, 0, 0));
  const int b = g.add_vertex(Pose(3, 4, 0, 0));
  g.add_edge(a, b);
  g.add_edge(b, a);
  g.add_edge(a, a);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_TRUE(g.has_edge(b, a));
  EXPECT_DOUBLE_EQ(g.neighbors(a)[0].weight, 5.0);
}

TEST(Graph, NearestAndWithin) {
  ExplorationGraph g;
  g.add_vertex(Pose(1, 0, 0, 0));
  g.add_vertex(Pose(-1, 0, 0, 0));
  g.add_vertex(Pose(0, 3, 0, 0));
  EXPECT_EQ(g.nearest(Vec3::Zero()), 0);  // tie goes to the smaller id
  EXPECT_EQ(g.within(Vec3(0, 0.1, 0), 1.5), (std::vector<int>{0, 1}));
  EXPECT_EQ(ExplorationGraph().nearest(Vec3::Zero()), -1);
}

TEST(Graph, ComponentOfRenumbersInOrder) {
  ExplorationGraph g;
  for (int i = 0; i < 5; ++i) g.add_vertex(Pose(i, 0, 0, 0));
  g.add_edge(0, 3);
  g.add_edge(3, 4);
  g.add_edge(1, 2);
  g.vertex(4).frontier = true;
  const auto c = g.component_of(3);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.vertex(2).pose.position.x(), 4.0);
  EXPECT_TRUE(c.vertex(2).frontier);
  EXPECT_TRUE(c.has_edge(0, 1));
  EXPECT_TRUE(c.has_edge(1, 2));
}

TEST(Graph, ShortestPathMatchesEnumeration) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = oracle::random_graph(rng, 10, 0.35);
    const int s = static_cast<int>(rng.below(g.size()));
    const int t = static_cast<int>(rng.below(g.size()));
    std::vector<int> best;
    const double expect = oracle::enumerate_shortest(g, s, t, &best);
    if (s == t) {
      const auto p = shortest_path(g, s, t);
      EXPECT_TRUE(p.ids.empty());
      EXPECT_EQ(p.length, 0.0);
    } else if (!std::isfinite(expect)) {
      EXPECT_THROW(shortest_path(g, s, t), DisconnectedError);
    } else {
      const auto p = shortest_path(g, s, t);
      EXPECT_EQ(p.length, expect) << "trial " << trial;
      EXPECT_EQ(p.ids, best) << "trial " << trial;
      ASSERT_EQ(p.poses.size(), p.ids.size());
      for (std::size_t i = 1; i < p.ids.size(); ++i) EXPECT_TRUE(g.has_edge(p.ids[i - 1], p.ids[i]));
    }
  }
}

TEST(Graph, TieBreakPrefersLexicographicallySmallestPath) {
  // Square 0-1-3 and 0-2-3 with equal sides.
  ExplorationGraph g;
  g.add_vertex(Pose(0, 0, 0, 0));
  g.add_vertex(Pose(1, 0, 0, 0));
  g.add_vertex(Pose(0, 1, 0, 0));
  g.add_vertex(Pose(1, 1, 0, 0));
  g.add_edge(0, 2);
  g.add_edge(2, 3);
  g.add_edge(0, 1);
  g.add_edge(1, 3);
  EXPECT_EQ(shortest_path(g, 0, 3).ids, (std::vector<int>{0, 1, 3}));
  EXPECT_EQ(shortest_path(g, 3, 0).ids, (std::vector<int>{3, 1, 0}));
}

TEST(Graph, OutOfRangeIdsThrow) {
  ExplorationGraph g;
  g.add_vertex(Pose());
  EXPECT_THROW(shortest_path(g, 0, 1), std::out_of_range);
}

TEST(Graph, ExportImportRoundTrip) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = oracle::random_graph(rng, 12, 0.4);
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto& v = g.vertex(static_cast<int>(i));
      v.gain = VolumetricGain::from_count(static_cast<std::int64_t>(rng.below(500)), 0.2);
      v.frontier = rng.below(2);
    }
    g.vertex(0).home = true;
    const std::string text = export_graph(g);
    const auto back = import_graph(text, GraphKind::GlobalGround, 0.2);
    ASSERT_EQ(back.size(), g.size());
    EXPECT_EQ(back.edge_count(), g.edge_count());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto& a = g.vertex(static_cast<int>(i));
      const auto& b = back.vertex(static_cast<int>(i));
      EXPECT_EQ(a.pose.position, b.pose.position);
      EXPECT_EQ(a.gain.unknown_voxels, b.gain.unknown_voxels);
      EXPECT_EQ(a.gain.volume, b.gain.volume);
      EXPECT_EQ(a.frontier, b.frontier);
      EXPECT_EQ(a.home, b.home);
      for (const auto& e : g.neighbors(a.id)) EXPECT_TRUE(back.has_edge(a.id, e.to));
    }
    EXPECT_EQ(export_graph(back), text);
  }
}

TEST(Graph, ImportRejectsMalformedText) {
  EXPECT_THROW(import_graph("V 1 0 0 0 0 -\n", GraphKind::GlobalGround), std::invalid_argument);
  EXPECT_THROW(import_graph("V 0 0 0 0 0 -\nE 0 5 1\n", GraphKind::GlobalGround), std::exception);
  EXPECT_THROW(import_graph("X\n", GraphKind::GlobalGround), std::invalid_argument);
}
