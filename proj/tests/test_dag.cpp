#include "dagnet/dag.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "dagnet/builders.hpp"
#include "dagnet/error.hpp"
#include "oracles.hpp"

namespace dagnet {
namespace {

TEST(Validate, TwoInputsOneOutputIsOk) {
  const Dag dag(3, {{0, 2}, {1, 2}});
  EXPECT_TRUE(validate(dag).ok());
  EXPECT_EQ(dag.input_set(), (std::vector<VertexId>{0, 1}));
  EXPECT_EQ(dag.output_set(), (std::vector<VertexId>{2}));
}

TEST(Validate, TwoCycleHasWitness) {
  const auto report = validate(Dag(2, {{0, 1}, {1, 0}}));
  ASSERT_TRUE(report.has(ViolationKind::cycle));
  const auto it = std::find_if(report.violations.begin(), report.violations.end(),
                               [](const Violation& v) { return v.kind == ViolationKind::cycle; });
  EXPECT_EQ(it->witness, (std::vector<VertexId>{0, 1, 0}));
}

TEST(Validate, CycleWitnessIsACycle) {
  const Dag dag(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 2}, {4, 5}});
  const auto report = validate(dag);
  ASSERT_TRUE(report.has(ViolationKind::cycle));
  for (const auto& v : report.violations) {
    if (v.kind != ViolationKind::cycle) continue;
    ASSERT_GE(v.witness.size(), 3u);
    EXPECT_EQ(v.witness.front(), v.witness.back());
    for (std::size_t i = 0; i + 1 < v.witness.size(); ++i) {
      const Edge e{v.witness[i], v.witness[i + 1]};
      EXPECT_NE(std::find(dag.edges().begin(), dag.edges().end(), e), dag.edges().end());
    }
  }
}

TEST(Validate, DuplicateEdge) {
  EXPECT_TRUE(validate(Dag(2, {{0, 1}, {0, 1}})).has(ViolationKind::duplicate_edge));
}

TEST(Validate, DanglingVertexId) {
  EXPECT_TRUE(validate(Dag(2, {{0, 5}})).has(ViolationKind::dangling_vertex));
}

TEST(Validate, EmptyInputSetFromFullCycle) {
  const auto r = validate(Dag(3, {{0, 1}, {1, 2}, {2, 0}}));
  EXPECT_TRUE(r.has(ViolationKind::empty_input_set));
  EXPECT_TRUE(r.has(ViolationKind::cycle));
}

TEST(Validate, EmptyGraphHasNoInputs) {
  const auto r = validate(Dag(0, {}));
  EXPECT_TRUE(r.has(ViolationKind::empty_input_set));
  EXPECT_TRUE(r.has(ViolationKind::empty_output_set));
}

TEST(Validate, OrphanBehindCycle) {
  // 2 and 3 form a cycle fed by nothing reachable from the input 0.
  const auto r = validate(Dag(4, {{0, 1}, {2, 3}, {3, 2}}));
  EXPECT_TRUE(r.has(ViolationKind::orphan));
}

TEST(Layers, LongestPathWins) {
  // Vertex 3 is reached by 0->3 (length 1) and 0->1->2->3 (length 3).
  const Dag dag(4, {{0, 3}, {0, 1}, {1, 2}, {2, 3}});
  EXPECT_EQ(assign_layers(dag).layer_of[3], 3u);
}

TEST(Layers, NoEdgesAllInputs) {
  const auto la = assign_layers(Dag(3, {}));
  EXPECT_EQ(la.depth, 0u);
  EXPECT_EQ(la.layer_members[0], (std::vector<VertexId>{0, 1, 2}));
}

TEST(Layers, Chain) {
  const auto la = assign_layers(Dag(4, {{0, 1}, {1, 2}, {2, 3}}));
  EXPECT_EQ(la.layer_of, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(la.depth, 3u);
}

TEST(Layers, RejectsCycle) {
  EXPECT_THROW(assign_layers(Dag(2, {{0, 1}, {1, 0}})), Error);
}

TEST(Layers, MembersAscending) {
  const auto la = assign_layers(Dag(5, {{4, 0}, {3, 0}, {4, 1}, {2, 1}}));
  EXPECT_EQ(la.layer_members[0], (std::vector<VertexId>{2, 3, 4}));
  EXPECT_EQ(la.layer_members[1], (std::vector<VertexId>{0, 1}));
}

TEST(Degree, FcnWidthIsSmallestHiddenLayer) {
  const std::vector<std::size_t> sizes{5, 8, 4, 1};
  const auto spec = build_fcn(sizes);
  const auto prof = degree_profile(spec.dag(), spec.layers());
  ASSERT_TRUE(prof.width);
  EXPECT_EQ(*prof.width, 4u);
}

TEST(Degree, DenseNetLayerTwo) {
  const std::vector<std::size_t> sizes{3, 5, 4};
  const auto spec = build_densenet(sizes);
  const auto prof = degree_profile(spec.dag(), spec.layers());
  EXPECT_EQ(prof.per_layer_min[2], 8u);
  EXPECT_EQ(prof.per_layer_max[2], 8u);
}

TEST(Degree, SingleEdgeWidthUndefined) {
  const Dag dag(2, {{0, 1}});
  const auto prof = degree_profile(dag, assign_layers(dag));
  EXPECT_FALSE(prof.width);
  EXPECT_FALSE(prof.poly_exponent);
}

TEST(Degree, PolyExponent) {
  // Layer-2 in-degrees 2 and 4: c = log 4 / log 2.
  const Dag dag(7, {{0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 4}, {3, 4}, {0, 5}, {1, 5},
                    {2, 5}, {3, 5}, {4, 6}, {5, 6}});
  const auto la = assign_layers(dag);
  const auto prof = degree_profile(dag, la);
  ASSERT_TRUE(prof.width);
  EXPECT_EQ(*prof.width, 2u);
  ASSERT_TRUE(prof.poly_exponent);
  EXPECT_NEAR(*prof.poly_exponent, 2.0, 1e-12);
}

TEST(Degree, WidthOneHasNoExponent) {
  const Dag dag(3, {{0, 1}, {1, 2}});
  const auto prof = degree_profile(dag, assign_layers(dag));
  ASSERT_TRUE(prof.width);
  EXPECT_EQ(*prof.width, 1u);
  EXPECT_FALSE(prof.poly_exponent);
}

TEST(LayerProperties, RandomGraphsMatchBruteForce) {
  SeededStream rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = oracle::uniform_int(rng, 1, 12);
    const Dag dag = oracle::random_dag(rng, n, rng.uniform());
    ASSERT_TRUE(validate(dag).ok());
    const auto la = assign_layers(dag);
    EXPECT_EQ(la.layer_of, oracle::brute_force_layers(dag));
    for (const auto& e : dag.edges()) EXPECT_GE(la.layer_of[e.dst], la.layer_of[e.src] + 1);
    const auto ins = dag.input_set();
    for (VertexId v = 0; v < n; ++v) {
      const bool input = std::find(ins.begin(), ins.end(), v) != ins.end();
      EXPECT_EQ(la.layer_of[v] == 0, input);
    }
    std::size_t covered = 0;
    for (const auto& m : la.layer_members) covered += m.size();
    EXPECT_EQ(covered, n);
  }
}

TEST(LayerProperties, EdgeOrderDoesNotMatter) {
  SeededStream rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Dag dag = oracle::random_dag(rng, 40 + rng.below(160), 0.1);
    auto edges = dag.edges();
    std::reverse(edges.begin(), edges.end());
    for (std::size_t i = edges.size(); i > 1; --i) std::swap(edges[i - 1], edges[rng.below(i)]);
    EXPECT_EQ(assign_layers(dag), assign_layers(Dag(dag.vertex_count(), edges)));
  }
}

TEST(LayerProperties, LargeGraphsRespectEdges) {
  SeededStream rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Dag dag = oracle::random_dag(rng, 200, 0.05);
    ASSERT_TRUE(validate(dag).ok());
    const auto la = assign_layers(dag);
    for (const auto& e : dag.edges()) EXPECT_GE(la.layer_of[e.dst], la.layer_of[e.src] + 1);
    // Some edge into each non-input vertex realizes p(v) = p(u) + 1.
    std::vector<bool> tight(dag.vertex_count(), false);
    for (const auto& e : dag.edges()) {
      if (la.layer_of[e.dst] == la.layer_of[e.src] + 1) tight[e.dst] = true;
    }
    for (VertexId v = 0; v < dag.vertex_count(); ++v) {
      if (la.layer_of[v] > 0) EXPECT_TRUE(tight[v]);
    }
  }
}

TEST(LayerProperties, WidthMatchesDirectMin) {
  SeededStream rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const Dag dag = oracle::random_dag(rng, 3 + rng.below(30), 0.3);
    const auto la = assign_layers(dag);
    const auto prof = degree_profile(dag, la);
    std::vector<std::size_t> indeg(dag.vertex_count(), 0);
    for (const auto& e : dag.edges()) ++indeg[e.dst];
    std::optional<std::size_t> m;
    for (VertexId v = 0; v < dag.vertex_count(); ++v) {
      if (la.layer_of[v] >= 2) m = std::min(m.value_or(indeg[v]), indeg[v]);
    }
    EXPECT_EQ(prof.width, m);
    for (std::size_t l = 0; l <= la.depth; ++l) {
      EXPECT_LE(prof.per_layer_min[l], prof.per_layer_max[l]);
    }
  }
}

}  // namespace
}  // namespace dagnet
