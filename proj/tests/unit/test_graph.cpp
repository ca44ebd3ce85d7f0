// Copyright 2026 The qmg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <json.hpp>
#include <numeric>

#include "dense.hpp"
#include "qmg/baselines.hpp"
#include "qmg/graph.hpp"

namespace qmg {
namespace {

CommutGraph complete(int n) {
  CommutGraph g(static_cast<std::size_t>(n), Scheme::FC, true);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
  return g;
}

CommutGraph triangle_with_pendant() { return CommutGraph::from_edges(4, {{0, 1}, {1, 2}, {0, 2}, {2, 3}}); }

QubitHamiltonian from_words(std::size_t n, const std::vector<std::string>& words) {
  QubitHamiltonian h;
  h.n_qubits = n;
  double c = 1.0;
  for (const auto& w : words) {
    h.terms.push_back({c, parse_word(w, n)});
    c *= 0.5;
  }
  return h;
}

TEST(Graph, EdgesMatchPairwiseCommutation) {
  const QubitHamiltonian h = load_hamiltonian(testing::fixture("h4_jw.ham"));
  for (Scheme s : {Scheme::FC, Scheme::QWC}) {
    const CommutGraph c = build_graph(h, s, false);
    const CommutGraph cc = build_graph(h, s, true);
    for (int i = 0; i < static_cast<int>(h.n_terms()); ++i) {
      EXPECT_FALSE(cc.has_edge(i, i));
      for (int j = 0; j < static_cast<int>(h.n_terms()); ++j) {
        if (i == j) continue;
        const bool com = commutes(h.terms[static_cast<std::size_t>(i)].word, h.terms[static_cast<std::size_t>(j)].word, s);
        ASSERT_EQ(c.has_edge(i, j), com);
        ASSERT_EQ(cc.has_edge(i, j), !com);
      }
    }
  }
}

TEST(Graph, H4ComplementDegrees) {
  const QubitHamiltonian h = load_hamiltonian(testing::fixture("h4_jw.ham"));
  const CommutGraph fc = build_graph(h, Scheme::FC, true);
  const CommutGraph qwc = build_graph(h, Scheme::QWC, true);
  EXPECT_EQ(fc.n_nodes(), 184u);
  EXPECT_NEAR(fc.mean_degree(), 78.43, 0.005);
  EXPECT_NEAR(qwc.mean_degree(), 146.98, 0.005);
  EXPECT_GT(qwc.mean_degree(), fc.mean_degree());
}

TEST(Graph, SmallCases) {
  const CommutGraph one = build_graph(from_words(1, {"Z0"}), Scheme::FC, true);
  EXPECT_EQ(one.n_nodes(), 1u);
  EXPECT_EQ(one.n_edges(), 0u);
  const CommutGraph tri = build_graph(from_words(1, {"X0", "Y0", "Z0"}), Scheme::FC, true);
  EXPECT_EQ(tri.n_edges(), 3u);
  EXPECT_TRUE(tri.has_edge(0, 1) && tri.has_edge(1, 2) && tri.has_edge(0, 2));
}

TEST(Graph, AddEdgeValidation) {
  CommutGraph g(3, Scheme::FC, true);
  EXPECT_THROW(g.add_edge(1, 1), std::invalid_argument);
  EXPECT_THROW(g.add_edge(0, 3), std::out_of_range);
  g.add_edge(2, 0);
  g.add_edge(0, 2);
  EXPECT_EQ(g.n_edges(), 1u);
  EXPECT_EQ(g.neighbors(0), std::vector<int>({2}));
}

TEST(Graph, JsonExport) {
  const auto j = nlohmann::json::parse(triangle_with_pendant().to_json());
  EXPECT_EQ(j["n"], 4);
  EXPECT_EQ(j["edges"].size(), 4u);
  EXPECT_EQ(j["edges"][0], nlohmann::json::array({0, 1}));
}

TEST(GreedyBound, KnownGraphs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(greedy_color_bound(complete(6), seed).K, 6);
    EXPECT_EQ(greedy_color_bound(CommutGraph(5, Scheme::FC, true), seed).K, 1);
  }
}

TEST(GreedyBound, TrianglePendantEveryOrder) {
  // every permutation of the 4 nodes gives 3 colors; check seeds cover many orders
  const CommutGraph g = triangle_with_pendant();
  std::vector<int> perm(4);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::vector<int> col(4, 0);
    for (int v : perm) {
      int c = 1;
      while (true) {
        bool used = false;
        for (int u : g.neighbors(v)) used = used || col[static_cast<std::size_t>(u)] == c;
        if (!used) break;
        ++c;
      }
      col[static_cast<std::size_t>(v)] = c;
    }
    EXPECT_EQ(*std::max_element(col.begin(), col.end()), 3);
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::uint64_t seed = 0; seed < 50; ++seed) EXPECT_EQ(greedy_color_bound(g, seed).K, 3);
}

TEST(GreedyBound, WitnessIsValidAndRepeatsHelp) {
  const QubitHamiltonian h = load_hamiltonian(testing::fixture("h4_jw.ham"));
  const CommutGraph g = build_graph(h, Scheme::FC, true);
  const GreedyBound one = greedy_color_bound(g, 4, 1);
  const GreedyBound many = greedy_color_bound(g, 4, 20);
  EXPECT_TRUE(one.witness.is_terminal());
  EXPECT_TRUE(is_valid(g, one.witness));
  EXPECT_EQ(one.witness.n_groups(), one.K);
  EXPECT_LE(many.K, one.K);
  EXPECT_EQ(greedy_color_bound(g, 4, 1).K, one.K);
}

TEST(MaxDegree, Cases) {
  EXPECT_EQ(max_degree_bound(CommutGraph(4, Scheme::FC, true)), 0u);
  CommutGraph star(6, Scheme::FC, true);
  for (int i = 1; i < 6; ++i) star.add_edge(0, i);
  EXPECT_EQ(max_degree_bound(star), 5u);
}

TEST(Coloring, Validity) {
  const CommutGraph tri = complete(3);
  EXPECT_TRUE(is_valid(tri, Coloring({1, 2, 3}, 3)));
  EXPECT_FALSE(is_valid(tri, Coloring({1, 1, 2}, 3)));
  EXPECT_TRUE(is_valid(tri, Coloring({1, 0, 0}, 3)));
  EXPECT_THROW(is_valid(tri, Coloring({1, 2}, 3)), std::invalid_argument);
}

TEST(Coloring, GroupsOf) {
  EXPECT_EQ(groups_of(Coloring({1, 2, 1}, 2)), (std::vector<std::vector<int>>{{0, 2}, {1}}));
  EXPECT_EQ(groups_of(Coloring({4, 4, 4}, 4)), (std::vector<std::vector<int>>{{0, 1, 2}}));
  EXPECT_EQ(groups_of(Coloring({3, 1, 2}, 3)), (std::vector<std::vector<int>>{{1}, {2}, {0}}));
  EXPECT_THROW(groups_of(Coloring({1, 0}, 2)), std::invalid_argument);
  const Coloring back = coloring_from_groups({{1}, {2}, {0}}, 3);
  EXPECT_EQ(back.colors, (std::vector<int>{3, 1, 2}));
  EXPECT_EQ(back.n_groups(), 3);
}

TEST(Baselines, SortedInsertionSmall) {
  const QubitHamiltonian h = from_words(2, {"Z0", "X0", "Z1", "Y0"});
  const Coloring c = sorted_insertion(h, Scheme::FC);
  // Z0 and Z1 commute; X0 and Y0 each need their own group
  EXPECT_EQ(c.colors, (std::vector<int>{1, 2, 1, 3}));
  EXPECT_EQ(sorted_insertion(from_words(1, {"Z0"}), Scheme::FC).n_groups(), 1);
}

TEST(Baselines, SortedInsertionUsesMagnitudeOrder) {
  QubitHamiltonian h = from_words(2, {"X0", "Z0", "Z0 Z1", "X0 X1"});
  h.terms[0].coeff = 0.1;
  h.terms[1].coeff = -0.9;
  h.terms[2].coeff = 0.5;
  h.terms[3].coeff = 0.3;
  // order: Z0 (0.9), Z0Z1 (0.5), X0X1 (0.3), X0 (0.1)
  // Z0, Z0Z1 commute; X0X1 commutes with Z0Z1 but not Z0 -> new group; X0 joins X0X1
  const Coloring c = sorted_insertion(h, Scheme::FC);
  EXPECT_EQ(c.colors, (std::vector<int>{2, 1, 1, 2}));
}

TEST(Baselines, FixtureGroupCounts) {
  const QubitHamiltonian h2 = load_hamiltonian(testing::fixture("h2_jw.ham"));
  const QubitHamiltonian h4 = load_hamiltonian(testing::fixture("h4_jw.ham"));
  EXPECT_EQ(sorted_insertion(h2, Scheme::FC).n_groups(), 2);
  const Coloring si4 = sorted_insertion(h4, Scheme::FC);
  EXPECT_EQ(si4.n_groups(), 9);
  const CommutGraph g4 = build_graph(h4, Scheme::FC, true);
  EXPECT_TRUE(is_valid(g4, si4));
  const Coloring rlf4 = rlf_coloring(g4);
  EXPECT_EQ(rlf4.n_groups(), 8);
  EXPECT_TRUE(is_valid(g4, rlf4));
  EXPECT_TRUE(rlf4.is_terminal());
}

TEST(Baselines, RlfSmall) {
  EXPECT_EQ(rlf_coloring(CommutGraph(5, Scheme::FC, true)).n_groups(), 1);
  EXPECT_EQ(rlf_coloring(complete(4)).n_groups(), 4);
  const Coloring c = rlf_coloring(triangle_with_pendant());
  EXPECT_EQ(c.n_groups(), 3);
  EXPECT_TRUE(is_valid(triangle_with_pendant(), c));
}

TEST(Baselines, RlfValidOnRandomGraphs) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(30));
    CommutGraph g(static_cast<std::size_t>(n), Scheme::FC, true);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.3) g.add_edge(i, j);
    const Coloring c = rlf_coloring(g);
    ASSERT_TRUE(c.is_terminal());
    ASSERT_TRUE(is_valid(g, c));
    ASSERT_LE(static_cast<std::size_t>(c.n_groups()), g.max_degree() + 1);
  }
}

}  // namespace
}  // namespace qmg
