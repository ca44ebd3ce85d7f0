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

#ifndef QMG_GRAPH_HPP
#define QMG_GRAPH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qmg/pauli.hpp"

namespace qmg {

/// Undirected simple graph over Hamiltonian term indices. Rows are stored both
/// as bitsets (for set algebra) and as sorted neighbor lists (for iteration).
class CommutGraph {
 public:
  CommutGraph() = default;
  /// Edgeless graph; use add_edge to populate.
  CommutGraph(std::size_t n_nodes, Scheme scheme, bool is_complement);
  static CommutGraph from_edges(std::size_t n_nodes, const std::vector<std::pair<int, int>>& edges,
                                Scheme scheme = Scheme::FC, bool is_complement = true);

  void add_edge(int i, int j);

  std::size_t n_nodes() const { return n_; }
  Scheme scheme() const { return scheme_; }
  bool is_complement() const { return complement_; }

  bool has_edge(int i, int j) const {
    return (rows_[static_cast<std::size_t>(i) * words_ + static_cast<std::size_t>(j) / 64] >> (j % 64)) & 1u;
  }
  const std::vector<int>& neighbors(int i) const { return adj_[static_cast<std::size_t>(i)]; }
  std::size_t degree(int i) const { return adj_[static_cast<std::size_t>(i)].size(); }
  const std::uint64_t* row(int i) const { return rows_.data() + static_cast<std::size_t>(i) * words_; }
  std::size_t row_words() const { return words_; }

  std::size_t n_edges() const;
  double mean_degree() const;
  std::size_t max_degree() const;
  /// Edges (i, j) with i < j in lexicographic order.
  std::vector<std::pair<int, int>> edge_list() const;

  /// {"n": N, "scheme": "...", "complement": bool, "edges": [[i,j],...]}
  std::string to_json() const;

 private:
  std::size_t n_ = 0;
  std::size_t words_ = 0;
  Scheme scheme_ = Scheme::FC;
  bool complement_ = false;
  std::vector<std::uint64_t> rows_;
  std::vector<std::vector<int>> adj_;
};

/// Pairwise commutation graph. With complement = true an edge joins terms that
/// do NOT commute under the scheme, so colorings of it are groupings.
CommutGraph build_graph(const QubitHamiltonian& h, Scheme scheme, bool complement);

/// Per-node color ids; 0 means uncolored, valid colors are 1..K.
struct Coloring {
  std::vector<int> colors;
  int K = 0;

  Coloring() = default;
  Coloring(std::size_t n, int k) : colors(n, 0), K(k) {}
  Coloring(std::vector<int> c, int k) : colors(std::move(c)), K(k) {}

  std::size_t size() const { return colors.size(); }
  bool is_terminal() const;
  /// Number of distinct nonzero colors used.
  int n_groups() const;
};

struct GreedyBound {
  int K = 0;
  Coloring witness;
};

/// Random-sequential greedy coloring: visit nodes in a seeded uniform
/// permutation and give each the smallest color free among its colored
/// neighbors. With repeats > 1 the best of that many permutations is returned.
GreedyBound greedy_color_bound(const CommutGraph& g, std::uint64_t seed, int repeats = 1);

/// Maximum node degree (0 for an edgeless graph).
std::size_t max_degree_bound(const CommutGraph& g);

/// No edge joins two equal nonzero colors. Partial colorings are allowed.
bool is_valid(const CommutGraph& g, const Coloring& c);

/// One group per used color, ordered by color id; members ascending.
std::vector<std::vector<int>> groups_of(const Coloring& c);

/// Inverse of groups_of: group g gets color g + 1.
Coloring coloring_from_groups(const std::vector<std::vector<int>>& groups, std::size_t n_nodes);

}  // namespace qmg

#endif  // QMG_GRAPH_HPP
