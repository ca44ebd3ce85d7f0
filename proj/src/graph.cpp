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

#include "qmg/graph.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "qmg/rng.hpp"

namespace qmg {

CommutGraph::CommutGraph(std::size_t n_nodes, Scheme scheme, bool is_complement)
    : n_(n_nodes),
      words_((n_nodes + 63) / 64),
      scheme_(scheme),
      complement_(is_complement),
      rows_(n_nodes * ((n_nodes + 63) / 64), 0),
      adj_(n_nodes) {}

CommutGraph CommutGraph::from_edges(std::size_t n_nodes, const std::vector<std::pair<int, int>>& edges,
                                    Scheme scheme, bool is_complement) {
  CommutGraph g(n_nodes, scheme, is_complement);
  for (auto [i, j] : edges) g.add_edge(i, j);
  return g;
}

void CommutGraph::add_edge(int i, int j) {
  if (i == j) throw std::invalid_argument("self-loops are not allowed");
  if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n_ || static_cast<std::size_t>(j) >= n_) {
    throw std::out_of_range("edge endpoint out of range");
  }
  if (has_edge(i, j)) return;
  rows_[static_cast<std::size_t>(i) * words_ + static_cast<std::size_t>(j) / 64] |= std::uint64_t{1} << (j % 64);
  rows_[static_cast<std::size_t>(j) * words_ + static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (i % 64);
  auto insert_sorted = [](std::vector<int>& v, int x) { v.insert(std::lower_bound(v.begin(), v.end(), x), x); };
  insert_sorted(adj_[static_cast<std::size_t>(i)], j);
  insert_sorted(adj_[static_cast<std::size_t>(j)], i);
}

std::size_t CommutGraph::n_edges() const {
  std::size_t twice = 0;
  for (const auto& a : adj_) twice += a.size();
  return twice / 2;
}

double CommutGraph::mean_degree() const {
  if (n_ == 0) return 0.0;
  return 2.0 * static_cast<double>(n_edges()) / static_cast<double>(n_);
}

std::size_t CommutGraph::max_degree() const {
  std::size_t m = 0;
  for (const auto& a : adj_) m = std::max(m, a.size());
  return m;
}

std::vector<std::pair<int, int>> CommutGraph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(n_edges());
  for (std::size_t i = 0; i < n_; ++i) {
    for (int j : adj_[i]) {
      if (j > static_cast<int>(i)) out.emplace_back(static_cast<int>(i), j);
    }
  }
  return out;
}

std::string CommutGraph::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["scheme"] = to_string(scheme_);
  j["complement"] = complement_;
  auto edges = nlohmann::json::array();
  for (auto [a, b] : edge_list()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  return j.dump();
}

CommutGraph build_graph(const QubitHamiltonian& h, Scheme scheme, bool complement) {
  const std::size_t n = h.n_terms();
  CommutGraph g(n, scheme, complement);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool c = commutes(h.terms[i].word, h.terms[j].word, scheme);
      if (c != complement) g.add_edge(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return g;
}

bool Coloring::is_terminal() const {
  return std::none_of(colors.begin(), colors.end(), [](int c) { return c == 0; });
}

int Coloring::n_groups() const {
  std::vector<int> used;
  for (int c : colors) {
    if (c != 0) used.push_back(c);
  }
  std::sort(used.begin(), used.end());
  return static_cast<int>(std::unique(used.begin(), used.end()) - used.begin());
}

GreedyBound greedy_color_bound(const CommutGraph& g, std::uint64_t seed, int repeats) {
  const std::size_t n = g.n_nodes();
  GreedyBound best;
  Rng rng(seed);
  for (int r = 0; r < std::max(repeats, 1); ++r) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    Coloring c(n, 0);
    std::vector<char> taken;
    int k = 0;
    for (int v : order) {
      taken.assign(static_cast<std::size_t>(k) + 2, 0);
      for (int u : g.neighbors(v)) {
        const int cu = c.colors[static_cast<std::size_t>(u)];
        if (cu != 0) taken[static_cast<std::size_t>(cu)] = 1;
      }
      int color = 1;
      while (taken[static_cast<std::size_t>(color)]) ++color;
      c.colors[static_cast<std::size_t>(v)] = color;
      k = std::max(k, color);
    }
    c.K = k;
    if (r == 0 || k < best.K) best = GreedyBound{k, std::move(c)};
  }
  return best;
}

std::size_t max_degree_bound(const CommutGraph& g) { return g.max_degree(); }

bool is_valid(const CommutGraph& g, const Coloring& c) {
  if (c.size() != g.n_nodes()) throw std::invalid_argument("coloring length does not match graph size");
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const int ci = c.colors[i];
    if (ci == 0) continue;
    for (int j : g.neighbors(static_cast<int>(i))) {
      if (j > static_cast<int>(i) && c.colors[static_cast<std::size_t>(j)] == ci) return false;
    }
  }
  return true;
}

std::vector<std::vector<int>> groups_of(const Coloring& c) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.colors[i] == 0) throw std::invalid_argument("coloring has uncolored node " + std::to_string(i));
    ids.push_back(c.colors[i]);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::vector<int>> groups(ids.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto slot = std::lower_bound(ids.begin(), ids.end(), c.colors[i]) - ids.begin();
    groups[static_cast<std::size_t>(slot)].push_back(static_cast<int>(i));
  }
  return groups;
}

Coloring coloring_from_groups(const std::vector<std::vector<int>>& groups, std::size_t n_nodes) {
  Coloring c(n_nodes, static_cast<int>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int v : groups[g]) {
      if (v < 0 || static_cast<std::size_t>(v) >= n_nodes) throw std::out_of_range("group member out of range");
      if (c.colors[static_cast<std::size_t>(v)] != 0) throw std::invalid_argument("node appears in two groups");
      c.colors[static_cast<std::size_t>(v)] = static_cast<int>(g) + 1;
    }
  }
  return c;
}

}  // namespace qmg
