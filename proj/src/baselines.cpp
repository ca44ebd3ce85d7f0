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

#include "qmg/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace qmg {

namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t count_and(const std::uint64_t* a, const Bits& b) {
  std::size_t n = 0;
  for (std::size_t w = 0; w < b.size(); ++w) n += std::popcount(a[w] & b[w]);
  return n;
}

bool test(const Bits& b, int i) { return (b[static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1u; }
void set(Bits& b, int i) { b[static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (i % 64); }
void clear(Bits& b, int i) { b[static_cast<std::size_t>(i) / 64] &= ~(std::uint64_t{1} << (i % 64)); }

}  // namespace

Coloring sorted_insertion(const QubitHamiltonian& h, Scheme scheme) {
  const std::size_t n = h.n_terms();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(h.terms[static_cast<std::size_t>(a)].coeff) > std::abs(h.terms[static_cast<std::size_t>(b)].coeff);
  });
  std::vector<std::vector<int>> groups;
  for (int k : order) {
    const auto& wk = h.terms[static_cast<std::size_t>(k)].word;
    auto fits = [&](const std::vector<int>& g) {
      return std::all_of(g.begin(), g.end(),
                         [&](int m) { return commutes(wk, h.terms[static_cast<std::size_t>(m)].word, scheme); });
    };
    auto it = std::find_if(groups.begin(), groups.end(), fits);
    if (it != groups.end()) {
      it->push_back(k);
    } else {
      groups.push_back({k});
    }
  }
  return coloring_from_groups(groups, n);
}

Coloring rlf_coloring(const CommutGraph& g) {
  const std::size_t n = g.n_nodes();
  const std::size_t words = g.row_words();
  Coloring c(n, 0);
  Bits uncolored(words, 0);
  for (std::size_t i = 0; i < n; ++i) set(uncolored, static_cast<int>(i));
  std::size_t remaining = n;
  int color = 0;
  while (remaining > 0) {
    ++color;
    int seed = -1;
    std::size_t best_deg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!test(uncolored, static_cast<int>(i))) continue;
      const std::size_t d = count_and(g.row(static_cast<int>(i)), uncolored);
      if (seed < 0 || d > best_deg) {
        seed = static_cast<int>(i);
        best_deg = d;
      }
    }
    // candidates: uncolored, not adjacent to the class; blocked: uncolored, adjacent to it.
    Bits candidates = uncolored;
    Bits blocked(words, 0);
    auto take = [&](int v) {
      c.colors[static_cast<std::size_t>(v)] = color;
      clear(uncolored, v);
      clear(candidates, v);
      --remaining;
      const std::uint64_t* r = g.row(v);
      for (std::size_t w = 0; w < words; ++w) {
        blocked[w] |= r[w] & candidates[w];
        candidates[w] &= ~r[w];
      }
    };
    take(seed);
    while (true) {
      int pick = -1;
      std::size_t best_in = 0;
      std::size_t best_out = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!test(candidates, static_cast<int>(i))) continue;
        const std::uint64_t* r = g.row(static_cast<int>(i));
        const std::size_t in = count_and(r, blocked);
        const std::size_t out = count_and(r, candidates);
        if (pick < 0 || in > best_in || (in == best_in && out < best_out)) {
          pick = static_cast<int>(i);
          best_in = in;
          best_out = out;
        }
      }
      if (pick < 0) break;
      take(pick);
    }
  }
  c.K = color;
  return c;
}

}  // namespace qmg
