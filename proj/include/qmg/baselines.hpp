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

#ifndef QMG_BASELINES_HPP
#define QMG_BASELINES_HPP

#include "qmg/graph.hpp"
#include "qmg/pauli.hpp"

namespace qmg {

/// Sorted insertion: terms by descending |coeff| (stable), each placed into
/// the first group it commutes with entirely, else a new group. Group g gets
/// color g + 1 in creation order.
Coloring sorted_insertion(const QubitHamiltonian& h, Scheme scheme);

/// Recursive largest first on a complement graph. Each color class is seeded
/// with the uncolored node of largest degree in the uncolored subgraph, then
/// grown by the candidate with most neighbors among the class's uncolored
/// neighborhood (ties: fewest neighbors among remaining candidates, then
/// lowest index).
Coloring rlf_coloring(const CommutGraph& g);

}  // namespace qmg

#endif  // QMG_BASELINES_HPP
