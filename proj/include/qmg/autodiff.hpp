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

#ifndef QMG_AUTODIFF_HPP
#define QMG_AUTODIFF_HPP

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "qmg/graph.hpp"

namespace qmg::ad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

/// Reverse-mode tape over dense row-major matrices. Nodes are appended in
/// evaluation order, so a reverse sweep is a valid topological order.
/// Parameters enter as leaves bound to an external gradient sink; backward()
/// adds into the sinks and leaves parameter values untouched.
class Tape {
 public:
  Var constant(Mat value);
  /// Leaf whose gradient is accumulated into *grad_sink (same shape as value).
  Var param(const Mat& value, Mat* grad_sink);

  const Mat& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  const Mat& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }
  double scalar(Var v) const;

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// a (n x d) + row vector b (1 x d) on every row.
  Var add_row(Var a, Var b);
  Var relu(Var a);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var square(Var a);
  Var sum_all(Var a);
  /// Column sums: (n x d) -> (1 x d).
  Var sum_rows(Var a);
  /// out.row(i) = table.row(ids[i]).
  Var gather_rows(Var table, std::vector<int> ids);
  Var concat_cols(Var a, Var b);
  /// out_i = x_i + sum_{j in N(i)} relu(x_j + e), e broadcast from a 1 x d row.
  Var gine_aggregate(Var x, const CommutGraph& g, const Mat& edge_feat);
  /// Row vector log-softmax over allowed entries; disallowed entries are -inf.
  Var masked_log_softmax(Var logits, const std::vector<char>& allowed);
  Var pick(Var a, int row, int col);

  /// Seeds d(loss)/d(loss) = 1 and sweeps. Throws std::invalid_argument for a
  /// non-scalar loss and NumericError if any gradient is non-finite.
  void backward(Var loss);
  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Mat* sink = nullptr;
    bool needs_grad = false;
    std::function<void(Tape&, int)> backward;
  };
  Var push(Mat value, bool needs_grad, std::function<void(Tape&, int)> bw);
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
  Mat& g(Var v);

  std::vector<Node> nodes_;
};

}  // namespace qmg::ad

#endif  // QMG_AUTODIFF_HPP
