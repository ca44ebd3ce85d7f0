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

#include "qmg/autodiff.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qmg/error.hpp"

namespace qmg::ad {

Var Tape::push(Mat value, bool needs_grad, std::function<void(Tape&, int)> bw) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(bw);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Tape::g(Var v) {
  Node& n = node(v.id);
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Mat value) { return push(std::move(value), false, nullptr); }

Var Tape::param(const Mat& value, Mat* grad_sink) {
  if (grad_sink->rows() != value.rows() || grad_sink->cols() != value.cols()) {
    throw std::invalid_argument("gradient sink shape does not match parameter");
  }
  Var v = push(value, true, nullptr);
  node(v.id).sink = grad_sink;
  return v;
}

double Tape::scalar(Var v) const {
  const Mat& m = value(v);
  if (m.size() != 1) throw std::invalid_argument("not a scalar");
  return m(0, 0);
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw std::invalid_argument("matmul shape mismatch");
  Mat out = value(a) * value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Mat& go = t.node(self).grad;
    if (t.needs(a)) t.g(a).noalias() += go * t.value(b).transpose();
    if (t.needs(b)) t.g(b).noalias() += t.value(a).transpose() * go;
  });
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("add shape mismatch");
  }
  Mat out = value(a) + value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Mat& go = t.node(self).grad;
    if (t.needs(a)) t.g(a) += go;
    if (t.needs(b)) t.g(b) += go;
  });
}

Var Tape::add_row(Var a, Var b) {
  if (value(b).rows() != 1 || value(b).cols() != value(a).cols()) throw std::invalid_argument("add_row shape mismatch");
  Mat out = value(a);
  out.rowwise() += value(b).row(0);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Mat& go = t.node(self).grad;
    if (t.needs(a)) t.g(a) += go;
    if (t.needs(b)) t.g(b) += go.colwise().sum();
  });
}

Var Tape::relu(Var a) {
  Mat out = value(a).cwiseMax(0.0);
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    const Mat& go = t.node(self).grad;
    t.g(a) += (t.value(a).array() > 0.0).select(go, 0.0);
  });
}

Var Tape::scale(Var a, double s) {
  Mat out = value(a) * s;
  return push(std::move(out), needs(a), [a, s](Tape& t, int self) { t.g(a) += t.node(self).grad * s; });
}

Var Tape::add_scalar(Var a, double s) {
  Mat out = value(a).array() + s;
  return push(std::move(out), needs(a), [a](Tape& t, int self) { t.g(a) += t.node(self).grad; });
}

Var Tape::square(Var a) {
  Mat out = value(a).array().square();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    t.g(a).array() += 2.0 * t.value(a).array() * t.node(self).grad.array();
  });
}

Var Tape::sum_all(Var a) {
  Mat out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    t.g(a).array() += t.node(self).grad(0, 0);
  });
}

Var Tape::sum_rows(Var a) {
  Mat out = value(a).colwise().sum();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    t.g(a).rowwise() += t.node(self).grad.row(0);
  });
}

Var Tape::gather_rows(Var table, std::vector<int> ids) {
  const Mat& tv = value(table);
  Mat out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) throw std::out_of_range("gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  return push(std::move(out), needs(table), [table, ids = std::move(ids)](Tape& t, int self) {
    const Mat& go = t.node(self).grad;
    Mat& gt = t.g(table);
    for (std::size_t i = 0; i < ids.size(); ++i) gt.row(ids[i]) += go.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Mat& av = value(a);
  const Mat& bv = value(b);
  if (av.rows() != bv.rows()) throw std::invalid_argument("concat_cols row mismatch");
  Mat out(av.rows(), av.cols() + bv.cols());
  out.leftCols(av.cols()) = av;
  out.rightCols(bv.cols()) = bv;
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Mat& go = t.node(self).grad;
    const auto ac = t.value(a).cols();
    if (t.needs(a)) t.g(a) += go.leftCols(ac);
    if (t.needs(b)) t.g(b) += go.rightCols(go.cols() - ac);
  });
}

Var Tape::gine_aggregate(Var x, const CommutGraph& graph, const Mat& edge_feat) {
  const Mat& xv = value(x);
  if (edge_feat.rows() != 1 || edge_feat.cols() != xv.cols()) {
    throw std::invalid_argument("edge feature width " + std::to_string(edge_feat.cols()) +
                                " does not match node feature width " + std::to_string(xv.cols()));
  }
  if (static_cast<std::size_t>(xv.rows()) != graph.n_nodes()) {
    throw std::invalid_argument("node feature rows do not match graph size");
  }
  Mat shifted = xv;
  shifted.rowwise() += edge_feat.row(0);
  Mat msg = shifted.cwiseMax(0.0);
  Mat out = xv;
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    for (int j : graph.neighbors(static_cast<int>(i))) out.row(i) += msg.row(j);
  }
  const CommutGraph* gp = &graph;
  return push(std::move(out), needs(x),
              [x, gp, active = Mat((shifted.array() > 0.0).cast<double>())](Tape& t, int self) {
                const Mat& go = t.node(self).grad;
                Mat& gx = t.g(x);
                gx += go;
                Mat pulled = Mat::Zero(go.rows(), go.cols());
                for (Eigen::Index j = 0; j < go.rows(); ++j) {
                  for (int i : gp->neighbors(static_cast<int>(j))) pulled.row(j) += go.row(i);
                }
                gx.array() += pulled.array() * active.array();
              });
}

Var Tape::masked_log_softmax(Var logits, const std::vector<char>& allowed) {
  const Mat& lv = value(logits);
  if (lv.rows() != 1 || static_cast<std::size_t>(lv.cols()) != allowed.size()) {
    throw std::invalid_argument("masked_log_softmax expects a 1 x K row and K mask entries");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < lv.cols(); ++c) {
    if (allowed[static_cast<std::size_t>(c)]) mx = std::max(mx, lv(0, c));
  }
  if (std::isinf(mx)) throw std::invalid_argument("all colors masked");
  double z = 0.0;
  for (Eigen::Index c = 0; c < lv.cols(); ++c) {
    if (allowed[static_cast<std::size_t>(c)]) z += std::exp(lv(0, c) - mx);
  }
  const double lse = mx + std::log(z);
  Mat out(1, lv.cols());
  Mat prob = Mat::Zero(1, lv.cols());
  for (Eigen::Index c = 0; c < lv.cols(); ++c) {
    if (allowed[static_cast<std::size_t>(c)]) {
      out(0, c) = lv(0, c) - lse;
      prob(0, c) = std::exp(out(0, c));
    } else {
      out(0, c) = -std::numeric_limits<double>::infinity();
    }
  }
  return push(std::move(out), needs(logits), [logits, prob = std::move(prob), allowed](Tape& t, int self) {
    const Mat& go = t.node(self).grad;
    double total = 0.0;
    for (Eigen::Index c = 0; c < go.cols(); ++c) {
      if (allowed[static_cast<std::size_t>(c)]) total += go(0, c);
    }
    Mat& gl = t.g(logits);
    for (Eigen::Index c = 0; c < go.cols(); ++c) {
      if (allowed[static_cast<std::size_t>(c)]) gl(0, c) += go(0, c) - prob(0, c) * total;
    }
  });
}

Var Tape::pick(Var a, int row, int col) {
  const Mat& av = value(a);
  if (row < 0 || col < 0 || row >= av.rows() || col >= av.cols()) throw std::out_of_range("pick out of range");
  Mat out(1, 1);
  out(0, 0) = av(row, col);
  return push(std::move(out), needs(a), [a, row, col](Tape& t, int self) {
    t.g(a)(row, col) += t.node(self).grad(0, 0);
  });
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) throw std::invalid_argument("backward needs a scalar loss");
  if (!std::isfinite(scalar(loss))) throw NumericError("non-finite loss");
  if (!needs(loss)) return;
  g(loss)(0, 0) += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.sink != nullptr) {
      if (!n.grad.allFinite()) throw NumericError("non-finite gradient reached a parameter");
      *n.sink += n.grad;
    }
  }
}

}  // namespace qmg::ad
