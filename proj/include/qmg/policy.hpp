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

#ifndef QMG_POLICY_HPP
#define QMG_POLICY_HPP

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "qmg/autodiff.hpp"
#include "qmg/env.hpp"
#include "qmg/graph.hpp"
#include "qmg/rng.hpp"

namespace qmg {

struct PolicyConfig {
  int emb_d = 2;
  int hidden_d = 64;
  /// Number of colors; set from the environment bound.
  int K = 1;
  /// Append the term coefficient to each node embedding (GINE_w).
  bool use_weights = true;
  /// Carry a backward head (see PolicyNet::log_pb).
  bool learned_backward = false;

  /// Node input width: embedding, optional coefficient, current-node flag.
  int input_d() const { return emb_d + (use_weights ? 1 : 0) + 1; }
  void validate() const;
};

/// Parameter tensors in declared (serialization) order.
enum ParamId : int {
  kEmbedding = 0,
  kG1W1, kG1B1, kG1W2, kG1B2,
  kG2W1, kG2B1, kG2W2, kG2B2,
  kHeadW1, kHeadB1, kHeadW2, kHeadB2,
  kBackW1, kBackB1, kBackW2, kBackB2,
  kNumParams
};

const char* param_name(int id);

struct PolicyParams {
  std::array<ad::Mat, kNumParams> t;
  double log_z = 0.0;

  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases, N(0,1) embedding, log_z = 0.
  static PolicyParams init(const PolicyConfig& cfg, Rng& rng);
  /// Same shapes, all zeros.
  static PolicyParams zeros_like(const PolicyParams& p);

  std::size_t n_scalars() const;
  bool all_finite() const;
  double max_abs() const;
  void set_zero();
  /// this += s * o (shapes must agree).
  void axpy(double s, const PolicyParams& o);
};

/// Gradient map over PolicyParams (same layout).
using PolicyGrads = PolicyParams;

/// Per-node coefficient feature and fixed edge feature for one graph.
struct PolicyInputs {
  const CommutGraph* graph = nullptr;
  /// omega_k per node, used only with use_weights.
  std::vector<double> weights;
  double edge_feature = -1.0;
};

/// Node coefficients of a Hamiltonian in term order.
std::vector<double> term_weights(const QubitHamiltonian& h);

/// One GINE layer: mlp(x_i + sum_{j in N(i)} relu(x_j + e)).
ad::Var gine_layer(ad::Tape& t, ad::Var x, const CommutGraph& g, double edge_feat, ad::Var w1, ad::Var b1,
                   ad::Var w2, ad::Var b2);

struct ForwardResult {
  /// 1 x K log-probabilities, -inf on masked colors.
  ad::Var log_probs;
  /// 1 x hidden pooled graph vector.
  ad::Var pooled;
};

/// Binds parameters into a tape. With grads == nullptr they enter as constants.
struct BoundParams {
  std::array<ad::Var, kNumParams> v;
  static BoundParams bind(ad::Tape& t, const PolicyParams& p, PolicyGrads* grads);
};

class PolicyNet {
 public:
  PolicyNet(PolicyConfig cfg, PolicyParams params);

  const PolicyConfig& config() const { return cfg_; }
  PolicyParams& params() { return params_; }
  const PolicyParams& params() const { return params_; }

  /// Graph vector after two GINE layers and sum pooling. color_ids[i] in
  /// [0, K] (0 = uncolored); current is the node being colored, or -1.
  ad::Var pooled_nodes(ad::Tape& t, const BoundParams& b, const std::vector<int>& color_ids, int current,
                       const PolicyInputs& in) const;
  ad::Var pooled(ad::Tape& t, const BoundParams& b, const EnvState& s, const PolicyInputs& in) const;
  /// Head on a pooled vector: masked log-probabilities over colors 1..K.
  ad::Var head(ad::Tape& t, const BoundParams& b, ad::Var pooled, const ActionMask& mask) const;
  /// Masked log-softmax over colors 1..K. Throws if every color is masked.
  ForwardResult forward(ad::Tape& t, const BoundParams& b, const EnvState& s, const ActionMask& mask,
                        const PolicyInputs& in) const;
  /// Plain forward on the current parameters.
  std::vector<double> log_probs(const EnvState& s, const ActionMask& mask, const PolicyInputs& in) const;
  /// log P_B(parent | child) from the backward head on the child. A child has a
  /// single parent under the fixed node order, so the only admissible backward
  /// action is un-coloring the last node and the value is exactly 0.
  ad::Var log_pb(ad::Tape& t, const BoundParams& b, const EnvState& child, const PolicyInputs& in) const;

 private:
  PolicyConfig cfg_;
  PolicyParams params_;
};

/// Adam moments over PolicyParams.
struct AdamState {
  PolicyParams m;
  PolicyParams v;
  long long t = 0;

  static AdamState zeros_like(const PolicyParams& p);
};

struct Checkpoint {
  PolicyConfig config;
  PolicyParams params;
  AdamState adam;
  long long iteration = 0;
  std::string rng_state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
/// Throws ConfigError on a version or shape mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qmg

#endif  // QMG_POLICY_HPP
