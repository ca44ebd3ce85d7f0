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

#ifndef QMG_ENV_HPP
#define QMG_ENV_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qmg/graph.hpp"
#include "qmg/rng.hpp"
#include "qmg/variance.hpp"

namespace qmg {

enum class BoundMode { Greedy, MaxDegree, Fixed };

std::string to_string(BoundMode m);
BoundMode parse_bound_mode(std::string_view s);

struct EnvOptions {
  BoundMode bound = BoundMode::Greedy;
  /// Color bound for BoundMode::Fixed.
  int fixed_k = 0;
  /// Number of greedy permutations tried; the smallest K wins.
  int greedy_repeats = 1;
  std::uint64_t seed = 0;
  /// Only allow colors up to (largest used color + 1).
  bool symmetry_breaking = false;
};

enum class Status { InProgress, Terminal, DeadEnd };

/// Nodes are colored in ascending index order: [0, step) are colored,
/// [step, n) are not.
struct EnvState {
  Coloring coloring;
  int step = 0;
  int K = 0;
  Status status = Status::InProgress;

  /// FNV-1a over the colored prefix.
  std::uint64_t digest() const;
};

struct ActionMask {
  /// allowed[c - 1] for colors 1..K.
  std::vector<char> allowed;

  bool any() const;
  int count() const;
  bool is_allowed(int color) const {
    return color >= 1 && color <= static_cast<int>(allowed.size()) && allowed[static_cast<std::size_t>(color - 1)];
  }
};

/// Sequential coloring environment over a complement graph.
class ColoringEnv {
 public:
  ColoringEnv(const CommutGraph& g, const EnvOptions& opts);

  const CommutGraph& graph() const { return *graph_; }
  const EnvOptions& options() const { return opts_; }
  int K() const { return k_; }

  EnvState init() const;
  /// Colors c <= K not used by an already-colored neighbor of node `step`.
  ActionMask legal_mask(const EnvState& s) const;
  /// Colors node `step`. The result is DeadEnd if the color clashes with a
  /// neighbor (only reachable without masking) or if the next node has no
  /// legal color; Terminal once every node is colored.
  EnvState step(const EnvState& s, int color) const;

 private:
  const CommutGraph* graph_;
  EnvOptions opts_;
  int k_ = 0;
};

/// Color bound chosen by the bound strategy (always >= 1).
int color_bound(const CommutGraph& g, const EnvOptions& opts);

/// Forward policy used during a rollout.
class RolloutPolicy {
 public:
  virtual ~RolloutPolicy() = default;
  /// Normalized log-probabilities for colors 1..K; masked colors are -inf.
  virtual std::vector<double> log_probs(const EnvState& s, const ActionMask& mask) = 0;
  /// Called after each transition; returns log P_B(before | after).
  virtual double on_action(const EnvState& before, int color, const EnvState& after) {
    (void)before;
    (void)color;
    (void)after;
    return 0.0;
  }
};

/// Uniform over the allowed colors.
class UniformPolicy : public RolloutPolicy {
 public:
  std::vector<double> log_probs(const EnvState& s, const ActionMask& mask) override;
};

/// Draws an index from normalized log-probabilities; -inf entries are never drawn.
int sample_categorical(const std::vector<double>& log_probs, Rng& rng);

struct TrajectoryStep {
  std::uint64_t state_digest = 0;
  int action = 0;
  double log_pf = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectoryStep> steps;
  /// Complete coloring when valid, the partial coloring at the dead end otherwise.
  Coloring terminal;
  double reward = 0.0;
  double r_m = 0.0;
  double r_g = 0.0;
  double eps2M = 0.0;
  int n_groups = 0;
  bool valid = false;
  double log_pb_total = 0.0;

  double log_pf_total() const;
};

/// Maps a finished coloring to its reward. Called with valid = false for dead ends.
using RewardFn = std::function<RewardResult(const Coloring&, bool valid)>;

/// Reward backed by a covariance table.
RewardFn make_oracle_reward(const CovarianceTable& table, const QubitHamiltonian& h, const RewardParams& params);

/// Samples one trajectory. Throws std::logic_error if the policy puts no mass
/// on any allowed color.
TrajectoryRecord rollout(const ColoringEnv& env, RolloutPolicy& policy, const RewardFn& reward_fn, Rng& rng);

}  // namespace qmg

#endif  // QMG_ENV_HPP
