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

#ifndef QMG_TRAINER_HPP
#define QMG_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qmg/env.hpp"
#include "qmg/policy.hpp"
#include "qmg/variance.hpp"

namespace qmg {

enum class InvalidMode { Floor, Skip };
enum class BackwardMode { Deterministic, Learned };

std::string to_string(InvalidMode m);
std::string to_string(BackwardMode m);
InvalidMode parse_invalid_mode(std::string_view s);
BackwardMode parse_backward_mode(std::string_view s);

struct TrainConfig {
  long long total_samples = 5000;
  int n_update = 10;
  double lr = 3e-4;
  /// Learning rate for log_z; NaN means "same as lr".
  double lr_log_z = std::numeric_limits<double>::quiet_NaN();
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  RewardParams reward;
  EnvOptions env;
  InvalidMode invalid_mode = InvalidMode::Floor;
  BackwardMode backward_mode = BackwardMode::Deterministic;
  /// K is filled in from the environment.
  PolicyConfig policy;
  /// Checkpoint every this many iterations (0 disables periodic ones).
  int checkpoint_every = 50;
  int top_k = 10;
  int workers = 1;
  /// Abort when any parameter exceeds this magnitude.
  double max_param_abs = 1e6;

  void validate() const;
  long long n_iterations() const { return (total_samples + n_update - 1) / n_update; }
  double effective_lr_log_z() const { return std::isnan(lr_log_z) ? lr : lr_log_z; }
};

/// One line of samples.jsonl.
struct SampleRecord {
  long long iter = 0;
  long long idx = 0;
  std::vector<int> colors;
  int n_groups = 0;
  /// Empty for invalid samples.
  std::optional<double> eps2M;
  double reward = 0.0;
  bool valid = false;
  double logpf = 0.0;
};

struct TopKEntry {
  double eps2M = 0.0;
  int n_groups = 0;
  std::uint64_t digest = 0;
  long long sample_idx = 0;
};

/// Best k samples by eps2M. Repeated colorings are kept as separate entries.
class TopKTracker {
 public:
  explicit TopKTracker(int k = 10);

  /// Ignores invalid samples and non-finite eps2M.
  void offer(const SampleRecord& s);
  int k() const { return k_; }
  const std::vector<TopKEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  double mean() const;
  /// Population standard deviation.
  double stddev() const;
  double best() const;

 private:
  int k_;
  std::vector<TopKEntry> entries_;
};

std::uint64_t coloring_digest(const std::vector<int>& colors);

struct IterationStats {
  long long iter = 0;
  double mean_loss = 0.0;
  double log_z = 0.0;
  double valid_frac = 0.0;
  /// NaN while the tracker is empty.
  double mean_topk = 0.0;
  double std_topk = 0.0;
  double best_eps2M = 0.0;
};

struct ParetoPoint {
  double eps2M = 0.0;
  int n_groups = 0;
  long long sample_idx = 0;
};

/// Non-dominated points when minimizing both coordinates. Identical points are
/// all kept. Sorted by eps2M, then n_groups, then sample_idx.
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> pts);

/// Squared trajectory-balance residual.
double tb_loss(double log_z, double sum_log_pf, double log_reward, double sum_log_pb);

/// Receives training events in deterministic order.
class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  virtual void on_sample(const SampleRecord& s) { (void)s; }
  virtual void on_iteration(const IterationStats& st) { (void)st; }
  virtual void on_checkpoint(const Checkpoint& c, bool final) {
    (void)c;
    (void)final;
  }
};

struct TrainResult {
  PolicyParams params;
  PolicyConfig policy;
  TopKTracker tracker;
  std::vector<SampleRecord> samples;
  std::vector<IterationStats> trace;
  long long n_valid = 0;
};

/// Per-trajectory outcome with its log-probability gradients.
struct TrajectoryGrad {
  TrajectoryRecord record;
  PolicyGrads grad_log_pf;
  PolicyGrads grad_log_pb;
};

/// Samples one trajectory from the policy, accumulating d(sum log P_F) and
/// d(sum log P_B) per step instead of keeping the whole trajectory on a tape.
TrajectoryGrad sample_with_grads(const PolicyNet& net, const ColoringEnv& env, const PolicyInputs& in,
                                 const RewardFn& reward_fn, BackwardMode bm, Rng& rng);

/// TB loss for a fixed trajectory rebuilt on one tape; used to cross-check the
/// streamed gradient. Returns the loss and adds d(loss) into grads.
double tb_loss_full_tape(const PolicyNet& net, const ColoringEnv& env, const PolicyInputs& in,
                         const TrajectoryRecord& traj, double log_reward, BackwardMode bm, PolicyGrads* grads);

/// In-place Adam step.
void adam_step(PolicyParams& p, AdamState& st, const PolicyGrads& g, double lr, double lr_log_z, double beta1,
               double beta2, double eps);

/// Runs ceil(total_samples / n_update) iterations; the last one draws only the
/// remainder so exactly total_samples trajectories are logged. weights are the
/// per-node coefficients (ignored without use_weights). Throws NumericError on a
/// non-finite loss or parameter blow-up after handing a checkpoint to the observer.
TrainResult train(const TrainConfig& cfg, const CommutGraph& graph, const std::vector<double>& weights,
                  const RewardFn& reward_fn, TrainObserver* observer = nullptr);

}  // namespace qmg

#endif  // QMG_TRAINER_HPP
