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

#include <cmath>
#include <limits>

#include "qmg/error.hpp"
#include "qmg/trainer.hpp"
#include "toy.hpp"

namespace qmg {
namespace {

SampleRecord sample(long long idx, double e, int groups, bool valid = true) {
  SampleRecord s;
  s.idx = idx;
  s.colors = {static_cast<int>(idx % 3) + 1};
  s.n_groups = groups;
  s.valid = valid;
  if (valid) s.eps2M = e;
  return s;
}

TrainConfig toy_config(int k, long long total, int n_update, double lr) {
  TrainConfig c;
  c.total_samples = total;
  c.n_update = n_update;
  c.lr = lr;
  c.seed = 5;
  c.env.bound = BoundMode::Fixed;
  c.env.fixed_k = k;
  c.policy.hidden_d = 16;
  c.policy.use_weights = false;
  c.checkpoint_every = 0;
  return c;
}

RewardFn table_reward(std::map<std::vector<int>, double> table) {
  return [table](const Coloring& c, bool valid) {
    RewardResult r;
    r.valid = valid;
    r.n_groups = c.n_groups();
    r.eps2M = valid ? 1.0 / table.at(c.colors) : std::numeric_limits<double>::quiet_NaN();
    r.reward = valid ? table.at(c.colors) : 1e-12;
    return r;
  };
}

TEST(Trainer, TbLossExamples) {
  EXPECT_EQ(tb_loss(0, 0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(tb_loss(1.0, -2.0, 0.5, 0.0), 2.25);
  EXPECT_DOUBLE_EQ(tb_loss(std::log(6.0), std::log(1.0 / 6.0), 0.0, 0.0) + 1.0, 1.0);
  EXPECT_DOUBLE_EQ(tb_loss(0.0, 0.0, 0.0, -1.0), 1.0);
  EXPECT_THROW(tb_loss(std::numeric_limits<double>::quiet_NaN(), 0, 0, 0), NumericError);
  EXPECT_THROW(tb_loss(0, 0, -std::numeric_limits<double>::infinity(), 0), NumericError);
}

TEST(Trainer, ModeParsing) {
  EXPECT_EQ(parse_invalid_mode("skip"), InvalidMode::Skip);
  EXPECT_EQ(parse_backward_mode(to_string(BackwardMode::Learned)), BackwardMode::Learned);
  EXPECT_THROW(parse_invalid_mode("drop"), ConfigError);
  TrainConfig c;
  c.n_update = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.n_update = 10;
  c.total_samples = 25;
  EXPECT_EQ(c.n_iterations(), 3);
  EXPECT_EQ(c.effective_lr_log_z(), c.lr);
}

TEST(Trainer, TopKTracker) {
  TopKTracker t(3);
  EXPECT_TRUE(std::isnan(t.mean()));
  t.offer(sample(0, 2.0, 2));
  t.offer(sample(1, 5.0, 2, false));
  t.offer(sample(2, std::numeric_limits<double>::infinity(), 2));
  t.offer(sample(3, 1.0, 3));
  t.offer(sample(4, 2.0, 2));
  t.offer(sample(5, 4.0, 1));
  ASSERT_EQ(t.entries().size(), 3u);
  EXPECT_EQ(t.entries()[0].sample_idx, 3);
  // equal values keep arrival order
  EXPECT_EQ(t.entries()[1].sample_idx, 0);
  EXPECT_EQ(t.entries()[2].sample_idx, 4);
  EXPECT_DOUBLE_EQ(t.mean(), 5.0 / 3.0);
  EXPECT_NEAR(t.stddev(), std::sqrt(2.0 / 9.0), 1e-15);
  EXPECT_EQ(t.best(), 1.0);
  t.offer(sample(6, 0.5, 4));
  EXPECT_EQ(t.entries().back().sample_idx, 0);
}

TEST(Trainer, ParetoMatchesBruteForce) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ParetoPoint> pts;
    for (int i = 0; i < 200; ++i) {
      // coarse grid so ties and duplicates occur
      pts.push_back({static_cast<double>(rng.below(30)) * 0.1, 1 + static_cast<int>(rng.below(12)), i});
    }
    std::vector<ParetoPoint> want;
    for (const auto& p : pts) {
      bool dominated = false;
      for (const auto& q : pts) {
        if (q.eps2M <= p.eps2M && q.n_groups <= p.n_groups && (q.eps2M < p.eps2M || q.n_groups < p.n_groups)) {
          dominated = true;
        }
      }
      if (!dominated) want.push_back(p);
    }
    std::sort(want.begin(), want.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
      return std::tie(a.eps2M, a.n_groups, a.sample_idx) < std::tie(b.eps2M, b.n_groups, b.sample_idx);
    });
    const auto got = pareto_front(pts);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].sample_idx, want[i].sample_idx);
  }
  EXPECT_TRUE(pareto_front({}).empty());
}

TEST(Trainer, AdamStepMatchesHandComputation) {
  PolicyConfig cfg;
  cfg.K = 2;
  cfg.hidden_d = 2;
  Rng rng(1);
  PolicyParams p = PolicyParams::init(cfg, rng);
  const PolicyParams p0 = p;
  PolicyGrads g = PolicyParams::zeros_like(p);
  g.t[kHeadB2](0, 1) = 0.5;
  g.log_z = -2.0;
  AdamState st = AdamState::zeros_like(p);
  adam_step(p, st, g, 0.1, 0.01, 0.9, 0.999, 1e-8);
  // first step moves each coordinate by lr * sign(g) (up to eps)
  EXPECT_NEAR(p.t[kHeadB2](0, 1), p0.t[kHeadB2](0, 1) - 0.1, 1e-8);
  EXPECT_EQ(p.t[kHeadB2](0, 0), p0.t[kHeadB2](0, 0));
  EXPECT_NEAR(p.log_z, p0.log_z + 0.01, 1e-9);
  EXPECT_EQ(st.t, 1);
}

TEST(Trainer, TwoTerminalToyReachesOptimum) {
  // one edge, two colors: terminals (1,2) and (2,1) with rewards 1 and 3
  const CommutGraph g = CommutGraph::from_edges(2, {{0, 1}});
  const auto rf = table_reward({{{1, 2}, 1.0}, {{2, 1}, 3.0}});
  TrainConfig c = toy_config(2, 6000, 16, 0.01);
  c.lr_log_z = 0.05;
  const TrainResult r = train(c, g, {}, rf);
  const PolicyNet net(r.policy, r.params);
  const ColoringEnv env(g, c.env);
  const auto d = testing::exact_terminal_dist(net, env, PolicyInputs{&g, {}, -1.0});
  EXPECT_NEAR(d.p.at({2, 1}), 0.75, 0.02);
  EXPECT_NEAR(r.params.log_z, std::log(4.0), 0.05);
}

TEST(Trainer, ConstantRewardOnTriangleTrainsToUniform) {
  const CommutGraph g = CommutGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  std::map<std::vector<int>, double> target;
  TrainConfig c = toy_config(3, 8000, 16, 0.01);
  c.lr_log_z = 0.05;
  const ColoringEnv env(g, c.env);
  for (const auto& t : testing::all_terminals(env)) target[t] = 1.0;
  ASSERT_EQ(target.size(), 6u);
  const TrainResult r = train(c, g, {}, table_reward(target));
  const PolicyNet net(r.policy, r.params);
  const auto d = testing::exact_terminal_dist(net, env, PolicyInputs{&g, {}, -1.0});
  EXPECT_LE(testing::tv_to_target(d, target), 0.05);
  EXPECT_NEAR(r.params.log_z, std::log(6.0), 0.05);
}

TEST(Trainer, DeterministicAcrossWorkerCounts) {
  Rng rng(9);
  CommutGraph g(7, Scheme::FC, true);
  for (int i = 0; i < 7; ++i)
    for (int j = i + 1; j < 7; ++j)
      if (rng.uniform() < 0.5) g.add_edge(i, j);
  std::vector<double> w = {0.1, -0.3, 0.5, 0.2, -0.7, 0.05, 0.9};
  const RewardFn rf = [](const Coloring& c, bool valid) {
    RewardResult r;
    r.valid = valid;
    r.n_groups = c.n_groups();
    r.eps2M = valid ? static_cast<double>(c.n_groups()) : std::numeric_limits<double>::quiet_NaN();
    r.reward = valid ? 1.0 / c.n_groups() : 1e-12;
    return r;
  };
  TrainConfig c = toy_config(4, 60, 10, 1e-3);
  c.policy.use_weights = true;
  const TrainResult a = train(c, g, w, rf);
  c.workers = 2;
  const TrainResult b = train(c, g, w, rf);
  c.workers = 3;
  const TrainResult d = train(c, g, w, rf);
  ASSERT_EQ(a.samples.size(), 60u);
  for (const auto* other : {&b, &d}) {
    ASSERT_EQ(other->samples.size(), a.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      EXPECT_EQ(a.samples[i].colors, other->samples[i].colors);
      EXPECT_EQ(a.samples[i].logpf, other->samples[i].logpf);
    }
    for (int k = 0; k < kNumParams; ++k) EXPECT_EQ(a.params.t[static_cast<std::size_t>(k)], other->params.t[static_cast<std::size_t>(k)]);
    EXPECT_EQ(a.params.log_z, other->params.log_z);
  }
}

struct Recorder : TrainObserver {
  std::vector<SampleRecord> samples;
  std::vector<IterationStats> iters;
  std::vector<std::pair<long long, bool>> ckpts;
  void on_sample(const SampleRecord& s) override { samples.push_back(s); }
  void on_iteration(const IterationStats& st) override { iters.push_back(st); }
  void on_checkpoint(const Checkpoint& c, bool final) override { ckpts.emplace_back(c.iteration, final); }
};

TEST(Trainer, SingleIterationWhenTotalEqualsBatch) {
  const CommutGraph g = CommutGraph::from_edges(3, {{0, 1}});
  TrainConfig c = toy_config(2, 10, 10, 1e-3);
  Recorder rec;
  const TrainResult r = train(c, g, {}, table_reward({{{1, 2, 1}, 1.0}, {{1, 2, 2}, 2.0}, {{2, 1, 1}, 1.0}, {{2, 1, 2}, 2.0}}), &rec);
  EXPECT_EQ(rec.samples.size(), 10u);
  ASSERT_EQ(rec.iters.size(), 1u);
  ASSERT_EQ(rec.ckpts.size(), 1u);
  EXPECT_EQ(rec.ckpts[0], std::make_pair(1LL, true));
  for (std::size_t i = 0; i < rec.samples.size(); ++i) EXPECT_EQ(rec.samples[i].idx, static_cast<long long>(i));
  EXPECT_EQ(r.trace.size(), 1u);
}

TEST(Trainer, RemainderBatchAndPeriodicCheckpoints) {
  const CommutGraph g = CommutGraph::from_edges(3, {{0, 1}});
  TrainConfig c = toy_config(2, 25, 10, 1e-3);
  c.checkpoint_every = 2;
  Recorder rec;
  train(c, g, {}, table_reward({{{1, 2, 1}, 1.0}, {{1, 2, 2}, 2.0}, {{2, 1, 1}, 1.0}, {{2, 1, 2}, 2.0}}), &rec);
  EXPECT_EQ(rec.samples.size(), 25u);
  EXPECT_EQ(rec.samples.back().iter, 2);
  EXPECT_EQ(rec.iters.size(), 3u);
  const std::vector<std::pair<long long, bool>> want = {{2, false}, {3, true}};
  EXPECT_EQ(rec.ckpts, want);
}

TEST(Trainer, SkipModeIgnoresDeadEnds) {
  // a triangle with only two colors always dead-ends
  const CommutGraph g = CommutGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  TrainConfig c = toy_config(2, 20, 10, 1e-3);
  c.invalid_mode = InvalidMode::Skip;
  const TrainResult skip = train(c, g, {}, table_reward({}));
  EXPECT_EQ(skip.n_valid, 0);
  for (const auto& st : skip.trace) {
    EXPECT_TRUE(std::isnan(st.mean_loss));
    EXPECT_EQ(st.valid_frac, 0.0);
  }
  EXPECT_EQ(skip.params.log_z, 0.0);
  c.invalid_mode = InvalidMode::Floor;
  const TrainResult floor = train(c, g, {}, table_reward({}));
  EXPECT_GT(floor.trace[0].mean_loss, 100.0);
  // floored log-reward is far below log_z + log P_F, so log_z is pushed down
  EXPECT_LT(floor.params.log_z, 0.0);
}

TEST(Trainer, NonFiniteRewardAbortsWithCheckpoint) {
  const CommutGraph g = CommutGraph::from_edges(2, {{0, 1}});
  TrainConfig c = toy_config(2, 20, 10, 1e-3);
  const RewardFn bad = [](const Coloring& col, bool valid) {
    RewardResult r;
    r.valid = valid;
    r.n_groups = col.n_groups();
    r.reward = std::numeric_limits<double>::quiet_NaN();
    return r;
  };
  Recorder rec;
  EXPECT_THROW(train(c, g, {}, bad, &rec), NumericError);
  ASSERT_EQ(rec.ckpts.size(), 1u);
  EXPECT_TRUE(rec.ckpts[0].second);
}

TEST(Trainer, RejectsMismatchedWeights) {
  const CommutGraph g = CommutGraph::from_edges(2, {{0, 1}});
  TrainConfig c = toy_config(2, 10, 10, 1e-3);
  c.policy.use_weights = true;
  EXPECT_THROW(train(c, g, {1.0}, table_reward({})), std::invalid_argument);
}

}  // namespace
}  // namespace qmg
