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
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "gradcheck.hpp"
#include "qmg/error.hpp"
#include "qmg/policy.hpp"
#include "qmg/trainer.hpp"

namespace qmg {
namespace {

CommutGraph random_graph(int n, double p, Rng& rng) {
  CommutGraph g(static_cast<std::size_t>(n), Scheme::FC, true);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) g.add_edge(i, j);
  return g;
}

std::vector<double> random_weights(int n, Rng& rng) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& x : w) x = rng.normal() * 0.5;
  return w;
}

PolicyConfig small_config(int k, bool weights, int hidden = 8) {
  PolicyConfig c;
  c.K = k;
  c.hidden_d = hidden;
  c.use_weights = weights;
  return c;
}

EnvOptions fixed(int k) {
  EnvOptions o;
  o.bound = BoundMode::Fixed;
  o.fixed_k = k;
  return o;
}

RewardFn toy_reward() {
  return [](const Coloring& c, bool valid) {
    RewardResult r;
    r.valid = valid;
    r.n_groups = c.n_groups();
    r.reward = valid ? 1.0 + c.n_groups() : 1e-12;
    return r;
  };
}

std::vector<double> head_log_probs(const PolicyNet& net, const std::vector<int>& ids, int current,
                                   const PolicyInputs& in) {
  ad::Tape t;
  const BoundParams b = BoundParams::bind(t, net.params(), nullptr);
  ActionMask all;
  all.allowed.assign(static_cast<std::size_t>(net.config().K), 1);
  const ad::Mat& m = t.value(net.head(t, b, net.pooled_nodes(t, b, ids, current, in), all));
  return {m.data(), m.data() + m.size()};
}

TEST(Policy, OutputIsNormalizedOverAllowedColors) {
  Rng rng(1);
  const CommutGraph g = random_graph(9, 0.4, rng);
  const ColoringEnv env(g, fixed(4));
  PolicyNet net(small_config(4, true), PolicyParams::init(small_config(4, true), rng));
  const PolicyInputs in{&g, random_weights(9, rng), -1.0};
  EnvState s = env.init();
  while (s.status == Status::InProgress) {
    const ActionMask m = env.legal_mask(s);
    const auto lp = net.log_probs(s, m, in);
    double total = 0.0;
    for (int c = 1; c <= 4; ++c) {
      if (m.is_allowed(c)) {
        total += std::exp(lp[static_cast<std::size_t>(c - 1)]);
      } else {
        EXPECT_TRUE(std::isinf(lp[static_cast<std::size_t>(c - 1)]));
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    int pick = 1;
    while (!m.is_allowed(pick)) ++pick;
    s = env.step(s, pick);
  }
}

TEST(Policy, InvariantUnderNodeRelabeling) {
  Rng rng(2);
  for (bool weights : {false, true}) {
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 3 + static_cast<int>(rng.below(8));
      const CommutGraph g = random_graph(n, 0.5, rng);
      const auto w = random_weights(n, rng);
      std::vector<int> ids(static_cast<std::size_t>(n));
      for (auto& c : ids) c = static_cast<int>(rng.below(4));
      const int current = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      CommutGraph pg(static_cast<std::size_t>(n), Scheme::FC, true);
      for (auto [i, j] : g.edge_list()) pg.add_edge(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      std::vector<int> pids(ids.size());
      std::vector<double> pw(w.size());
      for (int i = 0; i < n; ++i) {
        pids[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = ids[static_cast<std::size_t>(i)];
        pw[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = w[static_cast<std::size_t>(i)];
      }

      const PolicyConfig cfg = small_config(3, weights, 16);
      const PolicyNet net(cfg, PolicyParams::init(cfg, rng));
      const auto a = head_log_probs(net, ids, current, PolicyInputs{&g, w, -1.0});
      const auto b = head_log_probs(net, pids, perm[static_cast<std::size_t>(current)], PolicyInputs{&pg, pw, -1.0});
      for (std::size_t c = 0; c < a.size(); ++c) EXPECT_NEAR(a[c], b[c], 1e-10);
    }
  }
}

TEST(Policy, SameSeedSameOutputs) {
  Rng g_rng(3);
  const CommutGraph g = random_graph(8, 0.5, g_rng);
  const ColoringEnv env(g, fixed(5));
  const PolicyInputs in{&g, random_weights(8, g_rng), -1.0};
  const PolicyConfig cfg = small_config(5, true);
  Rng r1(42);
  Rng r2(42);
  const PolicyNet a(cfg, PolicyParams::init(cfg, r1));
  const PolicyNet b(cfg, PolicyParams::init(cfg, r2));
  const EnvState s = env.step(env.init(), 2);
  EXPECT_EQ(a.log_probs(s, env.legal_mask(s), in), b.log_probs(s, env.legal_mask(s), in));
}

TEST(Policy, MaskedColorsAreNeverSampled) {
  Rng rng(4);
  const PolicyConfig cfg = small_config(4, true);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(8));
    const CommutGraph g = random_graph(n, 0.5, rng);
    const ColoringEnv env(g, fixed(4));
    const PolicyNet net(cfg, PolicyParams::init(cfg, rng));
    const PolicyInputs in{&g, random_weights(n, rng), -1.0};
    const TrajectoryGrad tg = sample_with_grads(net, env, in, toy_reward(), BackwardMode::Deterministic, rng);
    EnvState s = env.init();
    for (const auto& st : tg.record.steps) {
      ASSERT_TRUE(env.legal_mask(s).is_allowed(st.action));
      s = env.step(s, st.action);
    }
    if (tg.record.valid) { ASSERT_TRUE(is_valid(g, tg.record.terminal)); }
  }
}

TEST(Policy, ZeroWeightNetworkIsUniform) {
  Rng rng(5);
  const CommutGraph g = random_graph(6, 0.5, rng);
  const ColoringEnv env(g, fixed(3));
  const PolicyConfig cfg = small_config(3, true);
  PolicyParams p = PolicyParams::init(cfg, rng);
  p.set_zero();
  const PolicyNet net(cfg, p);
  const PolicyInputs in{&g, random_weights(6, rng), -1.0};
  EnvState s = env.step(env.init(), 1);
  const ActionMask m = env.legal_mask(s);
  const auto lp = net.log_probs(s, m, in);
  for (int c = 1; c <= 3; ++c) {
    if (m.is_allowed(c)) { EXPECT_NEAR(lp[static_cast<std::size_t>(c - 1)], -std::log(m.count()), 1e-14); }
  }
}

TEST(Policy, ZeroWeightNetworkOnlyTrainsOutputBias) {
  Rng rng(15);
  const CommutGraph g = random_graph(6, 0.5, rng);
  const ColoringEnv env(g, fixed(3));
  const PolicyConfig cfg = small_config(3, true);
  PolicyParams p = PolicyParams::init(cfg, rng);
  p.set_zero();
  const PolicyInputs in{&g, random_weights(6, rng), -1.0};
  const TrajectoryGrad tg = sample_with_grads(PolicyNet(cfg, p), env, in, toy_reward(), BackwardMode::Deterministic, rng);
  // every path to the logits goes through a zero weight except the last bias
  for (int k = 0; k < kNumParams; ++k) {
    const auto& gk = tg.grad_log_pf.t[static_cast<std::size_t>(k)];
    if (k == kHeadB2 || gk.size() == 0) continue;
    EXPECT_EQ(gk.cwiseAbs().maxCoeff(), 0.0) << param_name(k);
  }
  EXPECT_GT(tg.grad_log_pf.t[kHeadB2].cwiseAbs().maxCoeff(), 0.0);
}

TEST(Policy, RejectsBadInputs) {
  Rng rng(6);
  const CommutGraph g = random_graph(4, 0.5, rng);
  const ColoringEnv env(g, fixed(3));
  const PolicyConfig cfg = small_config(3, true);
  const PolicyNet net(cfg, PolicyParams::init(cfg, rng));
  const PolicyInputs in{&g, random_weights(4, rng), -1.0};
  ActionMask none;
  none.allowed.assign(3, 0);
  EXPECT_THROW(net.log_probs(env.init(), none, in), std::invalid_argument);
  ActionMask wide;
  wide.allowed.assign(4, 1);
  EXPECT_THROW(net.log_probs(env.init(), wide, in), std::invalid_argument);
  const PolicyInputs short_w{&g, {1.0}, -1.0};
  EXPECT_THROW(net.log_probs(env.init(), env.legal_mask(env.init()), short_w), std::invalid_argument);
  EXPECT_THROW(PolicyNet(small_config(4, true), PolicyParams::init(cfg, rng)), ConfigError);
}

TEST(Policy, LearnedBackwardIsZeroUnderFixedOrder) {
  Rng rng(7);
  const CommutGraph g = random_graph(6, 0.4, rng);
  const ColoringEnv env(g, fixed(4));
  PolicyConfig cfg = small_config(4, true);
  cfg.learned_backward = true;
  const PolicyNet net(cfg, PolicyParams::init(cfg, rng));
  const PolicyInputs in{&g, random_weights(6, rng), -1.0};
  for (int i = 0; i < 20; ++i) {
    const TrajectoryGrad tg = sample_with_grads(net, env, in, toy_reward(), BackwardMode::Learned, rng);
    EXPECT_EQ(tg.record.log_pb_total, 0.0);
  }
  ad::Tape t;
  const BoundParams b = BoundParams::bind(t, net.params(), nullptr);
  EXPECT_THROW(net.log_pb(t, b, env.init(), in), std::invalid_argument);
}

// Finite differences on the full TB loss of a fixed trajectory, log_z included.
void run_grad_check(bool weights, std::uint64_t seed) {
  Rng rng(seed);
  const CommutGraph g = random_graph(7, 0.5, rng);
  const ColoringEnv env(g, fixed(4));
  const PolicyConfig cfg = small_config(4, weights, 12);
  PolicyParams p0 = PolicyParams::init(cfg, rng);
  p0.log_z = 0.3;
  const PolicyInputs in{&g, random_weights(7, rng), -1.0};
  const TrajectoryRecord traj =
      sample_with_grads(PolicyNet(cfg, p0), env, in, toy_reward(), BackwardMode::Deterministic, rng).record;
  const double log_r = std::log(traj.reward);
  auto loss = [&](const PolicyParams& p, PolicyGrads* grads) {
    return tb_loss_full_tape(PolicyNet(cfg, p), env, in, traj, log_r, BackwardMode::Deterministic, grads);
  };
  const testing::GradCheckResult r = testing::grad_check(p0, loss, 150, rng, 1e-4);
  EXPECT_GE(r.n_checked, 100);
  EXPECT_LT(r.n_kinks, r.n_checked);
  EXPECT_LT(r.max_rel_err, 1e-4);
  EXPECT_GT(r.max_abs_grad, 0.0);
}

TEST(Policy, GradientCheckGine) { run_grad_check(false, 11); }
TEST(Policy, GradientCheckGineWeighted) { run_grad_check(true, 12); }

TEST(Policy, StreamedGradientMatchesFullTape) {
  Rng rng(13);
  const CommutGraph g = random_graph(8, 0.5, rng);
  const ColoringEnv env(g, fixed(4));
  const PolicyConfig cfg = small_config(4, true);
  PolicyParams p = PolicyParams::init(cfg, rng);
  p.log_z = -0.4;
  const PolicyNet net(cfg, p);
  const PolicyInputs in{&g, random_weights(8, rng), -1.0};
  for (int i = 0; i < 5; ++i) {
    const TrajectoryGrad tg = sample_with_grads(net, env, in, toy_reward(), BackwardMode::Deterministic, rng);
    const double log_r = std::log(tg.record.reward);
    PolicyGrads full = PolicyParams::zeros_like(p);
    const double loss = tb_loss_full_tape(net, env, in, tg.record, log_r, BackwardMode::Deterministic, &full);
    const double delta = p.log_z + tg.record.log_pf_total() - log_r;
    EXPECT_NEAR(loss, delta * delta, 1e-10);
    EXPECT_NEAR(full.log_z, 2.0 * delta, 1e-10);
    for (int k = 0; k < kNumParams; ++k) {
      const auto& a = full.t[static_cast<std::size_t>(k)];
      if (a.size() == 0) continue;
      const ad::Mat b = 2.0 * delta * tg.grad_log_pf.t[static_cast<std::size_t>(k)];
      EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + a.cwiseAbs().maxCoeff())) << param_name(k);
    }
  }
}

TEST(Policy, CheckpointRoundTripAndShapeMismatch) {
  Rng rng(14);
  const PolicyConfig cfg = small_config(3, true);
  Checkpoint c;
  c.config = cfg;
  c.params = PolicyParams::init(cfg, rng);
  c.params.log_z = 1.25;
  c.adam = AdamState::zeros_like(c.params);
  c.adam.m.axpy(0.1, c.params);
  c.adam.t = 7;
  c.iteration = 12;
  c.rng_state = "abc";
  const auto dir = std::filesystem::temp_directory_path() / "qmg_test_policy";
  std::filesystem::create_directories(dir);
  const auto path = dir / "ckpt.json";
  save_checkpoint(path, c);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.config.K, 3);
  EXPECT_EQ(back.iteration, 12);
  EXPECT_EQ(back.adam.t, 7);
  EXPECT_EQ(back.rng_state, "abc");
  EXPECT_EQ(back.params.log_z, 1.25);
  for (int k = 0; k < kNumParams; ++k) {
    EXPECT_EQ(back.params.t[static_cast<std::size_t>(k)], c.params.t[static_cast<std::size_t>(k)]) << param_name(k);
    EXPECT_EQ(back.adam.m.t[static_cast<std::size_t>(k)], c.adam.m.t[static_cast<std::size_t>(k)]);
  }

  nlohmann::json j;
  std::ifstream(path) >> j;
  j["K"] = 5;
  std::ofstream(dir / "bad.json") << j.dump();
  EXPECT_THROW(load_checkpoint(dir / "bad.json"), ConfigError);
  j["K"] = 3;
  j["version"] = 99;
  std::ofstream(dir / "old.json") << j.dump();
  EXPECT_THROW(load_checkpoint(dir / "old.json"), ConfigError);
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace qmg
