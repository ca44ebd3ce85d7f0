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

#include "qmg/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qmg/error.hpp"

namespace qmg {

std::string to_string(BoundMode m) {
  switch (m) {
    case BoundMode::Greedy: return "greedy";
    case BoundMode::MaxDegree: return "max_degree";
    case BoundMode::Fixed: return "fixed";
  }
  return "?";
}

BoundMode parse_bound_mode(std::string_view s) {
  if (s == "greedy") return BoundMode::Greedy;
  if (s == "max_degree") return BoundMode::MaxDegree;
  if (s == "fixed") return BoundMode::Fixed;
  throw ConfigError("unknown bound mode '" + std::string(s) + "' (expected greedy, max_degree or fixed)");
}

std::uint64_t EnvState::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (int i = 0; i < step; ++i) {
    h ^= static_cast<std::uint64_t>(coloring.colors[static_cast<std::size_t>(i)]);
    h *= 0x100000001b3ull;
  }
  h ^= static_cast<std::uint64_t>(step) << 32;
  h *= 0x100000001b3ull;
  return h;
}

bool ActionMask::any() const {
  return std::any_of(allowed.begin(), allowed.end(), [](char a) { return a != 0; });
}

int ActionMask::count() const { return static_cast<int>(std::count(allowed.begin(), allowed.end(), 1)); }

int color_bound(const CommutGraph& g, const EnvOptions& opts) {
  switch (opts.bound) {
    case BoundMode::Greedy: return std::max(greedy_color_bound(g, opts.seed, opts.greedy_repeats).K, 1);
    case BoundMode::MaxDegree: return std::max(static_cast<int>(max_degree_bound(g)), 1);
    case BoundMode::Fixed:
      if (opts.fixed_k < 1) throw ConfigError("fixed color bound must be >= 1");
      return opts.fixed_k;
  }
  return 1;
}

ColoringEnv::ColoringEnv(const CommutGraph& g, const EnvOptions& opts)
    : graph_(&g), opts_(opts), k_(color_bound(g, opts)) {}

EnvState ColoringEnv::init() const {
  EnvState s;
  s.coloring = Coloring(graph_->n_nodes(), k_);
  s.K = k_;
  s.step = 0;
  s.status = graph_->n_nodes() == 0 ? Status::Terminal : Status::InProgress;
  return s;
}

ActionMask ColoringEnv::legal_mask(const EnvState& s) const {
  if (s.status != Status::InProgress) throw std::logic_error("legal_mask called on a finished state");
  ActionMask m;
  int limit = s.K;
  if (opts_.symmetry_breaking) {
    int used = 0;
    for (int i = 0; i < s.step; ++i) used = std::max(used, s.coloring.colors[static_cast<std::size_t>(i)]);
    limit = std::min(limit, used + 1);
  }
  m.allowed.assign(static_cast<std::size_t>(s.K), 0);
  for (int c = 1; c <= limit; ++c) m.allowed[static_cast<std::size_t>(c - 1)] = 1;
  for (int u : graph_->neighbors(s.step)) {
    if (u >= s.step) break;
    const int cu = s.coloring.colors[static_cast<std::size_t>(u)];
    if (cu >= 1 && cu <= s.K) m.allowed[static_cast<std::size_t>(cu - 1)] = 0;
  }
  return m;
}

EnvState ColoringEnv::step(const EnvState& s, int color) const {
  if (s.status != Status::InProgress) throw std::logic_error("step called on a finished state");
  if (color < 1 || color > s.K) {
    throw std::out_of_range("color " + std::to_string(color) + " outside 1.." + std::to_string(s.K));
  }
  EnvState next = s;
  const int node = s.step;
  next.coloring.colors[static_cast<std::size_t>(node)] = color;
  next.step = node + 1;
  for (int u : graph_->neighbors(node)) {
    if (u >= node) break;
    if (s.coloring.colors[static_cast<std::size_t>(u)] == color) {
      next.status = Status::DeadEnd;
      return next;
    }
  }
  if (next.step == static_cast<int>(graph_->n_nodes())) {
    next.status = Status::Terminal;
  } else if (!legal_mask(next).any()) {
    next.status = Status::DeadEnd;
  }
  return next;
}

std::vector<double> UniformPolicy::log_probs(const EnvState& s, const ActionMask& mask) {
  (void)s;
  const int n = mask.count();
  std::vector<double> lp(mask.allowed.size(), -std::numeric_limits<double>::infinity());
  if (n == 0) return lp;
  const double v = -std::log(static_cast<double>(n));
  for (std::size_t c = 0; c < lp.size(); ++c) {
    if (mask.allowed[c]) lp[c] = v;
  }
  return lp;
}

int sample_categorical(const std::vector<double>& log_probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    if (std::isinf(log_probs[i]) && log_probs[i] < 0) continue;
    last = static_cast<int>(i);
    acc += std::exp(log_probs[i]);
    if (u < acc) return last;
  }
  return last;
}

double TrajectoryRecord::log_pf_total() const {
  double s = 0.0;
  for (const auto& st : steps) s += st.log_pf;
  return s;
}

RewardFn make_oracle_reward(const CovarianceTable& table, const QubitHamiltonian& h, const RewardParams& params) {
  return [&table, &h, params](const Coloring& c, bool valid) { return reward(c, valid, table, h, params); };
}

TrajectoryRecord rollout(const ColoringEnv& env, RolloutPolicy& policy, const RewardFn& reward_fn, Rng& rng) {
  TrajectoryRecord rec;
  EnvState s = env.init();
  rec.steps.reserve(env.graph().n_nodes());
  while (s.status == Status::InProgress) {
    const ActionMask mask = env.legal_mask(s);
    const std::vector<double> lp = policy.log_probs(s, mask);
    if (lp.size() != mask.allowed.size()) throw std::logic_error("policy returned wrong number of colors");
    const int idx = sample_categorical(lp, rng);
    if (idx < 0 || !mask.allowed[static_cast<std::size_t>(idx)]) {
      throw std::logic_error("policy assigns no probability to any allowed color");
    }
    const int color = idx + 1;
    EnvState next = env.step(s, color);
    rec.steps.push_back({s.digest(), color, lp[static_cast<std::size_t>(idx)]});
    rec.log_pb_total += policy.on_action(s, color, next);
    s = std::move(next);
  }
  rec.valid = s.status == Status::Terminal;
  const RewardResult r = reward_fn(s.coloring, rec.valid);
  rec.terminal = std::move(s.coloring);
  rec.reward = r.reward;
  rec.r_m = r.r_m;
  rec.r_g = r.r_g;
  rec.eps2M = r.eps2M;
  rec.n_groups = r.n_groups;
  return rec;
}

}  // namespace qmg
