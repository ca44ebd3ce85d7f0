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

#include "qmg/trainer.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qmg/error.hpp"

namespace qmg {

std::string to_string(InvalidMode m) { return m == InvalidMode::Floor ? "floor" : "skip"; }
std::string to_string(BackwardMode m) { return m == BackwardMode::Deterministic ? "deterministic" : "learned"; }

InvalidMode parse_invalid_mode(std::string_view s) {
  if (s == "floor") return InvalidMode::Floor;
  if (s == "skip") return InvalidMode::Skip;
  throw ConfigError("unknown invalid_mode '" + std::string(s) + "' (expected floor or skip)");
}

BackwardMode parse_backward_mode(std::string_view s) {
  if (s == "deterministic") return BackwardMode::Deterministic;
  if (s == "learned") return BackwardMode::Learned;
  throw ConfigError("unknown backward_mode '" + std::string(s) + "' (expected deterministic or learned)");
}

void TrainConfig::validate() const {
  if (n_update < 1) throw ConfigError("n_update must be >= 1");
  if (total_samples < n_update) throw ConfigError("total_samples must be >= n_update");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!std::isnan(lr_log_z) && !(lr_log_z > 0.0)) throw ConfigError("lr_log_z must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (policy.emb_d < 1 || policy.hidden_d < 1) throw ConfigError("emb_d and hidden_d must be >= 1");
  reward.validate();
}

std::uint64_t coloring_digest(const std::vector<int>& colors) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (int c : colors) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
    h *= 0x100000001b3ull;
  }
  return h;
}

TopKTracker::TopKTracker(int k) : k_(k) {
  if (k < 1) throw std::invalid_argument("top-k needs k >= 1");
}

void TopKTracker::offer(const SampleRecord& s) {
  if (!s.valid || !s.eps2M || !std::isfinite(*s.eps2M)) return;
  const double e = *s.eps2M;
  if (static_cast<int>(entries_.size()) == k_ && e >= entries_.back().eps2M) return;
  TopKEntry en{e, s.n_groups, coloring_digest(s.colors), s.idx};
  // upper_bound keeps earlier samples ahead of later ties
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), e,
                              [](double v, const TopKEntry& x) { return v < x.eps2M; });
  entries_.insert(pos, en);
  if (static_cast<int>(entries_.size()) > k_) entries_.pop_back();
}

double TopKTracker::mean() const {
  if (entries_.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& e : entries_) s += e.eps2M;
  return s / static_cast<double>(entries_.size());
}

double TopKTracker::stddev() const {
  if (entries_.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean();
  double s = 0.0;
  for (const auto& e : entries_) s += (e.eps2M - m) * (e.eps2M - m);
  return std::sqrt(s / static_cast<double>(entries_.size()));
}

double TopKTracker::best() const {
  return entries_.empty() ? std::numeric_limits<double>::quiet_NaN() : entries_.front().eps2M;
}

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.eps2M != b.eps2M) return a.eps2M < b.eps2M;
    if (a.n_groups != b.n_groups) return a.n_groups < b.n_groups;
    return a.sample_idx < b.sample_idx;
  });
  std::vector<ParetoPoint> out;
  // smallest group count among points with strictly smaller eps2M
  int best_before = std::numeric_limits<int>::max();
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i;
    while (j < pts.size() && pts[j].eps2M == pts[i].eps2M) ++j;
    const int block_min = pts[i].n_groups;
    for (std::size_t k = i; k < j; ++k) {
      const bool dominated = best_before <= pts[k].n_groups || block_min < pts[k].n_groups;
      if (!dominated) out.push_back(pts[k]);
    }
    best_before = std::min(best_before, block_min);
    i = j;
  }
  return out;
}

double tb_loss(double log_z, double sum_log_pf, double log_reward, double sum_log_pb) {
  const double d = log_z + sum_log_pf - log_reward - sum_log_pb;
  if (!std::isfinite(d)) throw NumericError("non-finite trajectory balance residual");
  return d * d;
}

TrajectoryGrad sample_with_grads(const PolicyNet& net, const ColoringEnv& env, const PolicyInputs& in,
                                 const RewardFn& reward_fn, BackwardMode bm, Rng& rng) {
  TrajectoryGrad out;
  out.grad_log_pf = PolicyParams::zeros_like(net.params());
  out.grad_log_pb = PolicyParams::zeros_like(net.params());
  TrajectoryRecord& rec = out.record;
  EnvState s = env.init();
  rec.steps.reserve(env.graph().n_nodes());
  ad::Tape tape;
  while (s.status == Status::InProgress) {
    const ActionMask mask = env.legal_mask(s);
    tape.clear();
    const BoundParams b = BoundParams::bind(tape, net.params(), &out.grad_log_pf);
    const ForwardResult f = net.forward(tape, b, s, mask, in);
    const ad::Mat& lpm = tape.value(f.log_probs);
    const std::vector<double> lp(lpm.data(), lpm.data() + lpm.size());
    const int idx = sample_categorical(lp, rng);
    if (idx < 0 || !mask.allowed[static_cast<std::size_t>(idx)]) {
      throw std::logic_error("policy assigns no probability to any allowed color");
    }
    tape.backward(tape.pick(f.log_probs, 0, idx));
    const int color = idx + 1;
    EnvState next = env.step(s, color);
    rec.steps.push_back({s.digest(), color, lp[static_cast<std::size_t>(idx)]});
    if (bm == BackwardMode::Learned) {
      tape.clear();
      const BoundParams bb = BoundParams::bind(tape, net.params(), &out.grad_log_pb);
      const ad::Var lpb = net.log_pb(tape, bb, next, in);
      rec.log_pb_total += tape.scalar(lpb);
      tape.backward(lpb);
    }
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
  return out;
}

double tb_loss_full_tape(const PolicyNet& net, const ColoringEnv& env, const PolicyInputs& in,
                         const TrajectoryRecord& traj, double log_reward, BackwardMode bm, PolicyGrads* grads) {
  ad::Tape t;
  const BoundParams b = BoundParams::bind(t, net.params(), grads);
  ad::Mat lz(1, 1);
  lz(0, 0) = net.params().log_z;
  ad::Mat lz_grad = ad::Mat::Zero(1, 1);
  ad::Var total = grads != nullptr ? t.param(lz, &lz_grad) : t.constant(lz);
  EnvState s = env.init();
  for (const auto& st : traj.steps) {
    const ForwardResult f = net.forward(t, b, s, env.legal_mask(s), in);
    total = t.add(total, t.pick(f.log_probs, 0, st.action - 1));
    EnvState next = env.step(s, st.action);
    if (bm == BackwardMode::Learned) total = t.add(total, t.scale(net.log_pb(t, b, next, in), -1.0));
    s = std::move(next);
  }
  ad::Var loss = t.square(t.add_scalar(total, -log_reward));
  const double v = t.scalar(loss);
  if (grads != nullptr) {
    t.backward(loss);
    grads->log_z += lz_grad(0, 0);
  }
  return v;
}

void adam_step(PolicyParams& p, AdamState& st, const PolicyGrads& g, double lr, double lr_log_z, double beta1,
               double beta2, double eps) {
  st.t += 1;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    auto m = st.m.t[i].array();
    auto v = st.v.t[i].array();
    const auto gi = g.t[i].array();
    m = beta1 * m + (1.0 - beta1) * gi;
    v = beta2 * v + (1.0 - beta2) * gi.square();
    p.t[i].array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
  }
  st.m.log_z = beta1 * st.m.log_z + (1.0 - beta1) * g.log_z;
  st.v.log_z = beta2 * st.v.log_z + (1.0 - beta2) * g.log_z * g.log_z;
  p.log_z -= lr_log_z * (st.m.log_z / c1) / (std::sqrt(st.v.log_z / c2) + eps);
}

namespace {

std::string engine_state(const Rng& rng) {
  std::ostringstream os;
  os << rng.engine();
  return os.str();
}

SampleRecord to_sample(const TrajectoryRecord& r, long long iter, long long idx) {
  SampleRecord s;
  s.iter = iter;
  s.idx = idx;
  s.colors = r.terminal.colors;
  s.n_groups = r.n_groups;
  if (r.valid && std::isfinite(r.eps2M)) s.eps2M = r.eps2M;
  s.reward = r.reward;
  s.valid = r.valid;
  s.logpf = r.log_pf_total();
  return s;
}

}  // namespace

TrainResult train(const TrainConfig& cfg_in, const CommutGraph& graph, const std::vector<double>& weights,
                  const RewardFn& reward_fn, TrainObserver* observer) {
  cfg_in.validate();
  TrainConfig cfg = cfg_in;
  const ColoringEnv env(graph, cfg.env);
  cfg.policy.K = env.K();
  cfg.policy.learned_backward = cfg.backward_mode == BackwardMode::Learned;

  Rng master(cfg.seed);
  PolicyNet net(cfg.policy, PolicyParams::init(cfg.policy, master));
  AdamState adam = AdamState::zeros_like(net.params());
  const PolicyInputs in{&graph, weights, -1.0};
  if (cfg.policy.use_weights && weights.size() != graph.n_nodes()) {
    throw std::invalid_argument("coefficient vector does not match graph size");
  }

  TrainResult res;
  res.tracker = TopKTracker(cfg.top_k);
  res.samples.reserve(static_cast<std::size_t>(cfg.total_samples));

  auto make_ckpt = [&](long long iter) {
    return Checkpoint{net.config(), net.params(), adam, iter, engine_state(master)};
  };

  const long long n_iter = cfg.n_iterations();
  long long drawn = 0;
  for (long long iter = 0; iter < n_iter; ++iter) {
    const int batch = static_cast<int>(std::min<long long>(cfg.n_update, cfg.total_samples - drawn));
    const std::uint64_t iter_seed = master.next();
    std::vector<TrajectoryGrad> trajs(static_cast<std::size_t>(batch));
    auto work = [&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        Rng rng = Rng::derive(iter_seed, {static_cast<std::uint64_t>(i)});
        trajs[static_cast<std::size_t>(i)] =
            sample_with_grads(net, env, in, reward_fn, cfg.backward_mode, rng);
      }
    };
    const int nw = std::min(cfg.workers, batch);
    if (nw <= 1) {
      work(0, batch);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errs(static_cast<std::size_t>(nw));
      for (int w = 0; w < nw; ++w) {
        const int lo = batch * w / nw;
        const int hi = batch * (w + 1) / nw;
        pool.emplace_back([&, w, lo, hi] {
          try {
            work(lo, hi);
          } catch (...) {
            errs[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& e : errs) {
        if (e) std::rethrow_exception(e);
      }
    }

    // reduce in trajectory order so the update does not depend on worker count
    PolicyGrads grad = PolicyParams::zeros_like(net.params());
    double loss_sum = 0.0;
    int n_loss = 0;
    int n_valid = 0;
    for (int i = 0; i < batch; ++i) {
      const auto& tr = trajs[static_cast<std::size_t>(i)].record;
      if (tr.valid) ++n_valid;
      if (!tr.valid && cfg.invalid_mode == InvalidMode::Skip) continue;
      ++n_loss;
    }
    for (int i = 0; i < batch; ++i) {
      const auto& tg = trajs[static_cast<std::size_t>(i)];
      const auto& tr = tg.record;
      SampleRecord s = to_sample(tr, iter, drawn + i);
      res.tracker.offer(s);
      if (observer != nullptr) observer->on_sample(s);
      res.samples.push_back(std::move(s));
      if (!tr.valid && cfg.invalid_mode == InvalidMode::Skip) continue;
      const double log_r = std::log(std::max(tr.reward, cfg.reward.reward_floor));
      const double delta = net.params().log_z + tr.log_pf_total() - log_r - tr.log_pb_total;
      const double loss = delta * delta;
      if (!std::isfinite(loss)) {
        if (observer != nullptr) observer->on_checkpoint(make_ckpt(iter), true);
        throw NumericError("non-finite trajectory balance loss at iteration " + std::to_string(iter));
      }
      loss_sum += loss;
      const double c = 2.0 * delta / static_cast<double>(n_loss);
      grad.axpy(c, tg.grad_log_pf);
      if (cfg.backward_mode == BackwardMode::Learned) grad.axpy(-c, tg.grad_log_pb);
      grad.log_z += c;
    }
    drawn += batch;
    res.n_valid += n_valid;

    if (n_loss > 0) {
      if (!grad.all_finite()) {
        if (observer != nullptr) observer->on_checkpoint(make_ckpt(iter), true);
        throw NumericError("non-finite gradient at iteration " + std::to_string(iter));
      }
      adam_step(net.params(), adam, grad, cfg.lr, cfg.effective_lr_log_z(), cfg.beta1, cfg.beta2, cfg.adam_eps);
      if (!net.params().all_finite() || net.params().max_abs() > cfg.max_param_abs) {
        if (observer != nullptr) observer->on_checkpoint(make_ckpt(iter), true);
        throw NumericError("parameter magnitude exceeded " + std::to_string(cfg.max_param_abs) + " at iteration " +
                           std::to_string(iter));
      }
    }

    IterationStats st;
    st.iter = iter;
    st.mean_loss = n_loss > 0 ? loss_sum / n_loss : std::numeric_limits<double>::quiet_NaN();
    st.log_z = net.params().log_z;
    st.valid_frac = static_cast<double>(n_valid) / batch;
    st.mean_topk = res.tracker.mean();
    st.std_topk = res.tracker.stddev();
    st.best_eps2M = res.tracker.best();
    res.trace.push_back(st);
    if (observer != nullptr) {
      observer->on_iteration(st);
      const bool last = iter + 1 == n_iter;
      if (last || (cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0)) {
        observer->on_checkpoint(make_ckpt(iter + 1), last);
      }
    }
  }
  res.params = net.params();
  res.policy = net.config();
  return res;
}

}  // namespace qmg
