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

#include "qmg/policy.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "qmg/error.hpp"

namespace qmg {

namespace {

constexpr int kCheckpointVersion = 1;

const char* const kNames[kNumParams] = {
    "embedding", "gine1.w1", "gine1.b1", "gine1.w2", "gine1.b2", "gine2.w1", "gine2.b1", "gine2.w2", "gine2.b2",
    "head.w1",   "head.b1",  "head.w2",  "head.b2",  "back.w1",  "back.b1",  "back.w2",  "back.b2",
};

ad::Mat uniform_weights(int fan_in, int fan_out, Rng& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  ad::Mat w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * a;
  return w;
}

ad::Var affine(ad::Tape& t, ad::Var x, ad::Var w, ad::Var b) { return t.add_row(t.matmul(x, w), b); }

nlohmann::json mat_to_json(const ad::Mat& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

ad::Mat mat_from_json(const nlohmann::json& j, const ad::Mat& like, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows != like.rows() || cols != like.cols() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ConfigError("checkpoint tensor " + what + " has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", expected " + std::to_string(like.rows()) + "x" + std::to_string(like.cols()));
  }
  ad::Mat m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

nlohmann::json params_to_json(const PolicyParams& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < kNumParams; ++i) {
    auto e = mat_to_json(p.t[static_cast<std::size_t>(i)]);
    e["name"] = kNames[i];
    arr.push_back(std::move(e));
  }
  return {{"tensors", arr}, {"log_z", p.log_z}};
}

PolicyParams params_from_json(const nlohmann::json& j, const PolicyParams& like) {
  const auto& arr = j.at("tensors");
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(kNumParams)) {
    throw ConfigError("checkpoint has the wrong number of tensors");
  }
  PolicyParams p;
  for (int i = 0; i < kNumParams; ++i) {
    const auto& e = arr[static_cast<std::size_t>(i)];
    if (e.at("name").get<std::string>() != kNames[i]) throw ConfigError("checkpoint tensor order mismatch");
    p.t[static_cast<std::size_t>(i)] = mat_from_json(e, like.t[static_cast<std::size_t>(i)], kNames[i]);
  }
  p.log_z = j.at("log_z").get<double>();
  return p;
}

}  // namespace

void PolicyConfig::validate() const {
  if (emb_d < 1) throw ConfigError("emb_d must be >= 1");
  if (hidden_d < 1) throw ConfigError("hidden_d must be >= 1");
  if (K < 1) throw ConfigError("K must be >= 1");
}

const char* param_name(int id) {
  if (id < 0 || id >= kNumParams) throw std::out_of_range("parameter id");
  return kNames[id];
}

PolicyParams PolicyParams::init(const PolicyConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d0 = cfg.input_d();
  const int h = cfg.hidden_d;
  PolicyParams p;
  p.t[kEmbedding] = ad::Mat(cfg.K + 1, cfg.emb_d);
  for (Eigen::Index i = 0; i < p.t[kEmbedding].size(); ++i) p.t[kEmbedding].data()[i] = rng.normal();
  p.t[kG1W1] = uniform_weights(d0, h, rng);
  p.t[kG1B1] = ad::Mat::Zero(1, h);
  p.t[kG1W2] = uniform_weights(h, h, rng);
  p.t[kG1B2] = ad::Mat::Zero(1, h);
  p.t[kG2W1] = uniform_weights(h, h, rng);
  p.t[kG2B1] = ad::Mat::Zero(1, h);
  p.t[kG2W2] = uniform_weights(h, h, rng);
  p.t[kG2B2] = ad::Mat::Zero(1, h);
  p.t[kHeadW1] = uniform_weights(h, h, rng);
  p.t[kHeadB1] = ad::Mat::Zero(1, h);
  p.t[kHeadW2] = uniform_weights(h, cfg.K, rng);
  p.t[kHeadB2] = ad::Mat::Zero(1, cfg.K);
  if (cfg.learned_backward) {
    p.t[kBackW1] = uniform_weights(h, h, rng);
    p.t[kBackB1] = ad::Mat::Zero(1, h);
    p.t[kBackW2] = uniform_weights(h, cfg.K, rng);
    p.t[kBackB2] = ad::Mat::Zero(1, cfg.K);
  } else {
    for (int i = kBackW1; i <= kBackB2; ++i) p.t[static_cast<std::size_t>(i)] = ad::Mat(0, 0);
  }
  p.log_z = 0.0;
  return p;
}

PolicyParams PolicyParams::zeros_like(const PolicyParams& p) {
  PolicyParams z;
  for (std::size_t i = 0; i < z.t.size(); ++i) z.t[i] = ad::Mat::Zero(p.t[i].rows(), p.t[i].cols());
  z.log_z = 0.0;
  return z;
}

std::size_t PolicyParams::n_scalars() const {
  std::size_t n = 1;
  for (const auto& m : t) n += static_cast<std::size_t>(m.size());
  return n;
}

bool PolicyParams::all_finite() const {
  if (!std::isfinite(log_z)) return false;
  for (const auto& m : t) {
    if (!m.allFinite()) return false;
  }
  return true;
}

double PolicyParams::max_abs() const {
  double mx = std::abs(log_z);
  for (const auto& m : t) {
    if (m.size() > 0) mx = std::max(mx, m.cwiseAbs().maxCoeff());
  }
  return mx;
}

void PolicyParams::set_zero() {
  for (auto& m : t) m.setZero();
  log_z = 0.0;
}

void PolicyParams::axpy(double s, const PolicyParams& o) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].rows() != o.t[i].rows() || t[i].cols() != o.t[i].cols()) {
      throw std::invalid_argument("parameter shape mismatch in axpy");
    }
    t[i] += s * o.t[i];
  }
  log_z += s * o.log_z;
}

std::vector<double> term_weights(const QubitHamiltonian& h) {
  std::vector<double> w;
  w.reserve(h.terms.size());
  for (const auto& term : h.terms) w.push_back(term.coeff);
  return w;
}

ad::Var gine_layer(ad::Tape& t, ad::Var x, const CommutGraph& g, double edge_feat, ad::Var w1, ad::Var b1,
                   ad::Var w2, ad::Var b2) {
  const ad::Mat e = ad::Mat::Constant(1, t.value(x).cols(), edge_feat);
  ad::Var agg = t.gine_aggregate(x, g, e);
  return affine(t, t.relu(affine(t, agg, w1, b1)), w2, b2);
}

BoundParams BoundParams::bind(ad::Tape& t, const PolicyParams& p, PolicyGrads* grads) {
  BoundParams b;
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    b.v[i] = grads != nullptr ? t.param(p.t[i], &grads->t[i]) : t.constant(p.t[i]);
  }
  return b;
}

PolicyNet::PolicyNet(PolicyConfig cfg, PolicyParams params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  if (params_.t[kEmbedding].rows() != cfg_.K + 1 || params_.t[kEmbedding].cols() != cfg_.emb_d ||
      params_.t[kG1W1].rows() != cfg_.input_d() || params_.t[kHeadW2].cols() != cfg_.K) {
    throw ConfigError("policy parameters do not match the configuration");
  }
}

ad::Var PolicyNet::pooled_nodes(ad::Tape& t, const BoundParams& b, const std::vector<int>& color_ids, int current,
                               const PolicyInputs& in) const {
  const CommutGraph& g = *in.graph;
  const int n = static_cast<int>(g.n_nodes());
  if (static_cast<int>(color_ids.size()) != n) throw std::invalid_argument("state size does not match graph");
  if (cfg_.use_weights && static_cast<int>(in.weights.size()) != n) {
    throw std::invalid_argument("coefficient feature size does not match graph");
  }
  for (int c : color_ids) {
    if (c < 0 || c > cfg_.K) throw std::out_of_range("color id outside 0..K");
  }
  const int extra = cfg_.use_weights ? 2 : 1;
  ad::Mat side = ad::Mat::Zero(n, extra);
  if (cfg_.use_weights) {
    for (int i = 0; i < n; ++i) side(i, 0) = in.weights[static_cast<std::size_t>(i)];
  }
  if (current >= 0 && current < n) side(current, extra - 1) = 1.0;

  ad::Var x = t.concat_cols(t.gather_rows(b.v[kEmbedding], color_ids), t.constant(std::move(side)));
  x = gine_layer(t, x, g, in.edge_feature, b.v[kG1W1], b.v[kG1B1], b.v[kG1W2], b.v[kG1B2]);
  x = gine_layer(t, x, g, in.edge_feature, b.v[kG2W1], b.v[kG2B1], b.v[kG2W2], b.v[kG2B2]);
  return t.sum_rows(x);
}

ad::Var PolicyNet::pooled(ad::Tape& t, const BoundParams& b, const EnvState& s, const PolicyInputs& in) const {
  const std::size_t n = s.coloring.colors.size();
  std::vector<int> ids(n, 0);
  for (int i = 0; i < s.step && static_cast<std::size_t>(i) < n; ++i) {
    ids[static_cast<std::size_t>(i)] = s.coloring.colors[static_cast<std::size_t>(i)];
  }
  return pooled_nodes(t, b, ids, s.step, in);
}

ad::Var PolicyNet::head(ad::Tape& t, const BoundParams& b, ad::Var pooled, const ActionMask& mask) const {
  if (static_cast<int>(mask.allowed.size()) != cfg_.K) throw std::invalid_argument("mask width does not match K");
  if (!mask.any()) throw std::invalid_argument("all colors masked");
  ad::Var logits = affine(t, t.relu(affine(t, pooled, b.v[kHeadW1], b.v[kHeadB1])), b.v[kHeadW2], b.v[kHeadB2]);
  return t.masked_log_softmax(logits, mask.allowed);
}

ForwardResult PolicyNet::forward(ad::Tape& t, const BoundParams& b, const EnvState& s, const ActionMask& mask,
                                 const PolicyInputs& in) const {
  if (static_cast<int>(mask.allowed.size()) != cfg_.K) throw std::invalid_argument("mask width does not match K");
  if (!mask.any()) throw std::invalid_argument("all colors masked");
  ForwardResult r;
  r.pooled = pooled(t, b, s, in);
  r.log_probs = head(t, b, r.pooled, mask);
  return r;
}

std::vector<double> PolicyNet::log_probs(const EnvState& s, const ActionMask& mask, const PolicyInputs& in) const {
  ad::Tape t;
  const BoundParams b = BoundParams::bind(t, params_, nullptr);
  const ad::Mat& lp = t.value(forward(t, b, s, mask, in).log_probs);
  return std::vector<double>(lp.data(), lp.data() + lp.size());
}

ad::Var PolicyNet::log_pb(ad::Tape& t, const BoundParams& b, const EnvState& child, const PolicyInputs& in) const {
  if (!cfg_.learned_backward) throw std::logic_error("policy has no backward head");
  if (child.step < 1) throw std::invalid_argument("initial state has no parent");
  ad::Var p = pooled(t, b, child, in);
  ad::Var logits = affine(t, t.relu(affine(t, p, b.v[kBackW1], b.v[kBackB1])), b.v[kBackW2], b.v[kBackB2]);
  std::vector<char> allowed(static_cast<std::size_t>(cfg_.K), 0);
  const int last = child.coloring.colors[static_cast<std::size_t>(child.step - 1)];
  allowed[static_cast<std::size_t>(last - 1)] = 1;
  return t.pick(t.masked_log_softmax(logits, allowed), 0, last - 1);
}

AdamState AdamState::zeros_like(const PolicyParams& p) {
  return AdamState{PolicyParams::zeros_like(p), PolicyParams::zeros_like(p), 0};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["emb_d"] = c.config.emb_d;
  j["hidden_d"] = c.config.hidden_d;
  j["K"] = c.config.K;
  j["use_weights"] = c.config.use_weights;
  j["learned_backward"] = c.config.learned_backward;
  j["params"] = params_to_json(c.params);
  j["adam"] = {{"m", params_to_json(c.adam.m)}, {"v", params_to_json(c.adam.v)}, {"t", c.adam.t}};
  j["iteration"] = c.iteration;
  j["rng_state"] = c.rng_state;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
    Checkpoint c;
    c.config.emb_d = j.at("emb_d").get<int>();
    c.config.hidden_d = j.at("hidden_d").get<int>();
    c.config.K = j.at("K").get<int>();
    c.config.use_weights = j.at("use_weights").get<bool>();
    c.config.learned_backward = j.at("learned_backward").get<bool>();
    c.config.validate();
    Rng dummy(0);
    const PolicyParams like = PolicyParams::init(c.config, dummy);
    c.params = params_from_json(j.at("params"), like);
    c.adam.m = params_from_json(j.at("adam").at("m"), like);
    c.adam.v = params_from_json(j.at("adam").at("v"), like);
    c.adam.t = j.at("adam").at("t").get<long long>();
    c.iteration = j.at("iteration").get<long long>();
    c.rng_state = j.at("rng_state").get<std::string>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + " is missing fields: " + e.what());
  }
}

}  // namespace qmg
