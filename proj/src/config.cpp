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

#include "qmg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "qmg/error.hpp"

namespace qmg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) throw ConfigError("expected a finite number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& v) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return x;
}

int to_int32(const std::string& v) {
  const long long x = to_int(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError("integer out of range: " + v);
  }
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> s = {
      {"hamiltonian", [](RunConfig& c, const std::string& v) { c.hamiltonian = v; }},
      {"scheme", [](RunConfig& c, const std::string& v) { c.scheme = parse_scheme(v); }},
      {"mapping", [](RunConfig& c, const std::string& v) { c.mapping = v; }},
      {"drop_threshold", [](RunConfig& c, const std::string& v) { c.drop_threshold = to_double(v); }},
      {"max_qubits", [](RunConfig& c, const std::string& v) { c.max_qubits = to_int32(v); }},
      {"total_samples", [](RunConfig& c, const std::string& v) { c.train.total_samples = to_int(v); }},
      {"n_update", [](RunConfig& c, const std::string& v) { c.train.n_update = to_int32(v); }},
      {"lr", [](RunConfig& c, const std::string& v) { c.train.lr = to_double(v); }},
      {"lr_log_z", [](RunConfig& c, const std::string& v) { c.train.lr_log_z = to_double(v); }},
      {"beta1", [](RunConfig& c, const std::string& v) { c.train.beta1 = to_double(v); }},
      {"beta2", [](RunConfig& c, const std::string& v) { c.train.beta2 = to_double(v); }},
      {"adam_eps", [](RunConfig& c, const std::string& v) { c.train.adam_eps = to_double(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.train.seed = to_u64(v); }},
      {"lambda0", [](RunConfig& c, const std::string& v) { c.train.reward.lambda0 = to_double(v); }},
      {"lambda1", [](RunConfig& c, const std::string& v) { c.train.reward.lambda1 = to_double(v); }},
      {"epsilon", [](RunConfig& c, const std::string& v) { c.train.reward.epsilon = to_double(v); }},
      {"reward_floor", [](RunConfig& c, const std::string& v) { c.train.reward.reward_floor = to_double(v); }},
      {"bound_mode", [](RunConfig& c, const std::string& v) { c.train.env.bound = parse_bound_mode(v); }},
      {"fixed_k", [](RunConfig& c, const std::string& v) { c.train.env.fixed_k = to_int32(v); }},
      {"greedy_repeats", [](RunConfig& c, const std::string& v) { c.train.env.greedy_repeats = to_int32(v); }},
      {"symmetry_breaking", [](RunConfig& c, const std::string& v) { c.train.env.symmetry_breaking = to_bool(v); }},
      {"invalid_mode", [](RunConfig& c, const std::string& v) { c.train.invalid_mode = parse_invalid_mode(v); }},
      {"backward_mode", [](RunConfig& c, const std::string& v) { c.train.backward_mode = parse_backward_mode(v); }},
      {"emb_d", [](RunConfig& c, const std::string& v) { c.train.policy.emb_d = to_int32(v); }},
      {"hidden_d", [](RunConfig& c, const std::string& v) { c.train.policy.hidden_d = to_int32(v); }},
      {"use_weights", [](RunConfig& c, const std::string& v) { c.train.policy.use_weights = to_bool(v); }},
      {"checkpoint_every", [](RunConfig& c, const std::string& v) { c.train.checkpoint_every = to_int32(v); }},
      {"top_k", [](RunConfig& c, const std::string& v) { c.train.top_k = to_int32(v); }},
  };
  return s;
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::map<std::string, const Setter*> table;
  for (const auto& [name, fn] : setters()) table[name] = &fn;
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": repeated key '" + key + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    try {
      (*it->second)(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + key + ": " + e.what());
    }
  }
  if (cfg.hamiltonian.empty()) throw ConfigError("missing required key 'hamiltonian'");
  if (cfg.hamiltonian.is_relative()) cfg.hamiltonian = base_dir / cfg.hamiltonian;
  if (cfg.drop_threshold < 0.0) throw ConfigError("drop_threshold must be >= 0");
  if (cfg.max_qubits < 1) throw ConfigError("max_qubits must be >= 1");
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

}  // namespace qmg
