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

// qmg: graph statistics, baseline groupings, covariance oracle, training and
// reports for Pauli-term measurement grouping.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "qmg/baselines.hpp"
#include "qmg/config.hpp"
#include "qmg/error.hpp"
#include "qmg/graph.hpp"
#include "qmg/pauli.hpp"
#include "qmg/report.hpp"
#include "qmg/trainer.hpp"
#include "qmg/variance.hpp"

#ifndef QMG_VERSION
#define QMG_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace qmg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string hamiltonian;
  std::string scheme = "fc";
  bool complement = false;
  std::string method = "si";
  std::string config;
  std::string out;
  std::string export_path;
  std::optional<std::uint64_t> seed;
  int bins = 50;
  int top_k = 10;
  int max_qubits = 16;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

QubitHamiltonian load_fixture(const std::string& path) {
  if (path.empty()) throw ConfigError("--hamiltonian is required");
  if (!fs::exists(path)) throw ConfigError("hamiltonian file not found: " + path);
  return load_hamiltonian(path);
}

int workers_from_env() {
  const char* w = std::getenv("QMG_WORKERS");
  if (w == nullptr || *w == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(w, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) throw ConfigError(std::string("QMG_WORKERS must be a positive integer, got '") + w + "'");
  return static_cast<int>(v);
}

CovarianceTable oracle_table(const QubitHamiltonian& h, Scheme scheme, const std::string& hash, int max_qubits,
                             double* energy, double* var_h) {
  GroundStateOptions go;
  go.max_qubits = max_qubits;
  const GroundState gs = ground_state(h, go);
  if (energy != nullptr) *energy = gs.energy;
  if (var_h != nullptr) *var_h = total_variance(h, gs.state);
  return build_covariance_table(h, gs.state, build_graph(h, scheme, false), hash);
}

int cmd_graph(const Options& o) {
  const QubitHamiltonian h = load_fixture(o.hamiltonian);
  const CommutGraph g = build_graph(h, parse_scheme(o.scheme), o.complement);
  std::cout << "nodes=" << g.n_nodes() << " edges=" << g.n_edges() << " mean_degree=" << fixed(g.mean_degree(), 2)
            << " max_degree=" << g.max_degree() << '\n';
  if (!o.export_path.empty()) {
    std::ofstream out(o.export_path);
    if (!out) throw std::runtime_error("cannot write " + o.export_path);
    out << g.to_json() << '\n';
  }
  return kExitOk;
}

int cmd_baseline(const Options& o) {
  const QubitHamiltonian h = load_fixture(o.hamiltonian);
  const Scheme scheme = parse_scheme(o.scheme);
  const CommutGraph cg = build_graph(h, scheme, true);
  Coloring c;
  if (o.method == "si") {
    c = sorted_insertion(h, scheme);
  } else if (o.method == "rlf") {
    c = rlf_coloring(cg);
  } else if (o.method == "greedy") {
    c = greedy_color_bound(cg, o.seed.value_or(0)).witness;
  } else {
    throw ConfigError("unknown method '" + o.method + "' (expected si, rlf or greedy)");
  }
  if (!is_valid(cg, c)) throw std::logic_error("baseline produced an invalid grouping");

  nlohmann::ordered_json j;
  j["method"] = o.method;
  j["scheme"] = to_string(scheme);
  j["n_groups"] = c.n_groups();
  j["colors"] = c.colors;
  j["groups"] = groups_of(c);
  std::optional<double> e2m;
  if (static_cast<int>(h.n_qubits) > o.max_qubits) {
    std::cerr << "warning: " << h.n_qubits << " qubits exceeds the oracle cap of " << o.max_qubits
              << "; reporting the grouping without eps2M\n";
  } else {
    const CovarianceTable t = oracle_table(h, scheme, content_hash(o.hamiltonian), o.max_qubits, nullptr, nullptr);
    e2m = eps2M(c, t, h);
  }
  j["eps2M"] = e2m ? nlohmann::ordered_json(*e2m) : nlohmann::ordered_json(nullptr);
  if (!o.out.empty()) {
    std::ofstream out(o.out);
    if (!out) throw std::runtime_error("cannot write " + o.out);
    out << j.dump(2) << '\n';
  }
  if (e2m) std::cout << "eps2M=" << fixed(*e2m, 3) << " ";
  std::cout << "n_groups=" << c.n_groups() << '\n';
  return kExitOk;
}

int cmd_oracle(const Options& o) {
  const QubitHamiltonian h = load_fixture(o.hamiltonian);
  const Scheme scheme = parse_scheme(o.scheme);
  double energy = 0.0;
  double var_h = 0.0;
  const CovarianceTable t = oracle_table(h, scheme, content_hash(o.hamiltonian), o.max_qubits, &energy, &var_h);
  if (!o.out.empty()) save_covariance_table(o.out, t);
  std::cout << "energy=" << fixed(energy, 10) << " var_h=" << std::scientific << var_h << std::defaultfloat
            << " entries=" << t.n_entries() << '\n';
  return kExitOk;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

nlohmann::ordered_json manifest_json(const RunConfig& rc, const std::string& hash, int K, std::size_t n_nodes) {
  const TrainConfig& t = rc.train;
  nlohmann::ordered_json j;
  j["fixture"] = rc.hamiltonian.string();
  j["fixture_hash"] = hash;
  j["scheme"] = to_string(rc.scheme);
  j["mapping"] = rc.mapping;
  j["n_nodes"] = n_nodes;
  j["K"] = K;
  j["train"] = {{"total_samples", t.total_samples},
                {"n_update", t.n_update},
                {"lr", t.lr},
                {"lr_log_z", t.effective_lr_log_z()},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"adam_eps", t.adam_eps},
                {"seed", t.seed},
                {"lambda0", t.reward.lambda0},
                {"lambda1", t.reward.lambda1},
                {"epsilon", t.reward.epsilon},
                {"reward_floor", t.reward.reward_floor},
                {"bound_mode", to_string(t.env.bound)},
                {"fixed_k", t.env.fixed_k},
                {"greedy_repeats", t.env.greedy_repeats},
                {"symmetry_breaking", t.env.symmetry_breaking},
                {"invalid_mode", to_string(t.invalid_mode)},
                {"backward_mode", to_string(t.backward_mode)},
                {"emb_d", t.policy.emb_d},
                {"hidden_d", t.policy.hidden_d},
                {"use_weights", t.policy.use_weights},
                {"checkpoint_every", t.checkpoint_every},
                {"top_k", t.top_k},
                {"workers", t.workers}};
  j["tool_version"] = QMG_VERSION;
  j["created_utc"] = utc_now();
  return j;
}

int cmd_train(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  RunConfig rc = load_run_config(o.config);
  if (o.seed) rc.train.seed = *o.seed;
  rc.train.workers = workers_from_env();
  // everything that can fail on bad input happens before the run dir exists
  const QubitHamiltonian h = [&] {
    if (!fs::exists(rc.hamiltonian)) throw ConfigError("hamiltonian file not found: " + rc.hamiltonian.string());
    LoadOptions lo;
    lo.drop_threshold = rc.drop_threshold;
    return load_hamiltonian(rc.hamiltonian, lo);
  }();
  const std::string hash = content_hash(rc.hamiltonian);
  const CommutGraph cg = build_graph(h, rc.scheme, true);
  const CovarianceTable table = oracle_table(h, rc.scheme, hash, rc.max_qubits, nullptr, nullptr);
  const int K = color_bound(cg, rc.train.env);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  {
    std::ofstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("cannot write manifest in " + dir.string());
    mf << manifest_json(rc, hash, K, cg.n_nodes()).dump(2) << '\n';
  }
  RunWriter writer(dir, rc.train.top_k);
  const TrainResult res =
      train(rc.train, cg, term_weights(h), make_oracle_reward(table, h, rc.train.reward), &writer);
  run_report(dir, o.bins, rc.train.top_k, &std::cerr);

  const double valid_frac = res.samples.empty() ? 0.0 : static_cast<double>(res.n_valid) / res.samples.size();
  if (rc.train.reward.lambda0 == 0.0) {
    int min_groups = 0;
    for (const auto& s : res.samples) {
      if (s.valid && (min_groups == 0 || s.n_groups < min_groups)) min_groups = s.n_groups;
    }
    std::cout << "min n_groups=" << min_groups << '\n';
  }
  if (res.tracker.empty()) {
    std::cout << "best eps2M=none groups=0 valid_frac=" << fixed(valid_frac, 4) << '\n';
  } else {
    const auto& b = res.tracker.entries().front();
    std::cout << "best eps2M=" << fixed(b.eps2M, 6) << " groups=" << b.n_groups << " valid_frac=" << fixed(valid_frac, 4)
              << '\n';
  }
  return kExitOk;
}

int cmd_report(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out (run directory) is required");
  const ReportSummary s = run_report(o.out, o.bins, o.top_k, &std::cerr);
  std::cout << "records=" << s.n_records << " valid=" << s.n_valid << " corrupt=" << s.n_corrupt
            << " pareto=" << s.pareto_size << '\n';
  if (s.n_corrupt > 0) std::cerr << "warning: skipped " << s.n_corrupt << " corrupt line(s)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pauli-term measurement grouping toolkit"};
  app.require_subcommand(1);
  Options o;

  auto add_ham = [&](CLI::App* c) { c->add_option("--hamiltonian", o.hamiltonian, "Path to a .ham file"); };
  auto add_scheme = [&](CLI::App* c) {
    c->add_option("--scheme", o.scheme, "fc or qwc")->check(CLI::IsMember({"fc", "qwc", "FC", "QWC"}));
  };

  CLI::App* g = app.add_subcommand("graph", "Commutativity graph statistics");
  add_ham(g);
  add_scheme(g);
  g->add_flag("--complement", o.complement, "Use the complement (non-commuting) graph");
  g->add_option("--export", o.export_path, "Write the graph as JSON");

  CLI::App* b = app.add_subcommand("baseline", "Heuristic grouping and its eps2M");
  add_ham(b);
  add_scheme(b);
  b->add_option("--method", o.method, "si, rlf or greedy");
  b->add_option("--out", o.out, "Write the grouping as JSON");
  b->add_option("--seed", o.seed, "Seed for the greedy permutation");
  b->add_option("--max-qubits", o.max_qubits, "Ground-state qubit cap");

  CLI::App* r = app.add_subcommand("oracle", "Build and cache the covariance table");
  add_ham(r);
  add_scheme(r);
  r->add_option("--out", o.out, "Write the table as JSON");
  r->add_option("--max-qubits", o.max_qubits, "Ground-state qubit cap");

  CLI::App* t = app.add_subcommand("train", "Train a sampler and write a run directory");
  t->add_option("--config", o.config, "Run config file");
  t->add_option("--out", o.out, "Run directory");
  t->add_option("--seed", o.seed, "Override the config seed");
  t->add_option("--bins", o.bins, "Histogram bins for the final report");

  CLI::App* p = app.add_subcommand("report", "Regenerate CSV reports from samples.jsonl");
  p->add_option("--out", o.out, "Run directory");
  p->add_option("--bins", o.bins, "Histogram bins")->check(CLI::PositiveNumber);
  p->add_option("--top-k", o.top_k, "Top-k size")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (g->parsed()) return cmd_graph(o);
    if (b->parsed()) return cmd_baseline(o);
    if (r->parsed()) return cmd_oracle(o);
    if (t->parsed()) return cmd_train(o);
    if (p->parsed()) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}
