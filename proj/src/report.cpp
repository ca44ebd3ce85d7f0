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

#include "qmg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <ostream>
#include <stdexcept>

#include "qmg/error.hpp"

namespace qmg {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

std::string sample_to_jsonl(const SampleRecord& s) {
  nlohmann::ordered_json j;
  j["iter"] = s.iter;
  j["idx"] = s.idx;
  j["colors"] = s.colors;
  j["n_groups"] = s.n_groups;
  j["eps2M"] = s.eps2M ? nlohmann::ordered_json(*s.eps2M) : nlohmann::ordered_json(nullptr);
  j["reward"] = s.reward;
  j["valid"] = s.valid;
  j["logpf"] = s.logpf;
  return j.dump();
}

SampleRecord sample_from_jsonl(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  try {
    SampleRecord s;
    s.iter = j.at("iter").get<long long>();
    s.idx = j.at("idx").get<long long>();
    s.colors = j.at("colors").get<std::vector<int>>();
    s.n_groups = j.at("n_groups").get<int>();
    const auto& e = j.at("eps2M");
    if (!e.is_null()) s.eps2M = e.get<double>();
    s.reward = j.at("reward").get<double>();
    s.valid = j.at("valid").get<bool>();
    s.logpf = j.at("logpf").get<double>();
    if (s.valid && !s.eps2M) throw ParseError("valid sample without eps2M");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad sample record: ") + e.what());
  }
}

SampleLog read_samples(const std::filesystem::path& path, std::ostream* warn) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  SampleLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      log.records.push_back(sample_from_jsonl(line));
    } catch (const ParseError& e) {
      ++log.n_corrupt;
      if (warn != nullptr) *warn << "warning: " << path.filename().string() << " line " << lineno << ": " << e.what() << '\n';
    }
  }
  return log;
}

std::vector<IterationStats> topk_trace(const std::vector<SampleRecord>& records, int k) {
  TopKTracker tr(k);
  std::vector<IterationStats> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    tr.offer(records[i]);
    const bool boundary = i + 1 == records.size() || records[i + 1].iter != records[i].iter;
    if (!boundary) continue;
    IterationStats st;
    st.iter = records[i].iter;
    st.mean_topk = tr.mean();
    st.std_topk = tr.stddev();
    st.best_eps2M = tr.best();
    out.push_back(st);
  }
  return out;
}

std::string topk_csv_header(int k) {
  const std::string ks = std::to_string(k);
  return "iter,mean_top" + ks + ",std_top" + ks + ",best_eps2M";
}

std::string topk_csv_row(const IterationStats& st) {
  return std::to_string(st.iter) + "," + fmt(st.mean_topk) + "," + fmt(st.std_topk) + "," + fmt(st.best_eps2M);
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  std::vector<HistogramBin> out;
  if (values.empty()) return out;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double hi = *mx;
  const double w = (hi - lo) / bins;
  out.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[static_cast<std::size_t>(b)].lo = lo + w * b;
    out[static_cast<std::size_t>(b)].hi = b + 1 == bins ? hi : lo + w * (b + 1);
  }
  for (double v : values) {
    int b = w > 0.0 ? static_cast<int>(std::floor((v - lo) / w)) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++out[static_cast<std::size_t>(b)].count;
  }
  return out;
}

std::vector<ParetoPoint> pareto_points(const std::vector<SampleRecord>& records) {
  std::vector<ParetoPoint> pts;
  for (const auto& r : records) {
    if (r.valid && r.eps2M && std::isfinite(*r.eps2M)) pts.push_back({*r.eps2M, r.n_groups, r.idx});
  }
  return pts;
}

void write_pareto_csv(const std::filesystem::path& path, const std::vector<ParetoPoint>& front) {
  auto out = open_out(path);
  out << "eps2M,n_groups,sample_idx\n";
  for (const auto& p : front) out << fmt(p.eps2M) << ',' << p.n_groups << ',' << p.sample_idx << '\n';
}

void write_topk_csv(const std::filesystem::path& path, const std::vector<IterationStats>& trace, int k) {
  auto out = open_out(path);
  out << topk_csv_header(k) << '\n';
  for (const auto& st : trace) out << topk_csv_row(st) << '\n';
}

void write_histogram_csv(const std::filesystem::path& path, const std::vector<HistogramBin>& bins) {
  auto out = open_out(path);
  out << "bin,lo,hi,count\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    out << i << ',' << fmt(bins[i].lo) << ',' << fmt(bins[i].hi) << ',' << bins[i].count << '\n';
  }
}

ReportSummary run_report(const std::filesystem::path& run_dir, int bins, int k, std::ostream* warn) {
  const auto log_path = run_dir / "samples.jsonl";
  if (!std::filesystem::exists(log_path)) throw ConfigError("no samples.jsonl in " + run_dir.string());
  const SampleLog log = read_samples(log_path, warn);
  ReportSummary sum;
  sum.n_records = log.records.size();
  sum.n_corrupt = log.n_corrupt;
  std::vector<double> values;
  for (const auto& r : log.records) {
    if (r.valid && r.eps2M) values.push_back(*r.eps2M);
  }
  sum.n_valid = values.size();
  const auto front = pareto_front(pareto_points(log.records));
  sum.pareto_size = front.size();
  write_pareto_csv(run_dir / "pareto.csv", front);
  write_topk_csv(run_dir / "topk.csv", topk_trace(log.records, k), k);
  write_histogram_csv(run_dir / "histogram.csv", histogram(values, bins));
  return sum;
}

RunWriter::RunWriter(const std::filesystem::path& dir, int k) : dir_(dir) {
  std::filesystem::create_directories(dir_ / "checkpoints");
  samples_ = open_out(dir_ / "samples.jsonl");
  topk_ = open_out(dir_ / "topk.csv");
  topk_ << topk_csv_header(k) << '\n';
}

void RunWriter::on_sample(const SampleRecord& s) { samples_ << sample_to_jsonl(s) << '\n'; }

void RunWriter::on_iteration(const IterationStats& st) {
  topk_ << topk_csv_row(st) << '\n';
  samples_.flush();
  topk_.flush();
}

void RunWriter::on_checkpoint(const Checkpoint& c, bool final) {
  (void)final;
  samples_.flush();
  save_checkpoint(dir_ / "checkpoints" / ("ckpt_" + std::to_string(c.iteration) + ".json"), c);
}

}  // namespace qmg
