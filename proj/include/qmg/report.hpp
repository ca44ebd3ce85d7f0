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

#ifndef QMG_REPORT_HPP
#define QMG_REPORT_HPP

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmg/trainer.hpp"

namespace qmg {

/// One JSON object per line, no trailing newline.
std::string sample_to_jsonl(const SampleRecord& s);
/// Throws ParseError on malformed input.
SampleRecord sample_from_jsonl(const std::string& line);

struct SampleLog {
  std::vector<SampleRecord> records;
  std::size_t n_corrupt = 0;
};

/// Reads samples.jsonl; corrupt lines are skipped and reported on warn.
SampleLog read_samples(const std::filesystem::path& path, std::ostream* warn);

/// Top-k trace replayed from a log, one row per iteration present in it.
std::vector<IterationStats> topk_trace(const std::vector<SampleRecord>& records, int k);

std::string topk_csv_header(int k);
std::string topk_csv_row(const IterationStats& st);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  long long count = 0;
};

/// Equal-width bins over [min, max] of the values; the maximum lands in the last bin.
std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins);

std::vector<ParetoPoint> pareto_points(const std::vector<SampleRecord>& records);

void write_pareto_csv(const std::filesystem::path& path, const std::vector<ParetoPoint>& front);
void write_topk_csv(const std::filesystem::path& path, const std::vector<IterationStats>& trace, int k);
void write_histogram_csv(const std::filesystem::path& path, const std::vector<HistogramBin>& bins);

struct ReportSummary {
  std::size_t n_records = 0;
  std::size_t n_corrupt = 0;
  std::size_t n_valid = 0;
  std::size_t pareto_size = 0;
};

/// Regenerates pareto.csv, topk.csv and histogram.csv from samples.jsonl.
ReportSummary run_report(const std::filesystem::path& run_dir, int bins, int k, std::ostream* warn);

/// Streams a training run into a run directory: samples.jsonl, topk.csv and
/// checkpoints/ckpt_{iter}.json.
class RunWriter : public TrainObserver {
 public:
  RunWriter(const std::filesystem::path& dir, int k);

  void on_sample(const SampleRecord& s) override;
  void on_iteration(const IterationStats& st) override;
  void on_checkpoint(const Checkpoint& c, bool final) override;

 private:
  std::filesystem::path dir_;
  std::ofstream samples_;
  std::ofstream topk_;
};

}  // namespace qmg

#endif  // QMG_REPORT_HPP
