// Copyright 2026 The mgtdetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgtd/evaluator.hpp"
#include "mgtd/length_stats.hpp"
#include "mgtd/trainer.hpp"

namespace mgtd {

/// A rendered chart: SVG document plus the CSV table it was drawn from.
struct Figure {
  std::string svg;
  std::string csv;
};

/// Writes `figure.svg` to `out` and the table next to it with a .csv
/// extension. Returns the sidecar path.
std::filesystem::path write_figure(const Figure& figure, const std::filesystem::path& out);

/// Overlaid per-label token-length histograms on shared buckets.
/// Sidecar: bucket_start,bucket_end,human,machine.
Figure histogram_figure(const TokenLengthStats& stats, std::string_view title = "Token length distribution");
void render_histogram(const TokenLengthStats& stats, const std::filesystem::path& out,
                      std::string_view title = "Token length distribution");

/// One line per label comparing mean lengths, plus the machine-class flag.
std::string length_shift_summary(const LengthShift& shift);

enum class BreakdownMetric : std::uint8_t { Accuracy, F1Macro };

std::string_view to_string(BreakdownMetric metric);

/// Bars sorted by the metric (descending, ties by group name), each
/// annotated with its record count. Sidecar: group,count,accuracy,f1_macro
/// in drawing order.
Figure breakdown_figure(const Breakdown& breakdown, BreakdownMetric metric = BreakdownMetric::F1Macro,
                        std::string_view title = "Metric by group");
void render_breakdown(const Breakdown& breakdown, const std::filesystem::path& out,
                      BreakdownMetric metric = BreakdownMetric::F1Macro, std::string_view title = "Metric by group");

/// Share of records per group, sorted by count. Sidecar: group,count,percent.
Figure group_distribution_figure(const std::map<std::string, std::size_t>& counts,
                                 std::string_view title = "Records by group");
void render_group_distribution(const std::map<std::string, std::size_t>& counts, const std::filesystem::path& out,
                               std::string_view title = "Records by group");

/// Row-normalized percentages: each actual class sums to 100.
struct ConfusionPercentages {
  double tn = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  double tp = 0.0;
};

ConfusionPercentages row_normalized(const ConfusionMatrix& cm);

/// 2x2 heatmap with raw counts and row-normalized percentages. `approximate`
/// marks figures whose source numbers are known to be rounded or inconsistent.
/// Sidecar: actual,predicted,count,row_percent,approximate.
Figure confusion_figure(const ConfusionMatrix& cm, bool approximate = false,
                        std::string_view title = "Confusion matrix");
void render_confusion(const ConfusionMatrix& cm, const std::filesystem::path& out, bool approximate = false,
                      std::string_view title = "Confusion matrix");

struct FigureSelection {
  bool histograms = true;
  bool breakdowns = true;
  bool confusion = true;
};

/// "all", "hist", "breakdown" or "confusion"; comma-separated lists allowed.
FigureSelection parse_figure_selection(std::string_view spec);

/// Everything a report is built from.
struct RunArtifacts {
  std::filesystem::path run_dir;
  /// Training config snapshot (TOML); empty when the run has none.
  std::string config_toml;
  std::vector<EpochLog> epoch_logs;
  MetricReport metrics;
  std::optional<TokenLengthStats> train_lengths;
  std::optional<TokenLengthStats> test_lengths;
  bool confusion_approximate = false;
};

/// Reads metrics.json (required) and, when present, config.toml,
/// epoch_logs.csv, lengths_train.json and lengths_test.json.
RunArtifacts load_run(const std::filesystem::path& run_dir);

struct ManifestEntry {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  /// Sorted by path; manifest.json itself is not listed.
  std::vector<ManifestEntry> files;

  bool operator==(const Manifest&) const = default;
};

/// Writes metrics.json, breakdown CSVs, selected figures, the config
/// snapshot, epoch logs, summary.md and manifest.json. Output is staged in
/// a sibling directory and moved into place; on failure nothing is left
/// behind and `out_dir` is untouched.
Manifest emit_report(const RunArtifacts& run, const std::filesystem::path& out_dir,
                     const FigureSelection& figures = {});

Manifest read_manifest(const std::filesystem::path& path);

}  // namespace mgtd
