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

#include "mgtd/reporter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "csv.hpp"
#include "json.hpp"
#include "mgtd/digest.hpp"
#include "mgtd/error.hpp"
#include "mgtd/io.hpp"
#include "svg.hpp"

namespace mgtd {
namespace {

namespace fs = std::filesystem;

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 110.0;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

constexpr const char* kHumanColor = "#4c72b0";
constexpr const char* kMachineColor = "#dd8452";
constexpr const char* kBarColor = "#55a868";

const char* label_color(Label label) { return label == Label::Human ? kHumanColor : kMachineColor; }

void write_text(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void y_axis(svg::Canvas& c, double ymax, int ticks, bool percent) {
  c.line(kLeft, kTop, kLeft, kTop + kPlotH);
  c.line(kLeft, kTop + kPlotH, kLeft + kPlotW, kTop + kPlotH);
  for (int i = 0; i <= ticks; ++i) {
    const double v = ymax * i / ticks;
    const double y = kTop + kPlotH - kPlotH * i / ticks;
    c.line(kLeft - 4, y, kLeft, y);
    if (i > 0) c.line(kLeft, y, kLeft + kPlotW, y, "#e0e0e0", 0.5);
    c.text(kLeft - 8, y + 4, percent ? fmt::format("{:.0f}%", 100.0 * v) : fmt::format("{:g}", v), 11.0, "end");
  }
}

void title(svg::Canvas& c, std::string_view text) { c.text(kWidth / 2, 28, text, 16.0, "middle"); }

}  // namespace

fs::path write_figure(const Figure& figure, const fs::path& out) {
  write_text(out, figure.svg);
  auto sidecar = out;
  sidecar.replace_extension(".csv");
  write_text(sidecar, figure.csv);
  return sidecar;
}

Figure histogram_figure(const TokenLengthStats& stats, std::string_view heading) {
  std::size_t buckets = 0;
  std::size_t peak = 0;
  for (const auto& [label, s] : stats.per_label) {
    buckets = std::max(buckets, s.histogram.size());
    for (auto n : s.histogram) peak = std::max(peak, n);
  }
  if (stats.records == 0 || buckets == 0) throw ValidationError("cannot plot empty length statistics");
  if (stats.bucket_width == 0) throw ValidationError("bucket width must be positive");

  auto count_at = [&](Label label, std::size_t i) -> std::size_t {
    auto it = stats.per_label.find(label);
    if (it == stats.per_label.end() || i >= it->second.histogram.size()) return 0;
    return it->second.histogram[i];
  };

  Figure fig;
  fig.csv = "bucket_start,bucket_end,human,machine\n";
  for (std::size_t i = 0; i < buckets; ++i) {
    fig.csv += fmt::format("{},{},{},{}\n", i * stats.bucket_width, (i + 1) * stats.bucket_width,
                           count_at(Label::Human, i), count_at(Label::Machine, i));
  }

  svg::Canvas c(kWidth, kHeight);
  title(c, heading);
  const double ymax = svg::nice_ceiling(static_cast<double>(peak));
  y_axis(c, ymax, 4, false);
  const double bw = kPlotW / static_cast<double>(buckets);
  for (const auto& [label, s] : stats.per_label) {
    for (std::size_t i = 0; i < s.histogram.size(); ++i) {
      if (s.histogram[i] == 0) continue;
      const double h = kPlotH * static_cast<double>(s.histogram[i]) / ymax;
      c.rect(kLeft + bw * static_cast<double>(i), kTop + kPlotH - h, bw, h, label_color(label), 0.55);
    }
  }
  const std::size_t step = std::max<std::size_t>(1, (buckets + 9) / 10);
  for (std::size_t i = 0; i <= buckets; i += step) {
    const double x = kLeft + bw * static_cast<double>(i);
    c.line(x, kTop + kPlotH, x, kTop + kPlotH + 4);
    c.text(x, kTop + kPlotH + 18, fmt::format("{}", i * stats.bucket_width), 11.0, "middle");
  }
  c.text(kLeft + kPlotW / 2, kTop + kPlotH + 44, fmt::format("tokens ({})", stats.tokenizer), 12.0, "middle");
  c.text_rotated(18, kTop + kPlotH / 2, "records", -90.0, 12.0);
  double ly = kTop + 8;
  for (const auto& [label, s] : stats.per_label) {
    c.rect(kLeft + kPlotW - 190, ly - 9, 12, 12, label_color(label), 0.55);
    c.text(kLeft + kPlotW - 172, ly + 1,
           fmt::format("{} (n={}, mean {:.1f})", to_string(label), s.records, s.mean), 11.0);
    ly += 18;
  }
  fig.svg = c.finish();
  return fig;
}

void render_histogram(const TokenLengthStats& stats, const fs::path& out, std::string_view heading) {
  write_figure(histogram_figure(stats, heading), out);
}

std::string length_shift_summary(const LengthShift& shift) {
  std::string out = fmt::format("tokenizer: {}\n", shift.tokenizer);
  for (const auto& [label, ref] : shift.reference_mean) {
    auto it = shift.candidate_mean.find(label);
    if (it == shift.candidate_mean.end()) continue;
    out += fmt::format("{}: mean {:.2f} -> {:.2f} ({:+.2f})\n", to_string(label), ref, it->second, it->second - ref);
  }
  out += fmt::format("machine longer in candidate: {}\n", shift.machine_longer_in_candidate ? "yes" : "no");
  return out;
}

std::string_view to_string(BreakdownMetric metric) {
  return metric == BreakdownMetric::Accuracy ? "accuracy" : "f1_macro";
}

Figure breakdown_figure(const Breakdown& breakdown, BreakdownMetric metric, std::string_view heading) {
  if (breakdown.empty()) throw ValidationError("cannot plot an empty breakdown");
  auto value = [metric](const GroupMetrics& m) { return metric == BreakdownMetric::Accuracy ? m.accuracy : m.f1_macro; };
  std::vector<std::pair<std::string, GroupMetrics>> rows(breakdown.begin(), breakdown.end());
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return value(a.second) > value(b.second); });

  Figure fig;
  fig.csv = "group,count,accuracy,f1_macro\n";
  for (const auto& [group, m] : rows) fig.csv += fmt::format("{},{},{},{}\n", csv_field(group), m.count, m.accuracy, m.f1_macro);

  svg::Canvas c(kWidth, kHeight);
  title(c, heading);
  y_axis(c, 1.0, 5, false);
  const double slot = kPlotW / static_cast<double>(rows.size());
  const double bw = slot * 0.7;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [group, m] = rows[i];
    const double v = std::clamp(value(m), 0.0, 1.0);
    const double x = kLeft + slot * static_cast<double>(i) + (slot - bw) / 2;
    const double h = kPlotH * v;
    c.rect(x, kTop + kPlotH - h, bw, h, kBarColor);
    c.text(x + bw / 2, kTop + kPlotH - h - 16, fmt::format("{:.3f}", value(m)), 10.0, "middle");
    c.text(x + bw / 2, kTop + kPlotH - h - 4, fmt::format("n={}", m.count), 9.0, "middle", "#555555");
    c.text_rotated(x + bw / 2, kTop + kPlotH + 14, group, -35.0, 11.0);
  }
  c.text_rotated(18, kTop + kPlotH / 2, to_string(metric), -90.0, 12.0);
  fig.svg = c.finish();
  return fig;
}

void render_breakdown(const Breakdown& breakdown, const fs::path& out, BreakdownMetric metric,
                      std::string_view heading) {
  write_figure(breakdown_figure(breakdown, metric, heading), out);
}

Figure group_distribution_figure(const std::map<std::string, std::size_t>& counts, std::string_view heading) {
  std::size_t total = 0;
  for (const auto& [group, n] : counts) total += n;
  if (counts.empty() || total == 0) throw ValidationError("cannot plot an empty distribution");
  std::vector<std::pair<std::string, std::size_t>> rows(counts.begin(), counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  Figure fig;
  fig.csv = "group,count,percent\n";
  for (const auto& [group, n] : rows) {
    fig.csv += fmt::format("{},{},{}\n", csv_field(group), n, 100.0 * static_cast<double>(n) / static_cast<double>(total));
  }

  svg::Canvas c(kWidth, kHeight);
  title(c, heading);
  const double ymax = svg::nice_ceiling(static_cast<double>(rows.front().second));
  y_axis(c, ymax, 4, false);
  const double slot = kPlotW / static_cast<double>(rows.size());
  const double bw = slot * 0.7;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [group, n] = rows[i];
    const double x = kLeft + slot * static_cast<double>(i) + (slot - bw) / 2;
    const double h = kPlotH * static_cast<double>(n) / ymax;
    c.rect(x, kTop + kPlotH - h, bw, h, kHumanColor);
    c.text(x + bw / 2, kTop + kPlotH - h - 4,
           fmt::format("{:.1f}%", 100.0 * static_cast<double>(n) / static_cast<double>(total)), 10.0, "middle");
    c.text_rotated(x + bw / 2, kTop + kPlotH + 14, group, -35.0, 11.0);
  }
  c.text_rotated(18, kTop + kPlotH / 2, "records", -90.0, 12.0);
  fig.svg = c.finish();
  return fig;
}

void render_group_distribution(const std::map<std::string, std::size_t>& counts, const fs::path& out,
                               std::string_view heading) {
  write_figure(group_distribution_figure(counts, heading), out);
}

ConfusionPercentages row_normalized(const ConfusionMatrix& cm) {
  ConfusionPercentages p;
  const auto human = cm.tn + cm.fp;
  const auto machine = cm.fn + cm.tp;
  if (human > 0) {
    p.tn = 100.0 * static_cast<double>(cm.tn) / static_cast<double>(human);
    p.fp = 100.0 * static_cast<double>(cm.fp) / static_cast<double>(human);
  }
  if (machine > 0) {
    p.fn = 100.0 * static_cast<double>(cm.fn) / static_cast<double>(machine);
    p.tp = 100.0 * static_cast<double>(cm.tp) / static_cast<double>(machine);
  }
  return p;
}

Figure confusion_figure(const ConfusionMatrix& cm, bool approximate, std::string_view heading) {
  if (cm.total() == 0) throw ValidationError("cannot plot an empty confusion matrix");
  const auto pct = row_normalized(cm);
  struct Cell {
    const char* actual;
    const char* predicted;
    std::uint64_t count;
    double percent;
  };
  const Cell cells[] = {{"human", "human", cm.tn, pct.tn},
                        {"human", "machine", cm.fp, pct.fp},
                        {"machine", "human", cm.fn, pct.fn},
                        {"machine", "machine", cm.tp, pct.tp}};
  Figure fig;
  fig.csv = "actual,predicted,count,row_percent,approximate\n";
  for (const auto& cell : cells) {
    fig.csv += fmt::format("{},{},{},{},{}\n", cell.actual, cell.predicted, cell.count, cell.percent, approximate);
  }

  svg::Canvas c(kWidth, kHeight);
  title(c, heading);
  const double size = 130.0;
  const double x0 = kWidth / 2 - size;
  const double y0 = kTop + 40;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& cell = cells[i];
    const double x = x0 + size * static_cast<double>(i % 2);
    const double y = y0 + size * static_cast<double>(i / 2);
    const double t = cell.percent / 100.0;
    const auto channel = [t](int lo, int hi) { return static_cast<int>(std::lround(lo + (hi - lo) * t)); };
    c.rect(x, y, size, size, fmt::format("#{:02x}{:02x}{:02x}", channel(255, 43), channel(255, 108), channel(255, 176)));
    const char* ink = t > 0.55 ? "#ffffff" : "#222222";
    c.text(x + size / 2, y + size / 2 - 4, fmt::format("{}", cell.count), 16.0, "middle", ink);
    c.text(x + size / 2, y + size / 2 + 18, fmt::format("{:.1f}%", cell.percent), 13.0, "middle", ink);
  }
  c.text(x0 + size / 2, y0 - 10, "predicted human", 12.0, "middle");
  c.text(x0 + 1.5 * size, y0 - 10, "predicted machine", 12.0, "middle");
  c.text(x0 - 10, y0 + size / 2 + 4, "actual human", 12.0, "end");
  c.text(x0 - 10, y0 + 1.5 * size + 4, "actual machine", 12.0, "end");
  c.text(kWidth / 2, y0 + 2 * size + 28, "percentages are normalized per actual class", 11.0, "middle", "#555555");
  if (approximate) {
    c.text(kWidth / 2, y0 + 2 * size + 46, "approximate: source figures are rounded or inconsistent", 11.0, "middle",
           "#b00020");
  }
  fig.svg = c.finish();
  return fig;
}

void render_confusion(const ConfusionMatrix& cm, const fs::path& out, bool approximate, std::string_view heading) {
  write_figure(confusion_figure(cm, approximate, heading), out);
}

FigureSelection parse_figure_selection(std::string_view spec) {
  FigureSelection sel{false, false, false};
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const auto item = spec.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (item == "all") {
      sel = FigureSelection{};
    } else if (item == "hist") {
      sel.histograms = true;
    } else if (item == "breakdown") {
      sel.breakdowns = true;
    } else if (item == "confusion") {
      sel.confusion = true;
    } else {
      throw ValidationError(fmt::format("unknown figure set '{}' (all|hist|breakdown|confusion)", item));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return sel;
}

RunArtifacts load_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ValidationError("run directory not found: " + run_dir.string());
  RunArtifacts run;
  run.run_dir = run_dir;
  const auto metrics = run_dir / "metrics.json";
  if (!fs::exists(metrics)) throw ValidationError("run directory has no metrics.json: " + run_dir.string());
  try {
    run.metrics = read_json_file(metrics).get<MetricReport>();
  } catch (const ValidationError& e) {
    throw ValidationError(metrics.string() + ": " + e.what());
  }
  if (fs::exists(run_dir / "config.toml")) run.config_toml = read_text(run_dir / "config.toml");
  if (fs::exists(run_dir / "epoch_logs.csv")) run.epoch_logs = parse_epoch_logs_csv(read_text(run_dir / "epoch_logs.csv"));
  if (fs::exists(run_dir / "lengths_train.json")) {
    run.train_lengths = read_json_file(run_dir / "lengths_train.json").get<TokenLengthStats>();
  }
  if (fs::exists(run_dir / "lengths_test.json")) {
    run.test_lengths = read_json_file(run_dir / "lengths_test.json").get<TokenLengthStats>();
  }
  return run;
}

namespace {

std::string summary_markdown(const RunArtifacts& run) {
  const auto& s = run.metrics.scores;
  const auto& cm = run.metrics.confusion;
  const auto pct = row_normalized(cm);
  std::string out = "# Run report\n\n";
  out += "| metric | value |\n|---|---|\n";
  out += fmt::format("| f1_macro | {:.4f} |\n| f1_micro | {:.4f} |\n| accuracy | {:.4f} |\n", s.macro, s.micro,
                     s.accuracy);
  out += fmt::format("| f1_human | {:.4f} |\n| f1_machine | {:.4f} |\n\n", s.f1_human, s.f1_machine);
  out += "## Confusion matrix\n\n| actual \\ predicted | human | machine |\n|---|---|---|\n";
  out += fmt::format("| human | {} ({:.1f}%) | {} ({:.1f}%) |\n", cm.tn, pct.tn, cm.fp, pct.fp);
  out += fmt::format("| machine | {} ({:.1f}%) | {} ({:.1f}%) |\n\n", cm.fn, pct.fn, cm.tp, pct.tp);
  out += fmt::format("Predicted machine: {}. Actual machine: {}.\n", cm.fp + cm.tp, cm.fn + cm.tp);
  if (!run.epoch_logs.empty()) {
    out += "\n## Training\n\n| epoch | train loss | valid loss | valid macro F1 |\n|---|---|---|---|\n";
    for (const auto& e : run.epoch_logs) {
      out += fmt::format("| {} | {:.4f} | {:.4f} | {:.4f} |\n", e.epoch, e.train_loss, e.valid_loss, e.valid_macro_f1);
    }
  }
  for (const auto& [field, breakdown] : run.metrics.per_group) {
    out += fmt::format("\n## By {}\n\n| group | count | accuracy | f1_macro |\n|---|---|---|---|\n", field);
    for (const auto& [group, m] : breakdown) {
      out += fmt::format("| {} | {} | {:.4f} | {:.4f} |\n", group, m.count, m.accuracy, m.f1_macro);
    }
  }
  return out;
}

nlohmann::json manifest_json(const Manifest& m) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return nlohmann::json{{"files", files}};
}

void write_report_files(const RunArtifacts& run, const fs::path& dir, const FigureSelection& figures) {
  write_text(dir / "metrics.json", nlohmann::json(run.metrics).dump(2) + "\n");
  for (const auto& [field, breakdown] : run.metrics.per_group) {
    write_text(dir / fmt::format("breakdown_{}.csv", field), breakdown_csv(breakdown));
  }
  if (!run.config_toml.empty()) write_text(dir / "config.toml", run.config_toml);
  if (!run.epoch_logs.empty()) write_text(dir / "epoch_logs.csv", epoch_logs_csv(run.epoch_logs));
  write_text(dir / "summary.md", summary_markdown(run));

  const auto fig_dir = dir / "figures";
  if (figures.histograms) {
    if (run.train_lengths) {
      render_histogram(*run.train_lengths, fig_dir / "lengths_train.svg", "Token length distribution (train)");
    }
    if (run.test_lengths) {
      render_histogram(*run.test_lengths, fig_dir / "lengths_test.svg", "Token length distribution (test)");
    }
    if (run.train_lengths && run.test_lengths) {
      const auto shift = compare_lengths(*run.train_lengths, *run.test_lengths);
      write_text(dir / "length_shift.json", nlohmann::json(shift).dump(2) + "\n");
    }
  }
  if (figures.breakdowns) {
    for (const auto& [field, breakdown] : run.metrics.per_group) {
      if (breakdown.empty()) continue;
      for (auto metric : {BreakdownMetric::F1Macro, BreakdownMetric::Accuracy}) {
        render_breakdown(breakdown, fig_dir / fmt::format("breakdown_{}_{}.svg", field, to_string(metric)), metric,
                         fmt::format("{} by {}", to_string(metric), field));
      }
      std::map<std::string, std::size_t> counts;
      for (const auto& [group, m] : breakdown) counts.emplace(group, m.count);
      render_group_distribution(counts, fig_dir / fmt::format("distribution_{}.svg", field),
                                fmt::format("Records by {}", field));
    }
  }
  if (figures.confusion) {
    render_confusion(run.metrics.confusion, fig_dir / "confusion.svg", run.confusion_approximate);
  }
}

}  // namespace

Manifest emit_report(const RunArtifacts& run, const fs::path& out_dir, const FigureSelection& figures) {
  if (out_dir.empty()) throw ValidationError("output directory is required");
  auto clean = out_dir.lexically_normal();
  if (!clean.has_filename()) clean = clean.parent_path();
  auto staging = clean;
  staging += ".partial";
  std::error_code ec;
  fs::remove_all(staging, ec);
  try {
    fs::create_directories(staging);
    write_report_files(run, staging, figures);

    Manifest manifest;
    for (const auto& entry : fs::recursive_directory_iterator(staging)) {
      if (!entry.is_regular_file()) continue;
      manifest.files.push_back({entry.path().lexically_relative(staging).generic_string(),
                                sha256_file(entry.path()), entry.file_size()});
    }
    std::sort(manifest.files.begin(), manifest.files.end(),
              [](const auto& a, const auto& b) { return a.path < b.path; });
    write_text(staging / "manifest.json", manifest_json(manifest).dump(2) + "\n");

    if (fs::exists(clean)) fs::remove_all(clean);
    fs::rename(staging, clean);
    return manifest;
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
}

Manifest read_manifest(const fs::path& path) {
  const auto j = read_json_file(path);
  Manifest m;
  for (const auto& f : j.at("files")) {
    m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                       f.at("bytes").get<std::uintmax_t>()});
  }
  return m;
}

}  // namespace mgtd
