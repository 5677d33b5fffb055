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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mgtd/digest.hpp"
#include "mgtd/error.hpp"
#include "mgtd/io.hpp"
#include "mgtd/reporter.hpp"
#include "mgtd/rng.hpp"
#include "mgtd/synthetic.hpp"
#include "support.hpp"

using namespace mgtd;
using mgtd::testing::TempDir;
using mgtd::testing::read_text;

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

GroupMetrics group(std::size_t count, double acc, double f1) {
  GroupMetrics g;
  g.count = count;
  g.accuracy = acc;
  g.f1_macro = f1;
  return g;
}

RunArtifacts fixed_run() {
  const auto corpus = synthetic_corpus({.count = 120, .seed = 4});
  std::vector<Label> pred;
  Rng rng(1);
  for (const auto& r : corpus) pred.push_back(uniform01(rng) < 0.85 ? r.label : Label::Machine);
  RunArtifacts run;
  run.metrics = evaluate(corpus, pred);
  run.config_toml = "name = \"fixed\"\n";
  run.epoch_logs = {{1, 0.5, 0.4, 0.8, 1.0}, {2, 0.3, 0.35, 0.85, 1.0}};
  const ByteTokenizer tok;
  run.train_lengths = token_length_stats(corpus, tok, 16);
  run.test_lengths = token_length_stats(synthetic_corpus({.count = 80, .max_words = 20, .seed = 5}), tok, 16);
  return run;
}

}  // namespace

TEST_CASE("breakdown bars are sorted descending with counts") {
  Breakdown b{{"alpha", group(10, 0.0, 0.0)}, {"beta", group(7, 1.0, 1.0)}};
  const auto fig = breakdown_figure(b, BreakdownMetric::Accuracy);
  const auto rows = csv_rows(fig.csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == "beta");
  CHECK(rows[1][0] == "alpha");
  CHECK(fig.svg.find("n=7") != std::string::npos);
  CHECK(fig.svg.find("n=10") != std::string::npos);
  CHECK(fig.svg.find("n=7") < fig.svg.find("n=10"));

  b = {{"only", group(3, 0.5, 0.4)}};
  CHECK(csv_rows(breakdown_figure(b).csv).size() == 1);
  CHECK_THROWS_AS(breakdown_figure(Breakdown{}), ValidationError);
}

TEST_CASE("ties keep group-name order") {
  Breakdown b{{"c", group(1, 0.5, 0.5)}, {"a", group(1, 0.5, 0.5)}, {"b", group(1, 0.9, 0.9)}};
  const auto rows = csv_rows(breakdown_figure(b).csv);
  CHECK(rows[0][0] == "b");
  CHECK(rows[1][0] == "a");
  CHECK(rows[2][0] == "c");
}

TEST_CASE("breakdown sidecar round-trips the plotted values") {
  Rng rng(2);
  Breakdown b;
  for (int i = 0; i < 12; ++i) b["g" + std::to_string(i)] = group(1 + uniform_index(rng, 999), uniform01(rng), uniform01(rng));
  for (auto metric : {BreakdownMetric::F1Macro, BreakdownMetric::Accuracy}) {
    const auto rows = csv_rows(breakdown_figure(b, metric).csv);
    REQUIRE(rows.size() == b.size());
    double last = 2.0;
    for (const auto& r : rows) {
      const auto& g = b.at(r[0]);
      CHECK(std::stoul(r[1]) == g.count);
      CHECK(std::stod(r[2]) == g.accuracy);
      CHECK(std::stod(r[3]) == g.f1_macro);
      const double v = metric == BreakdownMetric::Accuracy ? g.accuracy : g.f1_macro;
      CHECK(v <= last);
      last = v;
    }
  }
}

TEST_CASE("confusion percentages") {
  auto p = row_normalized({1, 1, 1, 1});
  CHECK(p.tn == 50.0);
  CHECK(p.fp == 50.0);
  CHECK(p.fn == 50.0);
  CHECK(p.tp == 50.0);
  p = row_normalized({5, 0, 0, 5});
  CHECK(p.tn == 100.0);
  CHECK(p.tp == 100.0);
  CHECK(p.fp == 0.0);

  // Row-normalized, the derived leaderboard matrix gives 74 / 26 / 9 / 91.
  p = row_normalized({25'741, 8'934, 3'392, 35'874});
  CHECK(std::round(p.tn) == 74);
  CHECK(std::round(p.fp) == 26);
  CHECK(std::round(p.fn) == 9);
  CHECK(std::round(p.tp) == 91);

  const auto fig = confusion_figure({1, 1, 1, 1}, true);
  const auto rows = csv_rows(fig.csv);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r[2] == "1");
    CHECK(std::stod(r[3]) == 50.0);
    CHECK(r[4] == "true");
  }
  CHECK(fig.svg.find("approximate") != std::string::npos);
  CHECK(confusion_figure({1, 1, 1, 1}, false).svg.find("approximate") == std::string::npos);
  CHECK_THROWS_AS(confusion_figure({}), ValidationError);
}

TEST_CASE("histogram sidecar") {
  const auto stats = length_stats_from_counts({{Label::Human, 3}, {Label::Machine, 12}, {Label::Machine, 14}}, "t", 10);
  const auto rows = csv_rows(histogram_figure(stats).csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"0", "10", "1", "0"});
  CHECK(rows[1] == std::vector<std::string>{"10", "20", "0", "2"});
  CHECK_THROWS_AS(histogram_figure(TokenLengthStats{}), ValidationError);

  const auto single = length_stats_from_counts({{Label::Human, 3}}, "t", 10);
  CHECK(csv_rows(histogram_figure(single).csv).size() == 1);
}

TEST_CASE("distribution sidecar") {
  const auto rows = csv_rows(group_distribution_figure({{"hc3", 1}, {"mage", 3}}).csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == "mage");
  CHECK(std::stod(rows[0][2]) == 75.0);
}

TEST_CASE("write_figure puts the sidecar next to the svg") {
  TempDir dir;
  const auto sidecar = write_figure(confusion_figure({2, 1, 0, 3}), dir / "cm.svg");
  CHECK(sidecar == dir / "cm.csv");
  CHECK(read_text(dir / "cm.svg").rfind("<?xml", 0) == 0);
  CHECK(read_text(dir / "cm.svg").find("<svg ") != std::string::npos);
  CHECK(read_text(sidecar).rfind("actual,predicted", 0) == 0);
}

TEST_CASE("figure selection parsing") {
  auto s = parse_figure_selection("all");
  CHECK((s.histograms && s.breakdowns && s.confusion));
  s = parse_figure_selection("hist,confusion");
  CHECK(s.histograms);
  CHECK_FALSE(s.breakdowns);
  CHECK(s.confusion);
  CHECK_THROWS_AS(parse_figure_selection("pie"), ValidationError);
}

TEST_CASE("report lists every file with its digest and is reproducible") {
  const auto run = fixed_run();
  TempDir dir;
  const auto m1 = emit_report(run, dir / "r1");
  const auto m2 = emit_report(run, dir / "r2");
  CHECK(m1 == m2);
  CHECK(read_text(dir / "r1" / "manifest.json") == read_text(dir / "r2" / "manifest.json"));

  std::size_t on_disk = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "r1")) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") ++on_disk;
  }
  CHECK(on_disk == m1.files.size());
  for (const auto& f : m1.files) {
    CAPTURE(f.path);
    CHECK(sha256_file(dir / "r1" / f.path) == f.sha256);
    CHECK(std::filesystem::file_size(dir / "r1" / f.path) == f.bytes);
  }
  CHECK(std::is_sorted(m1.files.begin(), m1.files.end(), [](const auto& a, const auto& b) { return a.path < b.path; }));
  CHECK(read_manifest(dir / "r1" / "manifest.json") == m1);

  for (const char* expected : {"metrics.json", "summary.md", "config.toml", "epoch_logs.csv", "breakdown_source.csv",
                               "length_shift.json", "figures/confusion.svg", "figures/confusion.csv",
                               "figures/lengths_train.svg", "figures/breakdown_source_f1_macro.svg",
                               "figures/distribution_generator.csv"}) {
    CAPTURE(expected);
    CHECK(std::any_of(m1.files.begin(), m1.files.end(), [&](const auto& f) { return f.path == expected; }));
  }
  CHECK_FALSE(std::filesystem::exists(dir / "r1.partial"));
}

TEST_CASE("figure selection limits the output") {
  TempDir dir;
  const auto m = emit_report(fixed_run(), dir / "r", parse_figure_selection("confusion"));
  for (const auto& f : m.files) {
    if (f.path.rfind("figures/", 0) == 0) CHECK(f.path.rfind("figures/confusion", 0) == 0);
  }
}

TEST_CASE("failed report leaves nothing behind") {
  auto run = fixed_run();
  run.test_lengths->tokenizer = "other";  // incompatible with the train stats
  TempDir dir;
  CHECK_THROWS_AS(emit_report(run, dir / "bad"), ValidationError);
  CHECK_FALSE(std::filesystem::exists(dir / "bad"));
  CHECK_FALSE(std::filesystem::exists(dir / "bad.partial"));

  // An existing report is untouched by a failed rerun.
  const auto good = emit_report(fixed_run(), dir / "keep");
  CHECK_THROWS_AS(emit_report(run, dir / "keep"), ValidationError);
  CHECK(read_manifest(dir / "keep" / "manifest.json") == good);
}

TEST_CASE("load_run reads what a run directory holds") {
  const auto run = fixed_run();
  TempDir dir;
  write_json_file(dir / "metrics.json", run.metrics);
  write_json_file(dir / "lengths_train.json", *run.train_lengths);
  mgtd::testing::write_text(dir / "epoch_logs.csv", epoch_logs_csv(run.epoch_logs));
  const auto loaded = load_run(dir.path());
  CHECK(loaded.metrics.confusion == run.metrics.confusion);
  CHECK(loaded.train_lengths == run.train_lengths);
  CHECK_FALSE(loaded.test_lengths.has_value());
  CHECK(loaded.epoch_logs.size() == 2);
  CHECK(loaded.config_toml.empty());

  TempDir empty;
  CHECK_THROWS_AS(load_run(empty.path()), ValidationError);
}

TEST_CASE("length shift summary") {
  LengthShift s;
  s.tokenizer = "byte-256";
  s.reference_mean = {{Label::Machine, 10.0}};
  s.candidate_mean = {{Label::Machine, 12.5}};
  s.machine_longer_in_candidate = true;
  const auto text = length_shift_summary(s);
  CHECK(text.find("machine: mean 10.00 -> 12.50 (+2.50)") != std::string::npos);
  CHECK(text.find("machine longer in candidate: yes") != std::string::npos);
}
