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

#include "doctest.h"
#include "mgtd/error.hpp"
#include "mgtd/evaluator.hpp"
#include "mgtd/io.hpp"
#include "mgtd/rng.hpp"
#include "mgtd/synthetic.hpp"
#include "mgtd/toy_model.hpp"
#include "support.hpp"

using namespace mgtd;
using mgtd::testing::make_record;

namespace {

struct BruteForce {
  double f1_human;
  double f1_machine;
  double macro;
  double micro;
  double accuracy;
};

// Precision and recall per class straight from the example lists; micro
// pools every class's true positives, false positives and false negatives.
BruteForce brute_force(const std::vector<Label>& pred, const std::vector<Label>& gold) {
  double f1[2] = {0, 0};
  double pooled_tp = 0;
  double pooled_fp = 0;
  double pooled_fn = 0;
  for (int c = 0; c < 2; ++c) {
    const auto cls = static_cast<Label>(c);
    double tp = 0;
    double fp = 0;
    double fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == cls && gold[i] == cls) tp += 1;
      if (pred[i] == cls && gold[i] != cls) fp += 1;
      if (pred[i] != cls && gold[i] == cls) fn += 1;
    }
    pooled_tp += tp;
    pooled_fp += fp;
    pooled_fn += fn;
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    f1[c] = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  double correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == gold[i] ? 1 : 0;
  const double mp = pooled_tp / (pooled_tp + pooled_fp);
  const double mr = pooled_tp / (pooled_tp + pooled_fn);
  const double micro = mp + mr > 0 ? 2 * mp * mr / (mp + mr) : 0.0;
  return {f1[0], f1[1], (f1[0] + f1[1]) / 2, micro, correct / static_cast<double>(pred.size())};
}

std::vector<Label> random_labels(Rng& rng, std::size_t n, double p_machine) {
  std::vector<Label> out(n);
  for (auto& l : out) l = uniform01(rng) < p_machine ? Label::Machine : Label::Human;
  return out;
}

std::vector<Label> flip(std::vector<Label> v) {
  for (auto& l : v) l = l == Label::Human ? Label::Machine : Label::Human;
  return v;
}

}  // namespace

TEST_CASE("hand-computed example") {
  const ConfusionMatrix cm{4, 1, 2, 3};
  const auto s = f1_scores(cm);
  CHECK(s.f1_machine == doctest::Approx(2.0 / 3.0));
  CHECK(s.f1_human == doctest::Approx(8.0 / 11.0));
  CHECK(s.macro == doctest::Approx(0.6970).epsilon(1e-4));
  CHECK(s.micro == doctest::Approx(0.7));
  CHECK(s.accuracy == doctest::Approx(0.7));
}

TEST_CASE("perfect predictions") {
  const auto s = f1_scores({7, 0, 0, 9});
  CHECK(s.macro == 1.0);
  CHECK(s.micro == 1.0);
}

TEST_CASE("zero-support class scores zero") {
  const auto s = f1_scores({5, 0, 0, 0});
  CHECK(s.f1_human == 1.0);
  CHECK(s.f1_machine == 0.0);
  CHECK(s.macro == 0.5);
  CHECK_THROWS_AS(f1_scores({}), ValidationError);
}

TEST_CASE("confusion counts") {
  const std::vector<Label> pred{Label::Machine, Label::Machine, Label::Human, Label::Human, Label::Machine};
  const std::vector<Label> gold{Label::Machine, Label::Human, Label::Human, Label::Machine, Label::Machine};
  const auto cm = confusion(pred, gold);
  CHECK(cm == ConfusionMatrix{1, 1, 1, 2});
  CHECK(cm.total() == 5);
  const std::vector<Label> shorter{Label::Human};
  CHECK_THROWS_AS(confusion(shorter, gold), ValidationError);
}

TEST_CASE("counts behind the leaderboard scores") {
  // Solve for the matrix from 73,941 records, 39,266 machine, 44,808
  // predicted machine and accuracy 0.8333.
  const std::uint64_t total = 73'941;
  const std::uint64_t pos = 39'266;
  const std::uint64_t pred_pos = 44'808;
  const std::uint64_t neg = total - pos;
  // tp + tn = correct and tp - tn = pred_pos - neg.
  const auto correct = static_cast<std::uint64_t>(std::llround(0.8333 * static_cast<double>(total)));
  const std::uint64_t tp = (correct + pred_pos - neg) / 2;
  const std::uint64_t tn = correct - tp;
  const ConfusionMatrix cm{tn, pred_pos - tp, pos - tp, tp};
  CHECK(cm == ConfusionMatrix{25'741, 8'934, 3'392, 35'874});
  CHECK(cm.total() == total);
  const auto s = f1_scores(cm);
  CHECK(std::round(s.macro * 1e4) / 1e4 == 0.8301);
  CHECK(std::round(s.micro * 1e4) / 1e4 == 0.8333);
}

TEST_CASE("metrics agree with the brute-force oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + uniform_index(rng, 500);
    const double skew = uniform01(rng);
    const auto gold = random_labels(rng, n, skew);
    const auto pred = random_labels(rng, n, uniform01(rng));
    const auto s = f1_scores(confusion(pred, gold));
    const auto o = brute_force(pred, gold);
    CHECK(std::abs(s.f1_human - o.f1_human) <= 1e-12);
    CHECK(std::abs(s.f1_machine - o.f1_machine) <= 1e-12);
    CHECK(std::abs(s.macro - o.macro) <= 1e-12);
    CHECK(std::abs(s.micro - o.micro) <= 1e-12);
    CHECK(std::abs(s.micro - s.accuracy) <= 1e-12);
    for (double v : {s.f1_human, s.f1_machine, s.macro, s.micro, s.accuracy}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("metrics are invariant under joint permutation and label swap") {
  Rng rng(100);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + uniform_index(rng, 200);
    auto gold = random_labels(rng, n, 0.4);
    auto pred = random_labels(rng, n, 0.6);
    const auto base = f1_scores(confusion(pred, gold));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    std::vector<Label> pg(n);
    std::vector<Label> pp(n);
    for (std::size_t i = 0; i < n; ++i) {
      pg[i] = gold[order[i]];
      pp[i] = pred[order[i]];
    }
    const auto permuted = f1_scores(confusion(pp, pg));
    CHECK(permuted.macro == base.macro);
    CHECK(permuted.micro == base.micro);

    const auto swapped = f1_scores(confusion(flip(pred), flip(gold)));
    CHECK(swapped.macro == doctest::Approx(base.macro).epsilon(1e-15));
    CHECK(swapped.micro == base.micro);
    CHECK(swapped.f1_human == base.f1_machine);
  }
}

TEST_CASE("decide breaks ties toward human by default") {
  CHECK(decide("a", {0.3, 0.3}).label == Label::Human);
  CHECK(decide("a", {0.3, 0.3}, TieBreak::Machine).label == Label::Machine);
  const auto p = decide("b", {0.0, 2.0});
  CHECK(p.label == Label::Machine);
  CHECK(p.score == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
}

TEST_CASE("breakdown by source") {
  std::vector<Record> rs;
  std::vector<Label> pred;
  for (int i = 0; i < 4; ++i) {
    rs.push_back(make_record("a" + std::to_string(i), i % 2 ? Label::Machine : Label::Human, "good"));
    pred.push_back(rs.back().label);
  }
  for (int i = 0; i < 3; ++i) {
    rs.push_back(make_record("b" + std::to_string(i), i % 2 ? Label::Machine : Label::Human, "bad"));
    pred.push_back(rs.back().label == Label::Human ? Label::Machine : Label::Human);
  }
  const auto c = Corpus::from_records(rs);
  const auto b = breakdown_by(c, pred, GroupField::Source);
  CHECK(b.at("good").accuracy == 1.0);
  CHECK(b.at("bad").accuracy == 0.0);
  CHECK(b.at("good").count + b.at("bad").count == c.size());
  CHECK_THROWS_AS(breakdown_by(c, pred, GroupField::Label), ValidationError);

  const auto csv = breakdown_csv(b);
  CHECK(csv == "group,count,accuracy,f1_macro\nbad,3,0,0\ngood,4,1,1\n");
}

TEST_CASE("single-class group reports the absent class as zero") {
  const auto c = Corpus::from_records({make_record("x", Label::Machine, "chatgpt"), make_record("y", Label::Machine, "chatgpt")});
  const std::vector<Label> pred{Label::Machine, Label::Human};
  const auto g = breakdown_by(c, pred, GroupField::Source).at("chatgpt");
  CHECK(g.accuracy == 0.5);
  CHECK(g.f1_macro == doctest::Approx((2.0 / 3.0 + 0.0) / 2));
}

TEST_CASE("group counts sum to the corpus") {
  const auto c = synthetic_corpus({.count = 300});
  Rng rng(4);
  const auto pred = random_labels(rng, c.size(), 0.5);
  const auto report = evaluate(c, pred);
  CHECK(report.per_group.size() == 3);
  for (const auto& [field, groups] : report.per_group) {
    std::size_t n = 0;
    for (const auto& [k, g] : groups) {
      n += g.count;
      CHECK(g.confusion.total() == g.count);
    }
    CHECK(n == c.size());
  }
  CHECK(report.confusion.total() == c.size());
}

TEST_CASE("prediction files") {
  std::vector<Prediction> preds{{"a", Label::Machine, 0.75}, {"b", Label::Human, 0.1 + 0.2}};
  const auto text = predictions_jsonl(preds);
  CHECK(text.substr(0, text.find('\n')) == R"({"id":"a","label":1,"score":0.75})");
  CHECK(parse_predictions_jsonl(text) == preds);
  CHECK_THROWS_WITH_AS(parse_predictions_jsonl("{\"id\":\"a\",\"label\":1,\"score\":0.5}\n{\"id\":\"b\"}\n"),
                       doctest::Contains("line 2"), ValidationError);
}

TEST_CASE("alignment by id") {
  const auto gold = Corpus::from_records({make_record("a", Label::Human), make_record("b", Label::Machine)});
  std::vector<Prediction> preds{{"b", Label::Machine, 0.9}, {"a", Label::Machine, 0.6}};
  CHECK(align_predictions(gold, preds) == std::vector<Label>{Label::Machine, Label::Machine});
  preds.push_back({"c", Label::Human, 0.1});
  CHECK_THROWS_AS(align_predictions(gold, preds), ValidationError);
  preds.back().id = "a";
  CHECK_THROWS_AS(align_predictions(gold, preds), ValidationError);
  preds.pop_back();
  preds.pop_back();
  CHECK_THROWS_AS(align_predictions(gold, preds), ValidationError);
}

TEST_CASE("metric report json round trip") {
  const auto c = synthetic_corpus({.count = 60});
  Rng rng(5);
  const auto report = evaluate(c, random_labels(rng, c.size(), 0.5));
  const nlohmann::json j = report;
  const auto back = j.get<MetricReport>();
  CHECK(back.confusion == report.confusion);
  CHECK(back.scores.macro == report.scores.macro);
  CHECK(back.per_group.at("source").at("alpha").f1_macro == report.per_group.at("source").at("alpha").f1_macro);
}

TEST_CASE("predict returns one prediction per record in order") {
  const auto c = synthetic_corpus({.count = 23});
  ToyBackend m(ToyBackend::make_descriptor(), 3);
  const auto preds = predict(m, c, {16}, 5);
  REQUIRE(preds.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(preds[i].id == c[i].id);
    const auto z = m.logits(truncate(m.encode(c[i].text), {16}));
    CHECK(preds[i] == decide(c[i].id, z));
  }
}
