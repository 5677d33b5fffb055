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

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mgtd/corpus.hpp"
#include "mgtd/trainer.hpp"

namespace mgtd {

struct Prediction {
  std::string id;
  Label label = Label::Human;
  /// Probability of the machine class.
  double score = 0.0;

  bool operator==(const Prediction&) const = default;
};

/// Which class wins when both logits are equal.
enum class TieBreak : std::uint8_t { Human, Machine };

Prediction decide(std::string id, const Logits& logits, TieBreak tie = TieBreak::Human);

/// One prediction per record, in corpus order.
std::vector<Prediction> predict(ModelBackend& backend, const Corpus& corpus, const TruncationPolicy& policy,
                                std::size_t batch_size, TieBreak tie = TieBreak::Human);

/// Binary counts with Machine as the positive class.
struct ConfusionMatrix {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const { return tn + fp + fn + tp; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> gold);

struct F1Scores {
  double f1_human = 0.0;
  double f1_machine = 0.0;
  double macro = 0.0;
  double micro = 0.0;
  double accuracy = 0.0;
};

/// Per-class F1 is 0 when the class has zero support or P + R = 0.
F1Scores f1_scores(const ConfusionMatrix& cm);

struct GroupMetrics {
  std::size_t count = 0;
  double accuracy = 0.0;
  double f1_macro = 0.0;
  ConfusionMatrix confusion;
};

using Breakdown = std::map<std::string, GroupMetrics>;

/// Metrics within each value of `field` (source, generator or language).
Breakdown breakdown_by(const Corpus& records, std::span<const Label> predicted, GroupField field);

struct MetricReport {
  F1Scores scores;
  ConfusionMatrix confusion;
  /// Keyed by field name ("source", "generator", "language").
  std::map<std::string, Breakdown> per_group;
};

MetricReport evaluate(const Corpus& gold, std::span<const Label> predicted,
                      const std::vector<GroupField>& fields = {GroupField::Source, GroupField::Generator,
                                                               GroupField::Language});

/// Orders predictions by the gold corpus ids. Missing, extra or duplicate
/// ids are errors.
std::vector<Label> align_predictions(const Corpus& gold, std::span<const Prediction> predictions);

/// {"id": ..., "label": 0|1, "score": float} per line.
std::string predictions_jsonl(std::span<const Prediction> predictions);
std::vector<Prediction> parse_predictions_jsonl(const std::string& text);

/// group,count,accuracy,f1_macro
std::string breakdown_csv(const Breakdown& breakdown);

}  // namespace mgtd
