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

#include "mgtd/evaluator.hpp"

#include <sstream>
#include <unordered_map>

#include <fmt/core.h>
#include "json.hpp"

#include "csv.hpp"
#include "mgtd/error.hpp"

namespace mgtd {
namespace {

double class_f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  if (tp + fn == 0) return 0.0;
  const auto denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

Prediction decide(std::string id, const Logits& logits, TieBreak tie) {
  Prediction p;
  p.id = std::move(id);
  if (logits[1] > logits[0]) {
    p.label = Label::Machine;
  } else if (logits[1] < logits[0]) {
    p.label = Label::Human;
  } else {
    p.label = tie == TieBreak::Machine ? Label::Machine : Label::Human;
  }
  p.score = machine_probability(logits);
  return p;
}

std::vector<Prediction> predict(ModelBackend& backend, const Corpus& corpus, const TruncationPolicy& policy,
                                std::size_t batch_size, TieBreak tie) {
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  std::vector<Prediction> out;
  out.reserve(corpus.size());
  for (std::size_t start = 0; start < corpus.size(); start += batch_size) {
    const std::size_t stop = std::min(corpus.size(), start + batch_size);
    std::vector<TokenSeq> batch;
    batch.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) batch.push_back(truncate(backend.encode(corpus[i].text), policy));
    const auto logits = backend.forward(batch);
    if (logits.size() != batch.size()) throw std::runtime_error("backend returned the wrong number of logits");
    for (std::size_t i = start; i < stop; ++i) out.push_back(decide(corpus[i].id, logits[i - start], tie));
  }
  return out;
}

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError(fmt::format("{} predictions for {} gold labels", predicted.size(), gold.size()));
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool pred_machine = predicted[i] == Label::Machine;
    if (gold[i] == Label::Machine) {
      ++(pred_machine ? cm.tp : cm.fn);
    } else {
      ++(pred_machine ? cm.fp : cm.tn);
    }
  }
  return cm;
}

F1Scores f1_scores(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("cannot score an empty confusion matrix");
  F1Scores s;
  s.f1_machine = class_f1(cm.tp, cm.fp, cm.fn);
  s.f1_human = class_f1(cm.tn, cm.fn, cm.fp);
  s.macro = 0.5 * (s.f1_human + s.f1_machine);
  const auto tp = cm.tp + cm.tn;
  const auto fp = cm.fp + cm.fn;
  const auto fn = cm.fn + cm.fp;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.micro = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  s.accuracy = static_cast<double>(tp) / static_cast<double>(cm.total());
  return s;
}

Breakdown breakdown_by(const Corpus& records, std::span<const Label> predicted, GroupField field) {
  if (field == GroupField::Label) throw ValidationError("breakdown by label is not meaningful");
  if (predicted.size() != records.size()) {
    throw ValidationError(fmt::format("{} predictions for {} records", predicted.size(), records.size()));
  }
  std::map<std::string, ConfusionMatrix> cms;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& cm = cms[records[i].group_key(field)];
    const Label gold[] = {records[i].label};
    const Label pred[] = {predicted[i]};
    const auto one = confusion(pred, gold);
    cm.tn += one.tn;
    cm.fp += one.fp;
    cm.fn += one.fn;
    cm.tp += one.tp;
  }
  Breakdown out;
  for (const auto& [group, cm] : cms) {
    const auto scores = f1_scores(cm);
    out.emplace(group, GroupMetrics{static_cast<std::size_t>(cm.total()), scores.accuracy, scores.macro, cm});
  }
  return out;
}

MetricReport evaluate(const Corpus& gold, std::span<const Label> predicted, const std::vector<GroupField>& fields) {
  const auto labels = gold.labels();
  MetricReport report;
  report.confusion = confusion(predicted, labels);
  report.scores = f1_scores(report.confusion);
  for (auto field : fields) report.per_group.emplace(std::string(to_string(field)), breakdown_by(gold, predicted, field));
  return report;
}

std::vector<Label> align_predictions(const Corpus& gold, std::span<const Prediction> predictions) {
  std::unordered_map<std::string, Label> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, p.label).second) throw ValidationError("duplicate prediction for id " + p.id);
  }
  std::vector<Label> out;
  out.reserve(gold.size());
  std::unordered_map<std::string, bool> seen;
  for (const auto& r : gold) {
    if (!seen.emplace(r.id, true).second) throw ValidationError("gold corpus repeats id " + r.id);
    auto it = by_id.find(r.id);
    if (it == by_id.end()) throw ValidationError("no prediction for id " + r.id);
    out.push_back(it->second);
  }
  if (by_id.size() != gold.size()) {
    for (const auto& p : predictions) {
      if (!seen.contains(p.id)) throw ValidationError("prediction for unknown id " + p.id);
    }
  }
  return out;
}

std::string predictions_jsonl(std::span<const Prediction> predictions) {
  std::string out;
  for (const auto& p : predictions) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["label"] = static_cast<int>(p.label);
    j["score"] = p.score;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Prediction> parse_predictions_jsonl(const std::string& text) {
  std::vector<Prediction> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ValidationError(fmt::format("malformed JSON, predictions line {}", line_no));
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("label")) {
      throw ValidationError(fmt::format("prediction needs 'id' and 'label', line {}", line_no));
    }
    Prediction p;
    if (j["id"].is_string()) {
      p.id = j["id"].get<std::string>();
    } else if (j["id"].is_number_integer()) {
      p.id = std::to_string(j["id"].get<std::int64_t>());
    } else {
      throw ValidationError(fmt::format("'id' must be a string or integer, line {}", line_no));
    }
    if (!j["label"].is_number_integer() || (j["label"] != 0 && j["label"] != 1)) {
      throw ValidationError(fmt::format("label out of range, predictions line {}", line_no));
    }
    p.label = j["label"] == 1 ? Label::Machine : Label::Human;
    p.score = j.contains("score") && j["score"].is_number() ? j["score"].get<double>()
                                                           : static_cast<double>(static_cast<int>(p.label));
    out.push_back(std::move(p));
  }
  return out;
}

std::string breakdown_csv(const Breakdown& breakdown) {
  std::string out = "group,count,accuracy,f1_macro\n";
  for (const auto& [group, m] : breakdown) {
    out += fmt::format("{},{},{},{}\n", csv_field(group), m.count, m.accuracy, m.f1_macro);
  }
  return out;
}

}  // namespace mgtd
