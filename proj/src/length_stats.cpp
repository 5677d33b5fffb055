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

#include "mgtd/length_stats.hpp"

#include <algorithm>
#include <cmath>

#include "mgtd/error.hpp"

namespace mgtd {
namespace {

double quantile(const std::vector<std::size_t>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) +
         frac * (static_cast<double>(sorted[hi]) - static_cast<double>(sorted[lo]));
}

LengthSummary summarize(std::vector<std::size_t> lengths, std::size_t bucket_width) {
  std::sort(lengths.begin(), lengths.end());
  LengthSummary s;
  s.records = lengths.size();
  s.max = lengths.back();
  s.histogram.assign(s.max / bucket_width + 1, 0);
  std::size_t total = 0;
  for (auto n : lengths) {
    ++s.histogram[n / bucket_width];
    total += n;
  }
  s.mean = static_cast<double>(total) / static_cast<double>(lengths.size());
  s.median = quantile(lengths, 0.5);
  s.p95 = quantile(lengths, 0.95);
  return s;
}

}  // namespace

TokenLengthStats length_stats_from_counts(const std::vector<std::pair<Label, std::size_t>>& lengths,
                                          std::string tokenizer_id, std::size_t bucket_width) {
  if (bucket_width == 0) throw ValidationError("bucket width must be >= 1");
  if (lengths.empty()) throw ValidationError("no records");

  std::map<Label, std::vector<std::size_t>> by_label;
  for (const auto& [label, n] : lengths) by_label[label].push_back(n);

  TokenLengthStats stats;
  stats.tokenizer = std::move(tokenizer_id);
  stats.bucket_width = bucket_width;
  stats.records = lengths.size();
  for (auto& [label, values] : by_label) {
    stats.per_label.emplace(label, summarize(std::move(values), bucket_width));
  }
  return stats;
}

TokenLengthStats token_length_stats(const Corpus& corpus, const Tokenizer& tokenizer,
                                    std::size_t bucket_width) {
  if (corpus.empty()) throw ValidationError("no records");
  std::vector<std::pair<Label, std::size_t>> lengths;
  lengths.reserve(corpus.size());
  for (const auto& r : corpus) lengths.emplace_back(r.label, tokenizer.count(r.text));
  return length_stats_from_counts(lengths, tokenizer.id(), bucket_width);
}

LengthShift compare_lengths(const TokenLengthStats& reference, const TokenLengthStats& candidate) {
  if (reference.tokenizer != candidate.tokenizer) {
    throw ValidationError("cannot compare length stats from tokenizers '" + reference.tokenizer +
                          "' and '" + candidate.tokenizer + "'");
  }
  LengthShift shift;
  shift.tokenizer = reference.tokenizer;
  for (const auto& [label, s] : reference.per_label) shift.reference_mean[label] = s.mean;
  for (const auto& [label, s] : candidate.per_label) shift.candidate_mean[label] = s.mean;
  auto ref = shift.reference_mean.find(Label::Machine);
  auto cand = shift.candidate_mean.find(Label::Machine);
  shift.machine_longer_in_candidate =
      ref != shift.reference_mean.end() && cand != shift.candidate_mean.end() && cand->second > ref->second;
  return shift;
}

}  // namespace mgtd
