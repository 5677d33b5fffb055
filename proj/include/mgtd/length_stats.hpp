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
#include <map>
#include <string>
#include <vector>

#include "mgtd/corpus.hpp"
#include "mgtd/tokenizer.hpp"

namespace mgtd {

constexpr std::size_t kDefaultBucketWidth = 64;

/// Token-length distribution of one label.
struct LengthSummary {
  std::size_t records = 0;
  /// counts[i] is the number of records with length in [i*w, (i+1)*w).
  std::vector<std::size_t> histogram;
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  std::size_t max = 0;

  bool operator==(const LengthSummary&) const = default;
};

struct TokenLengthStats {
  std::string tokenizer;
  std::size_t bucket_width = kDefaultBucketWidth;
  std::size_t records = 0;
  /// Only labels present in the corpus appear.
  std::map<Label, LengthSummary> per_label;

  bool operator==(const TokenLengthStats&) const = default;
};

/// Per-label histograms of token counts. Quantiles use linear interpolation
/// between order statistics. Invariant under record reordering.
TokenLengthStats token_length_stats(const Corpus& corpus, const Tokenizer& tokenizer,
                                    std::size_t bucket_width = kDefaultBucketWidth);

/// Same statistics from precomputed (label, length) pairs.
TokenLengthStats length_stats_from_counts(const std::vector<std::pair<Label, std::size_t>>& lengths,
                                          std::string tokenizer_id, std::size_t bucket_width);

/// Train-vs-test shift of mean token length per label.
struct LengthShift {
  std::string tokenizer;
  std::map<Label, double> reference_mean;
  std::map<Label, double> candidate_mean;
  /// True when the machine class is longer on average in the candidate set.
  bool machine_longer_in_candidate = false;
};

/// Both stats must come from the same tokenizer.
LengthShift compare_lengths(const TokenLengthStats& reference, const TokenLengthStats& candidate);

}  // namespace mgtd
