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

#include "mgtd/sampler.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mgtd/error.hpp"
#include "mgtd/rng.hpp"

namespace mgtd {
namespace {

// Selection sampling (Knuth, Algorithm S): picks exactly `keep` of `n`
// positions, each subset equally likely, in increasing order.
std::vector<bool> select_positions(std::size_t n, std::size_t keep, Rng& rng) {
  std::vector<bool> chosen(n, false);
  std::size_t selected = 0;
  for (std::size_t t = 0; t < n && selected < keep; ++t) {
    const double remaining = static_cast<double>(n - t);
    if (remaining * uniform01(rng) < static_cast<double>(keep - selected)) {
      chosen[t] = true;
      ++selected;
    }
  }
  return chosen;
}

// Target per-class counts: the class that runs out first under the ratio is
// kept whole.
LabelCounts target_counts(const LabelCounts& have, const std::array<double, kNumClasses>& ratio) {
  const double capacity0 = static_cast<double>(have[0]) / ratio[0];
  const double capacity1 = static_cast<double>(have[1]) / ratio[1];
  LabelCounts keep = have;
  if (capacity0 <= capacity1) {
    keep[1] = std::min<std::size_t>(have[1], static_cast<std::size_t>(
                                                 std::llround(static_cast<double>(have[0]) * ratio[1] / ratio[0])));
  } else {
    keep[0] = std::min<std::size_t>(have[0], static_cast<std::size_t>(
                                                 std::llround(static_cast<double>(have[1]) * ratio[0] / ratio[1])));
  }
  return keep;
}

// Indices (into `members`) that survive balancing of one group.
std::vector<std::size_t> balance_group(const Corpus& corpus, const std::vector<std::size_t>& members,
                                       const BalanceSpec& spec, Rng& rng, const std::string& group) {
  std::array<std::vector<std::size_t>, kNumClasses> by_label;
  for (auto i : members) by_label[index_of(corpus[i].label)].push_back(i);
  const LabelCounts have{by_label[0].size(), by_label[1].size()};
  if (have[0] == 0 || have[1] == 0) {
    throw ValidationError(group.empty() ? std::string("cannot balance: corpus has a single class")
                                        : "cannot balance group '" + group + "': it has a single class");
  }
  const LabelCounts keep = target_counts(have, spec.target_ratio);

  std::vector<bool> survive(corpus.size(), false);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (keep[c] == have[c]) {
      for (auto i : by_label[c]) survive[i] = true;
      continue;
    }
    const auto chosen = select_positions(have[c], keep[c], rng);
    for (std::size_t k = 0; k < have[c]; ++k) {
      if (chosen[k]) survive[by_label[c][k]] = true;
    }
  }
  std::vector<std::size_t> out;
  for (auto i : members) {
    if (survive[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

BalanceSpec BalanceSpec::with_human_fraction(double human_fraction, std::uint64_t seed) {
  BalanceSpec spec;
  spec.target_ratio = {human_fraction, 1.0 - human_fraction};
  spec.seed = seed;
  spec.validate();
  return spec;
}

void BalanceSpec::validate() const {
  for (double r : target_ratio) {
    if (!(r > 0.0 && r < 1.0)) throw ValidationError("target ratio components must lie in (0, 1)");
  }
  if (std::abs(target_ratio[0] + target_ratio[1] - 1.0) > 1e-9) {
    throw ValidationError("target ratio components must sum to 1");
  }
}

Corpus balance_downsample(const Corpus& corpus, const BalanceSpec& spec) {
  spec.validate();
  for (const auto& r : corpus) {
    if (r.split != Split::Train) {
      throw ValidationError("balancing applies to training splits only (record '" + r.id + "' is " +
                            std::string(to_string(r.split)) + ")");
    }
  }

  Rng rng(spec.seed);
  std::vector<bool> keep(corpus.size(), false);
  if (spec.group_by) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < corpus.size(); ++i) groups[corpus[i].group_key(*spec.group_by)].push_back(i);
    for (const auto& [name, members] : groups) {
      for (auto i : balance_group(corpus, members, spec, rng, name)) keep[i] = true;
    }
  } else {
    std::vector<std::size_t> all(corpus.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    for (auto i : balance_group(corpus, all, spec, rng, {})) keep[i] = true;
  }

  std::vector<Record> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (keep[i]) out.push_back(corpus[i]);
  }
  return Corpus::from_records(std::move(out), corpus.provenance().path);
}

ClassWeights class_weights(const LabelCounts& counts) {
  std::size_t total = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0) {
      throw ValidationError("class weight undefined: no records with label " +
                            std::string(to_string(static_cast<Label>(c))));
    }
    total += counts[c];
  }
  ClassWeights w;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    w.weight[c] = static_cast<double>(total) / (static_cast<double>(kNumClasses) * static_cast<double>(counts[c]));
  }
  return w;
}

}  // namespace mgtd
