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

#include <array>
#include <cstdint>
#include <optional>

#include "mgtd/corpus.hpp"

namespace mgtd {

/// Target class proportions for downsampling.
struct BalanceSpec {
  /// {human, machine}; components in (0,1) summing to 1.
  std::array<double, kNumClasses> target_ratio{0.5, 0.5};
  std::uint64_t seed = 0;
  /// When set, each group is balanced independently.
  std::optional<GroupField> group_by;

  static BalanceSpec with_human_fraction(double human_fraction, std::uint64_t seed);
  void validate() const;
};

/// Keeps the limiting class in full and draws the other uniformly without
/// replacement, preserving relative order. Training records only.
Corpus balance_downsample(const Corpus& corpus, const BalanceSpec& spec);

/// Per-class multipliers for the weighted cross-entropy loss.
struct ClassWeights {
  std::array<double, kNumClasses> weight{1.0, 1.0};

  double operator[](Label label) const { return weight[index_of(label)]; }
  static ClassWeights uniform() { return {}; }
};

/// Inverse-frequency weights N / (K * N_c). All counts must be positive.
ClassWeights class_weights(const LabelCounts& counts);

}  // namespace mgtd
