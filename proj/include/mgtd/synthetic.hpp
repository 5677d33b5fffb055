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
#include <string>
#include <vector>

#include "mgtd/corpus.hpp"

namespace mgtd {

/// Linearly separable toy corpus: human texts use only the letters a-m,
/// machine texts only n-z.
struct SyntheticSpec {
  std::size_t count = 500;
  double machine_fraction = 0.5;
  std::size_t min_words = 4;
  std::size_t max_words = 12;
  std::uint64_t seed = 7;
  Split split = Split::Train;
  std::string id_prefix = "syn";
  std::vector<std::string> sources = {"alpha", "beta", "gamma"};
  std::vector<std::string> generators = {"gen-a", "gen-b"};
};

/// Exactly llround(count * machine_fraction) machine records, in shuffled
/// order. Human records get generator "human".
Corpus synthetic_corpus(const SyntheticSpec& spec);

}  // namespace mgtd
