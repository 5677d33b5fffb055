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

#include "mgtd/synthetic.hpp"

#include <cmath>

#include <fmt/core.h>

#include "mgtd/error.hpp"
#include "mgtd/rng.hpp"

namespace mgtd {

Corpus synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.count == 0) throw ValidationError("synthetic corpus needs at least one record");
  if (!(spec.machine_fraction >= 0.0 && spec.machine_fraction <= 1.0)) {
    throw ValidationError("machine_fraction must be in [0, 1]");
  }
  if (spec.min_words == 0 || spec.max_words < spec.min_words) throw ValidationError("invalid word range");
  if (spec.sources.empty() || spec.generators.empty()) throw ValidationError("sources and generators must be non-empty");

  Rng rng(spec.seed);
  const auto machines = static_cast<std::size_t>(std::llround(static_cast<double>(spec.count) * spec.machine_fraction));
  std::vector<Label> labels(spec.count, Label::Human);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(machines), Label::Machine);
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[uniform_index(rng, i)]);

  std::vector<Record> records;
  records.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Record r;
    r.id = fmt::format("{}-{}", spec.id_prefix, i);
    r.label = labels[i];
    r.split = spec.split;
    const char base = r.label == Label::Human ? 'a' : 'n';
    const auto words = spec.min_words + uniform_index(rng, spec.max_words - spec.min_words + 1);
    for (std::size_t w = 0; w < words; ++w) {
      if (w > 0) r.text += ' ';
      const auto len = 2 + uniform_index(rng, 5);
      for (std::size_t k = 0; k < len; ++k) r.text += static_cast<char>(base + uniform_index(rng, 13));
    }
    r.source = spec.sources[uniform_index(rng, spec.sources.size())];
    r.generator = r.label == Label::Human ? "human" : spec.generators[uniform_index(rng, spec.generators.size())];
    records.push_back(std::move(r));
  }
  return Corpus::from_records(std::move(records));
}

}  // namespace mgtd
