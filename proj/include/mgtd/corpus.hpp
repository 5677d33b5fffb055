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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mgtd {

/// Binary detection label. Machine is the positive class.
enum class Label : std::uint8_t { Human = 0, Machine = 1 };

enum class Split : std::uint8_t { Train, Dev, Test };

/// Record fields a corpus can be grouped by.
enum class GroupField : std::uint8_t { Source, Generator, Label, Language };

constexpr std::size_t kNumClasses = 2;

/// Per-label counts indexed by static_cast<size_t>(Label).
using LabelCounts = std::array<std::size_t, kNumClasses>;

constexpr std::size_t index_of(Label label) { return static_cast<std::size_t>(label); }

std::string_view to_string(Label label);
std::string_view to_string(Split split);
std::string_view to_string(GroupField field);

/// Accepts "train", "dev"/"valid"/"validation", "test".
Split parse_split(std::string_view name);
/// Accepts "source", "generator"/"model", "label", "language"/"lang".
GroupField parse_group_field(std::string_view name);
/// Accepts 0/1 or "human"/"machine".
Label parse_label(std::string_view name);

/// One labeled text sample.
struct Record {
  std::string id;
  std::string text;
  Label label = Label::Human;
  std::string source;
  std::string generator;
  std::string language = "en";
  Split split = Split::Train;
  /// True when the file carried the id as a JSON integer.
  bool numeric_id = false;
  /// Keys outside the known schema, mapped to their raw JSON value text.
  std::map<std::string, std::string> extras;

  /// Value of the given grouping field, labels rendered as "human"/"machine".
  std::string group_key(GroupField field) const;

  bool operator==(const Record&) const = default;
};

struct Provenance {
  std::filesystem::path path;
  /// SHA-256 of the source file bytes, or of the JSONL serialization for
  /// derived corpora.
  std::string digest;

  bool operator==(const Provenance&) const = default;
};

/// Immutable, ordered collection of records. Construction validates the
/// record invariants: non-blank text and unique (id, split) pairs.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Record> records, Provenance provenance);

  /// Builds a corpus whose provenance digest is computed from the canonical
  /// JSONL serialization of the records.
  static Corpus from_records(std::vector<Record> records, std::filesystem::path origin = {});

  const std::vector<Record>& records() const { return records_; }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  const Provenance& provenance() const { return provenance_; }

  LabelCounts label_counts() const;
  std::size_t count(Split split, Label label) const;
  std::vector<Label> labels() const;

 private:
  std::vector<Record> records_;
  Provenance provenance_;
};

/// Parses one JSON Lines document. `origin` is used in error messages only.
/// Every record receives the given split tag.
Corpus parse_corpus(std::string_view jsonl, Split split, const std::filesystem::path& origin = "<memory>");

/// Loads a JSON Lines corpus file. Errors name the offending line (1-based)
/// and field.
Corpus load_corpus(const std::filesystem::path& path, Split split);

/// One JSON object per line, known keys first then extras in key order.
std::string serialize_record(const Record& record);
std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Counts records per value of `field`. Values sum to corpus.size().
std::map<std::string, std::size_t> group_counts(const Corpus& corpus, GroupField field);

}  // namespace mgtd
