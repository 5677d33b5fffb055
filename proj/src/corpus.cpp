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

#include "mgtd/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "mgtd/digest.hpp"
#include "mgtd/error.hpp"

namespace mgtd {
namespace {

using ordered_json = nlohmann::ordered_json;

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string where(const std::filesystem::path& origin, std::size_t line) {
  return origin.string() + ", line " + std::to_string(line);
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                              const std::filesystem::path& origin, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw ValidationError(std::string("missing required field '") + key + "', " + where(origin, line));
  }
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key,
                           const std::filesystem::path& origin, std::size_t line) {
  const auto& v = require(obj, key, origin, line);
  if (!v.is_string()) {
    throw ValidationError(std::string("field '") + key + "' must be a string, " + where(origin, line));
  }
  return v.get<std::string>();
}

bool known_key(std::string_view key) {
  return key == "id" || key == "text" || key == "label" || key == "model" || key == "source" ||
         key == "lang";
}

Record parse_record(const nlohmann::json& obj, Split split, const std::filesystem::path& origin,
                    std::size_t line) {
  if (!obj.is_object()) {
    throw ValidationError("malformed line (expected a JSON object), " + where(origin, line));
  }
  Record rec;
  rec.split = split;

  const auto& id = require(obj, "id", origin, line);
  if (id.is_string()) {
    rec.id = id.get<std::string>();
  } else if (id.is_number_integer()) {
    rec.id = id.dump();
    rec.numeric_id = true;
  } else {
    throw ValidationError("field 'id' must be a string or integer, " + where(origin, line));
  }

  rec.text = require_string(obj, "text", origin, line);
  if (is_blank(rec.text)) throw ValidationError("empty text, " + where(origin, line));

  const auto& label = require(obj, "label", origin, line);
  if (!label.is_number_integer()) {
    throw ValidationError("field 'label' must be an integer, " + where(origin, line));
  }
  const auto value = label.get<std::int64_t>();
  if (value != 0 && value != 1) throw ValidationError("label out of range, " + where(origin, line));
  rec.label = static_cast<Label>(value);

  rec.generator = require_string(obj, "model", origin, line);
  rec.source = require_string(obj, "source", origin, line);
  if (auto it = obj.find("lang"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("field 'lang' must be a string, " + where(origin, line));
    rec.language = it->get<std::string>();
  }

  for (const auto& [key, value] : obj.items()) {
    if (!known_key(key)) rec.extras.emplace(key, value.dump());
  }
  return rec;
}

void validate_unique(const std::vector<Record>& records) {
  std::set<std::pair<std::string, Split>> seen;
  for (const auto& r : records) {
    if (is_blank(r.text)) throw ValidationError("record '" + r.id + "' has empty text");
    if (!seen.emplace(r.id, r.split).second) {
      throw ValidationError("duplicate id '" + r.id + "' in split " + std::string(to_string(r.split)));
    }
  }
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::Human ? "human" : "machine"; }

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

std::string_view to_string(GroupField field) {
  switch (field) {
    case GroupField::Source: return "source";
    case GroupField::Generator: return "generator";
    case GroupField::Label: return "label";
    case GroupField::Language: return "language";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  const auto s = lower(name);
  if (s == "train") return Split::Train;
  if (s == "dev" || s == "valid" || s == "validation") return Split::Dev;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split '" + std::string(name) + "'");
}

GroupField parse_group_field(std::string_view name) {
  const auto s = lower(name);
  if (s == "source") return GroupField::Source;
  if (s == "generator" || s == "model") return GroupField::Generator;
  if (s == "label") return GroupField::Label;
  if (s == "language" || s == "lang") return GroupField::Language;
  throw ValidationError("unknown record field '" + std::string(name) + "'");
}

Label parse_label(std::string_view name) {
  const auto s = lower(name);
  if (s == "0" || s == "human") return Label::Human;
  if (s == "1" || s == "machine") return Label::Machine;
  throw ValidationError("unknown label '" + std::string(name) + "'");
}

std::string Record::group_key(GroupField field) const {
  switch (field) {
    case GroupField::Source: return source;
    case GroupField::Generator: return generator;
    case GroupField::Label: return std::string(to_string(label));
    case GroupField::Language: return language;
  }
  return {};
}

Corpus::Corpus(std::vector<Record> records, Provenance provenance)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
  validate_unique(records_);
}

Corpus Corpus::from_records(std::vector<Record> records, std::filesystem::path origin) {
  std::string body;
  for (const auto& r : records) {
    body += serialize_record(r);
    body += '\n';
  }
  return Corpus(std::move(records), Provenance{std::move(origin), sha256_hex(body)});
}

LabelCounts Corpus::label_counts() const {
  LabelCounts counts{};
  for (const auto& r : records_) ++counts[index_of(r.label)];
  return counts;
}

std::size_t Corpus::count(Split split, Label label) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const Record& r) {
    return r.split == split && r.label == label;
  }));
}

std::vector<Label> Corpus::labels() const {
  std::vector<Label> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.label);
  return out;
}

Corpus parse_corpus(std::string_view jsonl, Split split, const std::filesystem::path& origin) {
  std::vector<Record> records;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("malformed JSON, " + where(origin, line_no) + ": " + e.what());
    }
    auto rec = parse_record(obj, split, origin, line_no);
    if (!ids.insert(rec.id).second) {
      throw ValidationError("duplicate id '" + rec.id + "' within split " +
                            std::string(to_string(split)) + ", " + where(origin, line_no));
    }
    records.push_back(std::move(rec));
  }
  return Corpus(std::move(records), Provenance{origin, sha256_hex(jsonl)});
}

Corpus load_corpus(const std::filesystem::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), split, path);
}

std::string serialize_record(const Record& record) {
  ordered_json obj;
  if (record.numeric_id) {
    obj["id"] = nlohmann::json::parse(record.id);
  } else {
    obj["id"] = record.id;
  }
  obj["text"] = record.text;
  obj["label"] = static_cast<int>(record.label);
  obj["model"] = record.generator;
  obj["source"] = record.source;
  obj["lang"] = record.language;
  for (const auto& [key, raw] : record.extras) obj[key] = ordered_json::parse(raw);
  return obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_corpus(corpus);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::map<std::string, std::size_t> group_counts(const Corpus& corpus, GroupField field) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : corpus) ++counts[r.group_key(field)];
  return counts;
}

}  // namespace mgtd
