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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mgtd/corpus.hpp"

namespace mgtd::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mgtd-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Record make_record(std::string id, Label label, std::string source = "mage", std::string text = "some text",
                          Split split = Split::Train) {
  Record r;
  r.id = std::move(id);
  r.text = std::move(text);
  r.label = label;
  r.source = std::move(source);
  r.generator = label == Label::Human ? "human" : "gpt";
  r.split = split;
  return r;
}

/// Corpus with the given class counts; ids h0.. and m0.., interleaved.
inline Corpus counts_corpus(std::size_t humans, std::size_t machines, Split split = Split::Train) {
  std::vector<Record> records;
  std::size_t h = 0;
  std::size_t m = 0;
  while (h < humans || m < machines) {
    if (h < humans) {
      records.push_back(make_record("h" + std::to_string(h), Label::Human, "mage", "human text " + std::to_string(h), split));
      ++h;
    }
    if (m < machines) {
      records.push_back(
          make_record("m" + std::to_string(m), Label::Machine, "m4gt", "machine text " + std::to_string(m), split));
      ++m;
    }
  }
  return Corpus::from_records(std::move(records));
}

}  // namespace mgtd::testing
