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

#include "mgtd/tokenizer.hpp"

#include "mgtd/error.hpp"

namespace mgtd {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

template <typename Fn>
void for_each_piece(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) fn(text.substr(start, i - start));
  }
}

}  // namespace

TokenSeq ByteTokenizer::encode(std::string_view text) const {
  TokenSeq ids;
  ids.reserve(text.size());
  for (unsigned char c : text) ids.push_back(static_cast<TokenId>(c));
  return ids;
}

TokenSeq WhitespaceTokenizer::encode(std::string_view text) const {
  TokenSeq ids;
  for_each_piece(text, [&](std::string_view piece) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : piece) {
      h ^= c;
      h *= 16777619u;
    }
    ids.push_back(static_cast<TokenId>(h & 0x7FFFFFFFu));
  });
  return ids;
}

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
  std::size_t n = 0;
  for_each_piece(text, [&](std::string_view) { ++n; });
  return n;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name) {
  if (name == "byte" || name == "byte-256") return std::make_unique<ByteTokenizer>();
  if (name == "whitespace") return std::make_unique<WhitespaceTokenizer>();
  throw ValidationError("unknown tokenizer '" + std::string(name) + "'");
}

}  // namespace mgtd
