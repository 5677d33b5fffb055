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

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mgtd {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

/// Text to token ids. Implementations are stateless and thread-safe.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  /// Identity string stamped on every statistic computed with this tokenizer.
  virtual std::string id() const = 0;
  virtual TokenSeq encode(std::string_view text) const = 0;
  virtual std::size_t count(std::string_view text) const { return encode(text).size(); }
};

/// One token per UTF-8 byte; vocabulary of 256. Used by the toy backend.
class ByteTokenizer final : public Tokenizer {
 public:
  std::string id() const override { return "byte-256"; }
  TokenSeq encode(std::string_view text) const override;
  std::size_t count(std::string_view text) const override { return text.size(); }
};

/// Splits on ASCII whitespace; ids are a 31-bit FNV-1a hash of each piece.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::string id() const override { return "whitespace"; }
  TokenSeq encode(std::string_view text) const override;
  std::size_t count(std::string_view text) const override;
};

/// "byte" / "byte-256" or "whitespace".
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name);

}  // namespace mgtd
