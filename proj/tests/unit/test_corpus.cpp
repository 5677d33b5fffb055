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

#include <algorithm>
#include <functional>
#include <random>

#include "doctest.h"
#include "mgtd/corpus.hpp"
#include "mgtd/error.hpp"
#include "mgtd/length_stats.hpp"
#include "mgtd/synthetic.hpp"
#include "mgtd/tokenizer.hpp"
#include "support.hpp"

using namespace mgtd;
using mgtd::testing::TempDir;
using mgtd::testing::make_record;
using mgtd::testing::write_text;

namespace {

const char* kSample =
    R"({"id": 1, "text": "first text", "label": 0, "model": "human", "source": "hc3"})"
    "\n"
    R"({"id": "b2", "text": "second text", "label": 1, "model": "gpt-4", "source": "mage", "lang": "de", "topic": {"k": [1, 2]}})"
    "\n"
    "\n"
    R"({"id": 3, "text": "third", "label": 1, "model": "llama", "source": "hc3"})"
    "\n";

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse_corpus reads the shared-task schema") {
  const auto c = parse_corpus(kSample, Split::Train, "train.jsonl");
  REQUIRE(c.size() == 3);
  CHECK(c[0].id == "1");
  CHECK(c[0].numeric_id);
  CHECK(c[0].label == Label::Human);
  CHECK(c[0].generator == "human");
  CHECK(c[0].language == "en");
  CHECK(c[1].id == "b2");
  CHECK_FALSE(c[1].numeric_id);
  CHECK(c[1].label == Label::Machine);
  CHECK(c[1].language == "de");
  CHECK(c[1].extras.at("topic") == R"({"k":[1,2]})");
  CHECK(c.count(Split::Train, Label::Machine) == 2);
  CHECK(c.label_counts() == LabelCounts{1, 2});
}

TEST_CASE("parse errors name the line and field") {
  const std::string good = R"({"id": 1, "text": "a", "label": 0, "model": "h", "source": "s"})";
  auto msg = message_of([&] { parse_corpus(good + "\n{\"id\": 2, \"label\": 1, \"model\": \"m\", \"source\": \"s\"}\n", Split::Train, "f.jsonl"); });
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("'text'") != std::string::npos);

  msg = message_of([&] { parse_corpus(good + "\n\n{not json\n", Split::Train, "f.jsonl"); });
  CHECK(msg.find("line 3") != std::string::npos);

  msg = message_of([&] {
    parse_corpus(R"({"id": 1, "text": "a", "label": 2, "model": "h", "source": "s"})", Split::Train, "f.jsonl");
  });
  CHECK(msg.find("label") != std::string::npos);

  msg = message_of([&] {
    parse_corpus(R"({"id": 1, "text": "   ", "label": 0, "model": "h", "source": "s"})", Split::Train, "f.jsonl");
  });
  CHECK(msg.find("empty text") != std::string::npos);

  msg = message_of([&] { parse_corpus(good + "\n" + good + "\n", Split::Test, "f.jsonl"); });
  CHECK(msg.find("duplicate id '1'") != std::string::npos);
  CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("same id in different splits is allowed") {
  std::vector<Record> rs{make_record("x", Label::Human), make_record("x", Label::Machine)};
  rs[1].split = Split::Test;
  CHECK_NOTHROW(Corpus::from_records(rs));
  rs[1].split = Split::Train;
  CHECK_THROWS_AS(Corpus::from_records(rs), ValidationError);
}

TEST_CASE("loading twice yields identical digests and records") {
  TempDir dir;
  write_text(dir / "c.jsonl", kSample);
  const auto a = load_corpus(dir / "c.jsonl", Split::Dev);
  const auto b = load_corpus(dir / "c.jsonl", Split::Dev);
  CHECK(a.records() == b.records());
  CHECK(a.provenance().digest == b.provenance().digest);
  CHECK(a.provenance().digest.size() == 64);
  CHECK(a[0].split == Split::Dev);
}

TEST_CASE("serialization round-trips including extras") {
  const auto c = parse_corpus(kSample, Split::Train);
  TempDir dir;
  write_corpus(c, dir / "out.jsonl");
  const auto back = load_corpus(dir / "out.jsonl", Split::Train);
  CHECK(back.records() == c.records());
  CHECK(serialize_corpus(back) == serialize_corpus(c));
}

TEST_CASE("group_counts sums to corpus size for every field") {
  SyntheticSpec spec;
  spec.count = 137;
  spec.machine_fraction = 0.3;
  const auto c = synthetic_corpus(spec);
  for (auto field : {GroupField::Source, GroupField::Generator, GroupField::Label, GroupField::Language}) {
    std::size_t sum = 0;
    for (const auto& [k, v] : group_counts(c, field)) sum += v;
    CHECK(sum == c.size());
  }
  const auto by_label = group_counts(c, GroupField::Label);
  CHECK(by_label.at("machine") == 41);
  CHECK(by_label.at("human") == 96);
}

TEST_CASE("group_counts single group") {
  std::vector<Record> rs;
  for (int i = 0; i < 9; ++i) rs.push_back(make_record("r" + std::to_string(i), Label::Human, "hc3"));
  const auto counts = group_counts(Corpus::from_records(rs), GroupField::Source);
  CHECK(counts.size() == 1);
  CHECK(counts.at("hc3") == 9);
}

TEST_CASE("token_length_stats examples") {
  const WhitespaceTokenizer tok;
  SUBCASE("one record of 7 tokens") {
    const auto c = Corpus::from_records({make_record("a", Label::Human, "s", "a b c d e f g")});
    const auto s = token_length_stats(c, tok, 10);
    const auto& h = s.per_label.at(Label::Human);
    CHECK(h.histogram == std::vector<std::size_t>{1});
    CHECK(h.mean == 7.0);
    CHECK(h.max == 7);
    CHECK(s.per_label.count(Label::Machine) == 0);
    CHECK(s.tokenizer == "whitespace");
  }
  SUBCASE("token counts 5 and 15") {
    const auto c = Corpus::from_records({make_record("a", Label::Machine, "s", "w w w w w"),
                                         make_record("b", Label::Machine, "s", "w w w w w w w w w w w w w w w")});
    const auto& m = token_length_stats(c, tok, 10).per_label.at(Label::Machine);
    CHECK(m.histogram == std::vector<std::size_t>{1, 1});
    CHECK(m.mean == 10.0);
    CHECK(m.median == 10.0);
  }
  SUBCASE("empty corpus") {
    CHECK_THROWS_WITH_AS(token_length_stats(Corpus{}, tok, 10), "no records", ValidationError);
  }
  SUBCASE("zero bucket width") {
    const auto c = Corpus::from_records({make_record("a", Label::Human)});
    CHECK_THROWS_AS(token_length_stats(c, tok, 0), ValidationError);
  }
}

TEST_CASE("token_length_stats is invariant under reordering") {
  SyntheticSpec spec;
  spec.count = 200;
  spec.max_words = 40;
  const auto c = synthetic_corpus(spec);
  const ByteTokenizer tok;
  const auto base = token_length_stats(c, tok, 16);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    auto rs = c.records();
    std::shuffle(rs.begin(), rs.end(), rng);
    CHECK(token_length_stats(Corpus::from_records(rs), tok, 16) == base);
  }
}

TEST_CASE("quantiles interpolate between order statistics") {
  const auto s = length_stats_from_counts({{Label::Human, 1}, {Label::Human, 2}, {Label::Human, 3}, {Label::Human, 10}},
                                          "t", 4);
  const auto& h = s.per_label.at(Label::Human);
  CHECK(h.median == doctest::Approx(2.5));
  // p95 position 0.95 * 3 = 2.85 between 3 and 10
  CHECK(h.p95 == doctest::Approx(3.0 + 0.85 * 7.0));
  CHECK(h.histogram == std::vector<std::size_t>{3, 0, 1});
}

TEST_CASE("length comparison flags a longer machine class") {
  const auto train = length_stats_from_counts({{Label::Human, 10}, {Label::Machine, 10}}, "t", 8);
  const auto test = length_stats_from_counts({{Label::Human, 10}, {Label::Machine, 30}}, "t", 8);
  const auto shift = compare_lengths(train, test);
  CHECK(shift.machine_longer_in_candidate);
  CHECK_FALSE(compare_lengths(test, train).machine_longer_in_candidate);
  const auto other = length_stats_from_counts({{Label::Human, 10}}, "u", 8);
  CHECK_THROWS_AS(compare_lengths(train, other), ValidationError);
}

TEST_CASE("name parsing") {
  CHECK(parse_split("valid") == Split::Dev);
  CHECK(parse_group_field("model") == GroupField::Generator);
  CHECK(parse_label("machine") == Label::Machine);
  CHECK(parse_label("0") == Label::Human);
  CHECK_THROWS_AS(parse_split("holdout"), ValidationError);
  CHECK_THROWS_AS(parse_group_field("topic"), ValidationError);
}

TEST_CASE("synthetic corpus is separable by alphabet") {
  const auto c = synthetic_corpus({});
  CHECK(c.size() == 500);
  CHECK(c.label_counts() == LabelCounts{250, 250});
  for (const auto& r : c) {
    for (char ch : r.text) {
      if (ch == ' ') continue;
      if (r.label == Label::Human) {
        CHECK((ch >= 'a' && ch <= 'm'));
      } else {
        CHECK((ch >= 'n' && ch <= 'z'));
      }
    }
  }
  CHECK(synthetic_corpus({}).records() == c.records());
}
