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

#include <filesystem>

#include "doctest.h"
#include "mgtd/config.hpp"
#include "mgtd/error.hpp"
#include "mgtd/trainer.hpp"

using namespace mgtd;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(MGTD_SOURCE_DIR) / "configs";

}  // namespace

TEST_CASE("flat config grammar") {
  const auto c = parse_flat_config(
      "# comment\n"
      "name = \"a b\"  # trailing\n"
      "n = -3\n"
      "x = 2e-4\n"
      "flag = true\n"
      "list = [\"query\", \"value\"]\n"
      "ints = [-1, 0]\n"
      "empty = []\n");
  CHECK(std::get<std::string>(c.at("name")) == "a b");
  CHECK(std::get<std::int64_t>(c.at("n")) == -3);
  CHECK(std::get<double>(c.at("x")) == 2e-4);
  CHECK(std::get<bool>(c.at("flag")));
  CHECK(std::get<std::vector<std::string>>(c.at("list")) == std::vector<std::string>{"query", "value"});
  CHECK(std::get<std::vector<std::int64_t>>(c.at("ints")) == std::vector<std::int64_t>{-1, 0});
  CHECK_THROWS_AS(parse_flat_config("no equals sign\n"), ValidationError);
  CHECK_THROWS_AS(parse_flat_config("a = 1\na = 2\n"), ValidationError);
}

TEST_CASE("overrides") {
  FlatConfig c;
  apply_override(c, "plan=lora");
  apply_override(c, "lora_r=8");
  apply_override(c, "lora_targets=[\"query\"]");
  CHECK(std::get<std::string>(c.at("plan")) == "lora");
  CHECK(std::get<std::int64_t>(c.at("lora_r")) == 8);
  CHECK_THROWS_AS(apply_override(c, "novalue"), ValidationError);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(train_config_from(parse_flat_config("learning_rat = 1e-3\n")), ValidationError);
}

TEST_CASE("subtask-a preset") {
  const auto c = load_train_config(kConfigs / "subtask-a.toml");
  CHECK(c.arch == "qwen2.5-0.5b");
  CHECK(c.learning_rate == 2e-4);
  CHECK(c.weight_decay == 0.01);
  CHECK(c.batch_size == 32);
  CHECK(c.max_epochs == 3);
  CHECK(c.truncation.max_tokens == 2048);
  CHECK(c.balance);
  CHECK_FALSE(c.weighted_loss);
  CHECK(c.warmup_fraction == 0.0);
  const auto& plan = std::get<FreezePlan>(c.plan);
  CHECK(plan.trainable_blocks == std::set<std::int64_t>{-1});
  CHECK(plan.head_trainable);
  CHECK_FALSE(plan.final_norm_trainable);
}

TEST_CASE("subtask-b preset") {
  const auto c = load_train_config(kConfigs / "subtask-b.toml");
  CHECK(c.arch == "xlm-roberta-base");
  CHECK(c.learning_rate == 5e-5);
  CHECK(c.weight_decay == 0.002);
  CHECK(c.batch_size == 16);
  CHECK(c.max_epochs == 1);
  CHECK(c.warmup_fraction == 0.1);
  CHECK(c.truncation.max_tokens == 512);
  CHECK(c.weighted_loss);
  CHECK_FALSE(c.balance);
  const auto& plan = std::get<LoraPlan>(c.plan);
  CHECK(plan.r == 4);
  CHECK(plan.alpha == 8.0);
  CHECK(plan.dropout == 0.25);
  CHECK(plan.targets == std::set<Projection>{Projection::Query, Projection::Value});
}

TEST_CASE("toml snapshot round trips") {
  for (const char* name : {"subtask-a.toml", "subtask-b.toml"}) {
    const auto c = load_train_config(kConfigs / name);
    const auto text = to_toml(c);
    const auto back = train_config_from(parse_flat_config(text));
    CHECK(to_toml(back) == text);
    CHECK(back.learning_rate == c.learning_rate);
    CHECK(back.truncation == c.truncation);
    CHECK(back.plan == c.plan);
  }
  TrainConfig odd;
  odd.learning_rate = 0.1 + 0.2;
  odd.seed = 18'446'744'073'709'551'615ULL;
  const auto back = train_config_from(parse_flat_config(to_toml(odd)));
  CHECK(back.learning_rate == odd.learning_rate);
  CHECK(back.seed == odd.seed);
}

TEST_CASE("invalid values are caught") {
  CHECK_THROWS_AS(train_config_from(parse_flat_config("batch_size = 0\n")), ValidationError);
  CHECK_THROWS_AS(train_config_from(parse_flat_config("batch_size = \"x\"\n")), ValidationError);
  CHECK_THROWS_AS(train_config_from(parse_flat_config("plan = \"prune\"\n")), ValidationError);
  CHECK_THROWS_AS(train_config_from(parse_flat_config("plan = \"lora\"\nlora_targets = [\"bogus\"]\n")),
                  ValidationError);
}
