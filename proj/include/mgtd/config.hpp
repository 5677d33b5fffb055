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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mgtd/trainer.hpp"

namespace mgtd {

/// A value in a flat `key = value` configuration file (a TOML subset:
/// strings, integers, floats, booleans and single-line arrays).
using ConfigValue =
    std::variant<bool, std::int64_t, double, std::string, std::vector<std::string>, std::vector<std::int64_t>>;
using FlatConfig = std::map<std::string, ConfigValue>;

FlatConfig parse_flat_config(std::string_view text, std::string_view origin = "<memory>");
FlatConfig load_flat_config(const std::filesystem::path& path);

/// Parses a single value with the file grammar; bare words are taken as
/// strings so `--set plan=lora` works.
ConfigValue parse_config_value(std::string_view text);

/// Applies "key=value" on top of a config.
void apply_override(FlatConfig& config, std::string_view assignment);

std::string format_config_value(const ConfigValue& value);

/// Unknown keys are errors.
TrainConfig train_config_from(const FlatConfig& config);
TrainConfig load_train_config(const std::filesystem::path& path);
FlatConfig to_flat_config(const TrainConfig& config);
/// Canonical snapshot; train_config_from(parse_flat_config(to_toml(c))) == c.
std::string to_toml(const TrainConfig& config);

}  // namespace mgtd
