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

// JSON encodings of the toolkit's file formats.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mgtd/arch.hpp"
#include "mgtd/evaluator.hpp"
#include "mgtd/length_stats.hpp"

namespace mgtd {

void to_json(nlohmann::json& j, const HeadLayer& v);
void from_json(const nlohmann::json& j, HeadLayer& v);
void to_json(nlohmann::json& j, const ClassifierHeadSpec& v);
void from_json(const nlohmann::json& j, ClassifierHeadSpec& v);
void to_json(nlohmann::json& j, const ArchDescriptor& v);
void from_json(const nlohmann::json& j, ArchDescriptor& v);
void to_json(nlohmann::json& j, const FreezePlan& v);
void from_json(const nlohmann::json& j, FreezePlan& v);
void to_json(nlohmann::json& j, const LoraPlan& v);
void from_json(const nlohmann::json& j, LoraPlan& v);
void to_json(nlohmann::json& j, const ParamAudit& v);
void to_json(nlohmann::json& j, const TokenLengthStats& v);
void from_json(const nlohmann::json& j, TokenLengthStats& v);
void to_json(nlohmann::json& j, const LengthShift& v);
void to_json(nlohmann::json& j, const ConfusionMatrix& v);
void from_json(const nlohmann::json& j, ConfusionMatrix& v);
void to_json(nlohmann::json& j, const MetricReport& v);
void from_json(const nlohmann::json& j, MetricReport& v);

/// Plan files carry "type": "freeze" or "lora".
using AuditPlan = std::variant<FreezePlan, LoraPlan>;
AuditPlan plan_from_json(const nlohmann::json& j);

/// Reads a JSON file; parse errors become ValidationError naming the file.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Two-space indented, trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

ArchDescriptor load_arch(const std::filesystem::path& path);
AuditPlan load_plan(const std::filesystem::path& path);

/// Built-in descriptors: "qwen2.5-0.5b", "xlm-roberta-base", "toy-causal"
/// (2048 positions) and "toy-masked" (512 positions).
std::optional<ArchDescriptor> builtin_arch(std::string_view name);
std::vector<std::string> builtin_arch_names();

/// An existing descriptor file, else a built-in name.
ArchDescriptor resolve_arch(const std::string& name_or_path);

}  // namespace mgtd
