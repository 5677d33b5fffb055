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

#include "mgtd/io.hpp"

#include <fstream>
#include <sstream>

#include "mgtd/error.hpp"
#include "mgtd/toy_model.hpp"

namespace mgtd {
namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

json summary_json(const LengthSummary& s) {
  return json{{"records", s.records}, {"mean", s.mean},       {"median", s.median},
              {"p95", s.p95},         {"max", s.max},         {"histogram", s.histogram}};
}

json scores_json(const F1Scores& s) {
  return json{{"f1_macro", s.macro},       {"f1_micro", s.micro},        {"accuracy", s.accuracy},
              {"f1_human", s.f1_human},    {"f1_machine", s.f1_machine}};
}

}  // namespace

void to_json(json& j, const HeadLayer& v) {
  j = json{{"in_dim", v.in_dim}, {"out_dim", v.out_dim}, {"bias", v.bias}};
}

void from_json(const json& j, HeadLayer& v) {
  v.in_dim = required<std::int64_t>(j, "in_dim");
  v.out_dim = required<std::int64_t>(j, "out_dim");
  v.bias = field<bool>(j, "bias", true);
}

void to_json(json& j, const ClassifierHeadSpec& v) {
  j = json{{"layers", v.layers}, {"dropout", v.dropout}, {"pooling", std::string(to_string(v.pooling))}};
}

void from_json(const json& j, ClassifierHeadSpec& v) {
  v.layers = required<std::vector<HeadLayer>>(j, "layers");
  v.dropout = field<double>(j, "dropout", 0.1);
  v.pooling = parse_pooling(field<std::string>(j, "pooling", "last_token"));
}

void to_json(json& j, const ArchDescriptor& v) {
  j = json{{"name", v.name},
           {"kind", std::string(to_string(v.kind))},
           {"num_layers", v.num_layers},
           {"hidden", v.hidden},
           {"ffn_dim", v.ffn_dim},
           {"num_heads", v.num_heads},
           {"kv_dim", v.kv_dim},
           {"vocab", v.vocab},
           {"attn_bias",
            {{"query", v.attn_bias.query},
             {"key", v.attn_bias.key},
             {"value", v.attn_bias.value},
             {"output", v.attn_bias.output}}},
           {"ffn_gated", v.ffn_gated},
           {"ffn_bias", v.ffn_bias},
           {"norm_params_per_layer", v.norm_params_per_layer},
           {"max_positions", v.max_positions},
           {"type_vocab", v.type_vocab},
           {"embedding_norm_params", v.embedding_norm_params},
           {"final_norm_params", v.final_norm_params},
           {"tied_embeddings", v.tied_embeddings},
           {"head", v.head}};
}

void from_json(const json& j, ArchDescriptor& v) {
  v.name = field<std::string>(j, "name", "");
  v.kind = parse_arch_kind(field<std::string>(j, "kind", "causal_decoder"));
  v.num_layers = required<std::int64_t>(j, "num_layers");
  v.hidden = required<std::int64_t>(j, "hidden");
  v.ffn_dim = required<std::int64_t>(j, "ffn_dim");
  v.num_heads = required<std::int64_t>(j, "num_heads");
  v.kv_dim = field<std::int64_t>(j, "kv_dim", v.hidden);
  v.vocab = required<std::int64_t>(j, "vocab");
  if (auto it = j.find("attn_bias"); it != j.end()) {
    if (it->is_boolean()) {
      const bool all = it->get<bool>();
      v.attn_bias = {all, all, all, all};
    } else {
      v.attn_bias.query = field<bool>(*it, "query", false);
      v.attn_bias.key = field<bool>(*it, "key", false);
      v.attn_bias.value = field<bool>(*it, "value", false);
      v.attn_bias.output = field<bool>(*it, "output", false);
    }
  }
  v.ffn_gated = field<bool>(j, "ffn_gated", false);
  v.ffn_bias = field<bool>(j, "ffn_bias", false);
  v.norm_params_per_layer = field<std::int64_t>(j, "norm_params_per_layer", 0);
  v.max_positions = field<std::int64_t>(j, "max_positions", 0);
  v.type_vocab = field<std::int64_t>(j, "type_vocab", 0);
  v.embedding_norm_params = field<std::int64_t>(j, "embedding_norm_params", 0);
  v.final_norm_params = field<std::int64_t>(j, "final_norm_params", 0);
  v.tied_embeddings = field<bool>(j, "tied_embeddings", true);
  v.head = required<ClassifierHeadSpec>(j, "head");
}

void to_json(json& j, const FreezePlan& v) {
  j = json{{"type", "freeze"},
           {"trainable_blocks", v.trainable_blocks},
           {"head_trainable", v.head_trainable},
           {"final_norm_trainable", v.final_norm_trainable}};
}

void from_json(const json& j, FreezePlan& v) {
  const auto blocks = field<std::vector<std::int64_t>>(j, "trainable_blocks", {});
  v.trainable_blocks = {blocks.begin(), blocks.end()};
  v.head_trainable = field<bool>(j, "head_trainable", true);
  v.final_norm_trainable = field<bool>(j, "final_norm_trainable", false);
}

void to_json(json& j, const LoraPlan& v) {
  std::vector<std::string> targets;
  for (auto t : v.targets) targets.emplace_back(to_string(t));
  j = json{{"type", "lora"},         {"r", v.r},
           {"alpha", v.alpha},       {"dropout", v.dropout},
           {"targets", targets},     {"head_trainable", v.head_trainable},
           {"head_copy", v.head_copy}};
}

void from_json(const json& j, LoraPlan& v) {
  v.r = field<std::int64_t>(j, "r", 4);
  v.alpha = field<double>(j, "alpha", 8.0);
  v.dropout = field<double>(j, "dropout", 0.0);
  v.targets.clear();
  for (const auto& t : field<std::vector<std::string>>(j, "targets", {"query", "value"})) {
    v.targets.insert(parse_projection(t));
  }
  v.head_trainable = field<bool>(j, "head_trainable", true);
  v.head_copy = field<bool>(j, "head_copy", true);
}

void to_json(json& j, const ParamAudit& v) {
  json alternatives = json::array();
  for (const auto& a : v.alternatives) {
    alternatives.push_back({{"convention", a.name}, {"total_params", a.total}, {"trainable_fraction", a.fraction}});
  }
  j = json{{"total_params", v.total_params},
           {"trainable_params", v.trainable_params},
           {"trainable_fraction", v.trainable_fraction},
           {"convention", v.convention},
           {"alternatives", alternatives}};
}

void to_json(json& j, const TokenLengthStats& v) {
  json labels = json::object();
  for (const auto& [label, s] : v.per_label) labels[std::string(to_string(label))] = summary_json(s);
  j = json{{"tokenizer", v.tokenizer}, {"bucket_width", v.bucket_width}, {"records", v.records}, {"labels", labels}};
}

void from_json(const json& j, TokenLengthStats& v) {
  v.tokenizer = required<std::string>(j, "tokenizer");
  v.bucket_width = required<std::size_t>(j, "bucket_width");
  v.records = required<std::size_t>(j, "records");
  v.per_label.clear();
  const auto labels = required<json>(j, "labels");
  for (const auto& [name, s] : labels.items()) {
    LengthSummary summary;
    summary.records = required<std::size_t>(s, "records");
    summary.mean = required<double>(s, "mean");
    summary.median = required<double>(s, "median");
    summary.p95 = required<double>(s, "p95");
    summary.max = required<std::size_t>(s, "max");
    summary.histogram = required<std::vector<std::size_t>>(s, "histogram");
    v.per_label.emplace(parse_label(name), std::move(summary));
  }
}

void to_json(json& j, const LengthShift& v) {
  json ref = json::object();
  json cand = json::object();
  for (const auto& [label, mean] : v.reference_mean) ref[std::string(to_string(label))] = mean;
  for (const auto& [label, mean] : v.candidate_mean) cand[std::string(to_string(label))] = mean;
  j = json{{"tokenizer", v.tokenizer},
           {"reference_mean", ref},
           {"candidate_mean", cand},
           {"machine_longer_in_candidate", v.machine_longer_in_candidate}};
}

void to_json(json& j, const ConfusionMatrix& v) {
  j = json{{"tn", v.tn}, {"fp", v.fp}, {"fn", v.fn}, {"tp", v.tp}};
}

void from_json(const json& j, ConfusionMatrix& v) {
  v.tn = required<std::uint64_t>(j, "tn");
  v.fp = required<std::uint64_t>(j, "fp");
  v.fn = required<std::uint64_t>(j, "fn");
  v.tp = required<std::uint64_t>(j, "tp");
}

void to_json(json& j, const MetricReport& v) {
  j = scores_json(v.scores);
  j["confusion"] = v.confusion;
  json groups = json::object();
  for (const auto& [field_name, breakdown] : v.per_group) {
    json rows = json::object();
    for (const auto& [group, m] : breakdown) {
      rows[group] = {{"count", m.count}, {"accuracy", m.accuracy}, {"f1_macro", m.f1_macro}, {"confusion", m.confusion}};
    }
    groups[field_name] = rows;
  }
  j["per_group"] = groups;
}

void from_json(const json& j, MetricReport& v) {
  v.scores.macro = required<double>(j, "f1_macro");
  v.scores.micro = required<double>(j, "f1_micro");
  v.scores.accuracy = required<double>(j, "accuracy");
  v.scores.f1_human = field<double>(j, "f1_human", 0.0);
  v.scores.f1_machine = field<double>(j, "f1_machine", 0.0);
  v.confusion = required<ConfusionMatrix>(j, "confusion");
  v.per_group.clear();
  if (auto it = j.find("per_group"); it != j.end()) {
    for (const auto& [field_name, rows] : it->items()) {
      Breakdown b;
      for (const auto& [group, m] : rows.items()) {
        GroupMetrics g;
        g.count = required<std::size_t>(m, "count");
        g.accuracy = required<double>(m, "accuracy");
        g.f1_macro = required<double>(m, "f1_macro");
        g.confusion = field<ConfusionMatrix>(m, "confusion", ConfusionMatrix{});
        b.emplace(group, g);
      }
      v.per_group.emplace(field_name, std::move(b));
    }
  }
}

AuditPlan plan_from_json(const json& j) {
  const auto type = field<std::string>(j, "type", "");
  if (type == "freeze") return j.get<FreezePlan>();
  if (type == "lora") return j.get<LoraPlan>();
  throw ValidationError("plan 'type' must be \"freeze\" or \"lora\"");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ArchDescriptor load_arch(const std::filesystem::path& path) {
  try {
    auto arch = read_json_file(path).get<ArchDescriptor>();
    arch.validate();
    return arch;
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

AuditPlan load_plan(const std::filesystem::path& path) {
  try {
    return plan_from_json(read_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

namespace {

ArchDescriptor qwen2_5_0_5b() {
  ArchDescriptor a;
  a.name = "qwen2.5-0.5b";
  a.kind = ArchKind::CausalDecoder;
  a.num_layers = 24;
  a.hidden = 896;
  a.ffn_dim = 4864;
  a.num_heads = 14;
  a.kv_dim = 128;
  a.vocab = 151936;
  a.attn_bias = {true, true, true, false};
  a.ffn_gated = true;
  a.norm_params_per_layer = 2 * 896;
  a.final_norm_params = 896;
  a.tied_embeddings = true;
  a.head.layers = {{896, 2, false}};
  a.head.dropout = 0.0;
  a.head.pooling = Pooling::LastToken;
  return a;
}

ArchDescriptor xlm_roberta_base() {
  ArchDescriptor a;
  a.name = "xlm-roberta-base";
  a.kind = ArchKind::MaskedEncoder;
  a.num_layers = 12;
  a.hidden = 768;
  a.ffn_dim = 3072;
  a.num_heads = 12;
  a.kv_dim = 768;
  a.vocab = 250002;
  a.attn_bias = {true, true, true, true};
  a.ffn_bias = true;
  a.norm_params_per_layer = 2 * 2 * 768;
  a.max_positions = 514;
  a.type_vocab = 1;
  a.embedding_norm_params = 2 * 768;
  a.tied_embeddings = true;
  a.head.layers = {{768, 768, true}, {768, 2, true}};
  a.head.dropout = 0.1;
  a.head.pooling = Pooling::FirstToken;
  return a;
}

}  // namespace

std::optional<ArchDescriptor> builtin_arch(std::string_view name) {
  if (name == "qwen2.5-0.5b") return qwen2_5_0_5b();
  if (name == "xlm-roberta-base") return xlm_roberta_base();
  if (name == "toy-causal") return ToyBackend::make_descriptor(ArchKind::CausalDecoder, 2048);
  if (name == "toy-masked") return ToyBackend::make_descriptor(ArchKind::MaskedEncoder, 512);
  return std::nullopt;
}

std::vector<std::string> builtin_arch_names() {
  return {"qwen2.5-0.5b", "xlm-roberta-base", "toy-causal", "toy-masked"};
}

ArchDescriptor resolve_arch(const std::string& name_or_path) {
  if (std::filesystem::is_regular_file(name_or_path)) return load_arch(name_or_path);
  if (auto arch = builtin_arch(name_or_path)) return *arch;
  throw ValidationError("unknown architecture '" + name_or_path + "' (not a file or a built-in name)");
}

}  // namespace mgtd
