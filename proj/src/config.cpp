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

#include "mgtd/config.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <type_traits>
#include <set>
#include <sstream>

#include "mgtd/error.hpp"

namespace mgtd {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing `# comment` that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && in_string) {
      ++i;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string unquote(std::string_view s) {
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c == '\\' && i + 2 < s.size()) {
      const char e = s[++i];
      switch (e) {
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        default: c = e; break;
      }
    }
    out.push_back(c);
  }
  return out;
}

bool is_quoted(std::string_view s) { return s.size() >= 2 && s.front() == '"' && s.back() == '"'; }

std::optional<std::int64_t> as_integer(std::string_view s) {
  std::string digits;
  for (char c : s) {
    if (c != '_') digits.push_back(c);
  }
  if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) return std::nullopt;
  return v;
}

std::optional<double> as_float(std::string_view s) {
  std::string text(s);
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_array(std::string_view body) {
  std::vector<std::string> items;
  std::string current;
  bool in_string = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '\\' && in_string && i + 1 < body.size()) {
      current.push_back(c);
      current.push_back(body[++i]);
      continue;
    }
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      items.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!trim(current).empty()) items.emplace_back(trim(current));
  return items;
}

ConfigValue parse_value(std::string_view raw, bool bare_words, std::string_view where) {
  const auto s = trim(raw);
  if (s.empty()) throw ValidationError(fmt::format("missing value, {}", where));
  if (is_quoted(s)) return unquote(s);
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') throw ValidationError(fmt::format("unterminated array, {}", where));
    const auto items = split_array(s.substr(1, s.size() - 2));
    if (items.empty()) return std::vector<std::string>{};
    if (is_quoted(items.front())) {
      std::vector<std::string> out;
      for (const auto& item : items) {
        if (!is_quoted(item)) throw ValidationError(fmt::format("mixed array, {}", where));
        out.push_back(unquote(item));
      }
      return out;
    }
    std::vector<std::int64_t> out;
    for (const auto& item : items) {
      auto v = as_integer(item);
      if (!v) throw ValidationError(fmt::format("arrays hold strings or integers only, {}", where));
      out.push_back(*v);
    }
    return out;
  }
  if (auto v = as_integer(s)) return *v;
  if (auto v = as_float(s)) return *v;
  if (bare_words) return std::string(s);
  throw ValidationError(fmt::format("cannot parse value '{}', {}", s, where));
}

class Reader {
 public:
  explicit Reader(const FlatConfig& config) : config_(config) {}

  const ConfigValue* find(const std::string& key) {
    auto it = config_.find(key);
    if (it == config_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void read(const std::string& key, std::string& out) {
    if (auto* v = find(key)) {
      if (auto* s = std::get_if<std::string>(v)) {
        out = *s;
      } else {
        throw mismatch(key, "a string");
      }
    }
  }
  void read(const std::string& key, bool& out) {
    if (auto* v = find(key)) {
      if (auto* b = std::get_if<bool>(v)) {
        out = *b;
      } else {
        throw mismatch(key, "a boolean");
      }
    }
  }
  void read(const std::string& key, double& out) {
    if (auto* v = find(key)) {
      if (auto* d = std::get_if<double>(v)) {
        out = *d;
      } else if (auto* i = std::get_if<std::int64_t>(v)) {
        out = static_cast<double>(*i);
      } else {
        throw mismatch(key, "a number");
      }
    }
  }
  template <typename Int>
  void read_int(const std::string& key, Int& out) {
    if (auto* v = find(key)) {
      auto* i = std::get_if<std::int64_t>(v);
      if (!i) throw mismatch(key, "an integer");
      if (*i < 0 && std::is_unsigned_v<Int>) throw ValidationError("config key '" + key + "' must be >= 0");
      out = static_cast<Int>(*i);
    }
  }
  void read(const std::string& key, std::vector<std::string>& out) {
    if (auto* v = find(key)) {
      if (auto* s = std::get_if<std::vector<std::string>>(v)) {
        out = *s;
      } else if (auto* i = std::get_if<std::vector<std::int64_t>>(v); i && i->empty()) {
        out.clear();
      } else {
        throw mismatch(key, "a string array");
      }
    }
  }
  void read(const std::string& key, std::vector<std::int64_t>& out) {
    if (auto* v = find(key)) {
      if (auto* i = std::get_if<std::vector<std::int64_t>>(v)) {
        out = *i;
      } else if (auto* s = std::get_if<std::vector<std::string>>(v); s && s->empty()) {
        out.clear();
      } else if (auto* one = std::get_if<std::int64_t>(v)) {
        out = {*one};
      } else {
        throw mismatch(key, "an integer array");
      }
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : config_) {
      if (!used_.count(key)) throw ValidationError("unknown config key '" + key + "'");
    }
  }

 private:
  static ValidationError mismatch(const std::string& key, const char* want) {
    return ValidationError("config key '" + key + "' must be " + want);
  }

  const FlatConfig& config_;
  std::set<std::string> used_;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

std::string format_double(double v) {
  auto s = fmt::format("{}", v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

FlatConfig parse_flat_config(std::string_view text, std::string_view origin) {
  FlatConfig config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(strip_comment(text.substr(pos, end - pos)));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto where = fmt::format("{}, line {}", origin, line_no);
    if (line.front() == '[') throw ValidationError("sections are not supported in flat configs, " + where);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError("expected key = value, " + where);
    auto key = std::string(trim(line.substr(0, eq)));
    if (key.empty()) throw ValidationError("empty key, " + where);
    if (is_quoted(key)) key = unquote(key);
    if (config.count(key)) throw ValidationError("duplicate key '" + key + "', " + where);
    config.emplace(std::move(key), parse_value(line.substr(eq + 1), false, where));
  }
  return config;
}

FlatConfig load_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_flat_config(buf.str(), path.string());
}

ConfigValue parse_config_value(std::string_view text) { return parse_value(text, true, "<override>"); }

void apply_override(FlatConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ValidationError("override must be key=value: " + std::string(assignment));
  const auto key = std::string(trim(assignment.substr(0, eq)));
  if (key.empty()) throw ValidationError("override has an empty key");
  config[key] = parse_config_value(assignment.substr(eq + 1));
}

std::string format_config_value(const ConfigValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return quote(v);
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
          std::string out = "[";
          for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + quote(v[i]);
          return out + "]";
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
          return out + "]";
        }
      },
      value);
}

TrainConfig train_config_from(const FlatConfig& flat) {
  Reader r(flat);
  TrainConfig c;
  r.read("name", c.name);
  r.read("arch", c.arch);
  r.read("learning_rate", c.learning_rate);
  r.read("weight_decay", c.weight_decay);
  r.read_int("batch_size", c.batch_size);
  r.read_int("max_epochs", c.max_epochs);
  r.read("warmup_fraction", c.warmup_fraction);

  std::string schedule = "linear";
  r.read("schedule", schedule);
  if (schedule == "linear") {
    c.schedule = ScheduleShape::LinearDecay;
  } else if (schedule == "constant") {
    c.schedule = ScheduleShape::Constant;
  } else {
    throw ValidationError("schedule must be 'linear' or 'constant'");
  }

  std::string optimizer = "adamw";
  r.read("optimizer", optimizer);
  if (optimizer != "adamw") throw ValidationError("optimizer must be 'adamw'");
  r.read("adam_beta1", c.adam_beta1);
  r.read("adam_beta2", c.adam_beta2);
  r.read("adam_epsilon", c.adam_epsilon);

  r.read("weighted_loss", c.weighted_loss);
  r.read("balance", c.balance);
  std::int64_t seed = static_cast<std::int64_t>(c.seed);
  r.read_int("seed", seed);
  c.seed = static_cast<std::uint64_t>(seed);
  r.read_int("max_tokens", c.truncation.max_tokens);
  std::string side = "head";
  r.read("truncation_side", side);
  if (side != "head") throw ValidationError("truncation_side must be 'head'");
  r.read("early_stop_tolerance", c.early_stop_tolerance);

  std::string plan = "freeze";
  r.read("plan", plan);
  FreezePlan freeze;
  std::vector<std::int64_t> blocks;
  r.read("trainable_blocks", blocks);
  freeze.trainable_blocks.insert(blocks.begin(), blocks.end());
  r.read("head_trainable", freeze.head_trainable);
  r.read("final_norm_trainable", freeze.final_norm_trainable);

  LoraPlan lora;
  lora.head_trainable = freeze.head_trainable;
  r.read_int("lora_r", lora.r);
  r.read("lora_alpha", lora.alpha);
  r.read("lora_dropout", lora.dropout);
  std::vector<std::string> targets;
  r.read("lora_targets", targets);
  for (const auto& t : targets) lora.targets.insert(parse_projection(t));
  r.read("lora_head_copy", lora.head_copy);

  if (plan == "freeze") {
    c.plan = freeze;
  } else if (plan == "lora") {
    c.plan = lora;
  } else {
    throw ValidationError("plan must be 'freeze' or 'lora'");
  }
  r.reject_unknown();
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  return train_config_from(load_flat_config(path));
}

FlatConfig to_flat_config(const TrainConfig& c) {
  FlatConfig f;
  f["name"] = c.name;
  f["arch"] = c.arch;
  f["learning_rate"] = c.learning_rate;
  f["weight_decay"] = c.weight_decay;
  f["batch_size"] = static_cast<std::int64_t>(c.batch_size);
  f["max_epochs"] = static_cast<std::int64_t>(c.max_epochs);
  f["warmup_fraction"] = c.warmup_fraction;
  f["schedule"] = std::string(c.schedule == ScheduleShape::LinearDecay ? "linear" : "constant");
  f["optimizer"] = std::string("adamw");
  f["adam_beta1"] = c.adam_beta1;
  f["adam_beta2"] = c.adam_beta2;
  f["adam_epsilon"] = c.adam_epsilon;
  f["weighted_loss"] = c.weighted_loss;
  f["balance"] = c.balance;
  f["seed"] = static_cast<std::int64_t>(c.seed);
  f["max_tokens"] = static_cast<std::int64_t>(c.truncation.max_tokens);
  f["truncation_side"] = std::string("head");
  f["early_stop_tolerance"] = c.early_stop_tolerance;
  if (const auto* freeze = std::get_if<FreezePlan>(&c.plan)) {
    f["plan"] = std::string("freeze");
    f["trainable_blocks"] =
        std::vector<std::int64_t>(freeze->trainable_blocks.begin(), freeze->trainable_blocks.end());
    f["head_trainable"] = freeze->head_trainable;
    f["final_norm_trainable"] = freeze->final_norm_trainable;
  } else {
    const auto& lora = std::get<LoraPlan>(c.plan);
    f["plan"] = std::string("lora");
    f["lora_r"] = lora.r;
    f["lora_alpha"] = lora.alpha;
    f["lora_dropout"] = lora.dropout;
    std::vector<std::string> targets;
    for (auto t : lora.targets) targets.emplace_back(to_string(t));
    f["lora_targets"] = targets;
    f["head_trainable"] = lora.head_trainable;
    f["lora_head_copy"] = lora.head_copy;
  }
  return f;
}

std::string to_toml(const TrainConfig& config) {
  std::string out;
  for (const auto& [key, value] : to_flat_config(config)) {
    out += key + " = " + format_config_value(value) + "\n";
  }
  return out;
}

}  // namespace mgtd
