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

#include "mgtd/arch.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <numeric>

#include "mgtd/error.hpp"

namespace mgtd {
namespace {

std::int64_t product(const std::vector<std::int64_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

void push(std::vector<TensorEntry>& out, std::string name, std::vector<std::int64_t> shape,
          bool trainable = false) {
  const auto n = product(shape);
  if (n == 0) return;
  out.push_back(TensorEntry{std::move(name), std::move(shape), n, trainable});
}

struct NamedMatrix {
  std::string name;
  std::int64_t out_dim;
  std::int64_t in_dim;
  bool bias;
};

// Linear layers of one block, in a fixed order.
std::vector<NamedMatrix> block_matrices(const ArchDescriptor& a) {
  std::vector<NamedMatrix> m{
      {"attn.q_proj", a.hidden, a.hidden, a.attn_bias.query},
      {"attn.k_proj", a.kv_dim, a.hidden, a.attn_bias.key},
      {"attn.v_proj", a.kv_dim, a.hidden, a.attn_bias.value},
      {"attn.o_proj", a.hidden, a.hidden, a.attn_bias.output},
  };
  if (a.ffn_gated) {
    m.push_back({"mlp.gate_proj", a.ffn_dim, a.hidden, a.ffn_bias});
    m.push_back({"mlp.up_proj", a.ffn_dim, a.hidden, a.ffn_bias});
    m.push_back({"mlp.down_proj", a.hidden, a.ffn_dim, a.ffn_bias});
  } else {
    m.push_back({"mlp.fc_in", a.ffn_dim, a.hidden, a.ffn_bias});
    m.push_back({"mlp.fc_out", a.hidden, a.ffn_dim, a.ffn_bias});
  }
  return m;
}

bool covers(Projection proj, const std::string& matrix) {
  switch (proj) {
    case Projection::Query: return matrix == "attn.q_proj";
    case Projection::Key: return matrix == "attn.k_proj";
    case Projection::Value: return matrix == "attn.v_proj";
    case Projection::Output: return matrix == "attn.o_proj";
    case Projection::FfnIn: return matrix == "mlp.gate_proj" || matrix == "mlp.up_proj" || matrix == "mlp.fc_in";
    case Projection::FfnOut: return matrix == "mlp.down_proj" || matrix == "mlp.fc_out";
  }
  return false;
}

void push_head(std::vector<TensorEntry>& out, const ClassifierHeadSpec& head, const std::string& prefix,
               bool trainable) {
  for (std::size_t j = 0; j < head.layers.size(); ++j) {
    const auto& l = head.layers[j];
    push(out, fmt::format("{}.{}.weight", prefix, j), {l.out_dim, l.in_dim}, trainable);
    if (l.bias) push(out, fmt::format("{}.{}.bias", prefix, j), {l.out_dim}, trainable);
  }
}

void push_base(std::vector<TensorEntry>& out, const ArchDescriptor& a, const std::set<std::int64_t>& blocks,
               bool final_norm_trainable, bool head_trainable) {
  push(out, "embeddings.word_embeddings.weight", {a.vocab, a.hidden});
  push(out, "embeddings.position_embeddings.weight", {a.max_positions, a.hidden});
  push(out, "embeddings.token_type_embeddings.weight", {a.type_vocab, a.hidden});
  push(out, "embeddings.norm", {a.embedding_norm_params});
  for (std::int64_t i = 0; i < a.num_layers; ++i) {
    const bool trainable = blocks.count(i) > 0;
    for (const auto& m : block_matrices(a)) {
      push(out, fmt::format("layers.{}.{}.weight", i, m.name), {m.out_dim, m.in_dim}, trainable);
      if (m.bias) push(out, fmt::format("layers.{}.{}.bias", i, m.name), {m.out_dim}, trainable);
    }
    push(out, fmt::format("layers.{}.norms", i), {a.norm_params_per_layer}, trainable);
  }
  push(out, "norm", {a.final_norm_params}, final_norm_trainable);
  if (!a.tied_embeddings) push(out, "lm_head.weight", {a.vocab, a.hidden});
  push_head(out, a.head, "head", head_trainable);
}


double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view to_string(ArchKind kind) {
  return kind == ArchKind::CausalDecoder ? "causal_decoder" : "masked_encoder";
}

std::string_view to_string(Pooling pooling) {
  return pooling == Pooling::LastToken ? "last_token" : "first_token";
}

std::string_view to_string(Projection proj) {
  switch (proj) {
    case Projection::Query: return "query";
    case Projection::Key: return "key";
    case Projection::Value: return "value";
    case Projection::Output: return "output";
    case Projection::FfnIn: return "ffn_in";
    case Projection::FfnOut: return "ffn_out";
  }
  return "?";
}

ArchKind parse_arch_kind(std::string_view name) {
  if (name == "causal_decoder" || name == "causal" || name == "decoder") return ArchKind::CausalDecoder;
  if (name == "masked_encoder" || name == "masked" || name == "encoder") return ArchKind::MaskedEncoder;
  throw ValidationError("unknown architecture kind '" + std::string(name) + "'");
}

Pooling parse_pooling(std::string_view name) {
  if (name == "last_token" || name == "last") return Pooling::LastToken;
  if (name == "first_token" || name == "first" || name == "cls") return Pooling::FirstToken;
  throw ValidationError("unknown pooling '" + std::string(name) + "'");
}

Projection parse_projection(std::string_view name) {
  if (name == "query" || name == "q_proj" || name == "q") return Projection::Query;
  if (name == "key" || name == "k_proj" || name == "k") return Projection::Key;
  if (name == "value" || name == "v_proj" || name == "v") return Projection::Value;
  if (name == "output" || name == "o_proj" || name == "dense" || name == "o") return Projection::Output;
  if (name == "ffn_in" || name == "up_proj" || name == "intermediate") return Projection::FfnIn;
  if (name == "ffn_out" || name == "down_proj") return Projection::FfnOut;
  throw ValidationError("unknown projection '" + std::string(name) + "'");
}

void ArchDescriptor::validate() const {
  auto positive = [](std::int64_t v, const char* what) {
    if (v <= 0) throw ValidationError(std::string("architecture: ") + what + " must be positive");
  };
  auto non_negative = [](std::int64_t v, const char* what) {
    if (v < 0) throw ValidationError(std::string("architecture: ") + what + " must be non-negative");
  };
  positive(num_layers, "num_layers");
  positive(hidden, "hidden");
  positive(ffn_dim, "ffn_dim");
  positive(num_heads, "num_heads");
  positive(kv_dim, "kv_dim");
  positive(vocab, "vocab");
  non_negative(norm_params_per_layer, "norm_params_per_layer");
  non_negative(max_positions, "max_positions");
  non_negative(type_vocab, "type_vocab");
  non_negative(embedding_norm_params, "embedding_norm_params");
  non_negative(final_norm_params, "final_norm_params");
  if (kv_dim > hidden) throw ValidationError("architecture: kv_dim must not exceed hidden");
  if (hidden % num_heads != 0) throw ValidationError("architecture: hidden must be divisible by num_heads");

  if (head.layers.empty()) throw ValidationError("classifier head needs at least one layer");
  if (!(head.dropout >= 0.0 && head.dropout < 1.0)) throw ValidationError("head dropout must be in [0, 1)");
  if (head.layers.front().in_dim != hidden) {
    throw ValidationError("classifier head input must equal hidden size");
  }
  for (std::size_t j = 0; j < head.layers.size(); ++j) {
    const auto& l = head.layers[j];
    if (l.in_dim <= 0 || l.out_dim <= 0) throw ValidationError("classifier head dims must be positive");
    if (j + 1 < head.layers.size() && l.out_dim != head.layers[j + 1].in_dim) {
      throw ValidationError("classifier head layers do not chain");
    }
  }
  if (head.layers.back().out_dim != 2) throw ValidationError("classifier head must end in 2 outputs");
}

FreezePlan FreezePlan::resolved(const ArchDescriptor& arch) const {
  FreezePlan out = *this;
  out.trainable_blocks.clear();
  for (auto idx : trainable_blocks) {
    const auto i = idx < 0 ? idx + arch.num_layers : idx;
    if (i < 0 || i >= arch.num_layers) {
      throw ValidationError(fmt::format("freeze plan: block {} out of range for {} layers", idx, arch.num_layers));
    }
    out.trainable_blocks.insert(i);
  }
  return out;
}

void LoraPlan::validate() const {
  if (r < 1) throw ValidationError("lora: r must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("lora: dropout must be in [0, 1)");
  if (!(alpha > 0.0)) throw ValidationError("lora: alpha must be positive");
}

std::int64_t embedding_params(const ArchDescriptor& a) {
  return (a.vocab + a.max_positions + a.type_vocab) * a.hidden + a.embedding_norm_params;
}

std::int64_t block_params(const ArchDescriptor& a) {
  const std::int64_t h = a.hidden;
  std::int64_t attn = 2 * h * h + 2 * a.kv_dim * h;
  attn += (a.attn_bias.query ? h : 0) + (a.attn_bias.key ? a.kv_dim : 0) + (a.attn_bias.value ? a.kv_dim : 0) +
          (a.attn_bias.output ? h : 0);
  std::int64_t ffn = 0;
  if (a.ffn_gated) {
    ffn = 3 * h * a.ffn_dim + (a.ffn_bias ? 2 * a.ffn_dim + h : 0);
  } else {
    ffn = 2 * h * a.ffn_dim + (a.ffn_bias ? a.ffn_dim + h : 0);
  }
  return attn + ffn + a.norm_params_per_layer;
}

std::int64_t head_params(const ClassifierHeadSpec& head) {
  std::int64_t n = 0;
  for (const auto& l : head.layers) n += l.in_dim * l.out_dim + (l.bias ? l.out_dim : 0);
  return n;
}

std::int64_t count_params(const ArchDescriptor& a) {
  return embedding_params(a) + a.num_layers * block_params(a) + a.final_norm_params +
         (a.tied_embeddings ? 0 : a.vocab * a.hidden) + head_params(a.head);
}

std::int64_t lora_delta(std::int64_t out_dim, std::int64_t in_dim, std::int64_t r) {
  if (r < 1) throw ValidationError("lora: r must be >= 1");
  if (out_dim <= 0 || in_dim <= 0) throw ValidationError("lora: dimensions must be positive");
  return r * (in_dim + out_dim);
}

std::vector<std::pair<std::int64_t, std::int64_t>> projection_shapes(const ArchDescriptor& a, Projection proj) {
  switch (proj) {
    case Projection::Query:
    case Projection::Output: return {{a.hidden, a.hidden}};
    case Projection::Key:
    case Projection::Value: return {{a.kv_dim, a.hidden}};
    case Projection::FfnIn:
      if (a.ffn_gated) return {{a.ffn_dim, a.hidden}, {a.ffn_dim, a.hidden}};
      return {{a.ffn_dim, a.hidden}};
    case Projection::FfnOut: return {{a.hidden, a.ffn_dim}};
  }
  return {};
}

ParamAudit audit_freeze(const ArchDescriptor& arch, const FreezePlan& plan) {
  arch.validate();
  const auto p = plan.resolved(arch);
  const auto head = head_params(arch.head);

  ParamAudit audit;
  audit.total_params = count_params(arch);
  audit.trainable_params = static_cast<std::int64_t>(p.trainable_blocks.size()) * block_params(arch) +
                           (p.head_trainable ? head : 0) + (p.final_norm_trainable ? arch.final_norm_params : 0);
  audit.trainable_fraction = ratio(audit.trainable_params, audit.total_params);
  audit.convention = "classifier incl. head";
  const auto without_head = audit.total_params - head;
  audit.alternatives.push_back({"classifier excl. head", without_head, ratio(audit.trainable_params, without_head)});
  return audit;
}

ParamAudit audit_lora(const ArchDescriptor& arch, const LoraPlan& plan) {
  arch.validate();
  plan.validate();
  std::int64_t per_block = 0;
  for (auto proj : plan.targets) {
    for (const auto& [out_dim, in_dim] : projection_shapes(arch, proj)) per_block += lora_delta(out_dim, in_dim, plan.r);
  }
  const auto adapters = arch.num_layers * per_block;
  const auto head = head_params(arch.head);
  const auto base = count_params(arch);

  ParamAudit audit;
  audit.trainable_params = adapters + (plan.head_trainable ? head : 0);
  const bool copy = plan.head_trainable && plan.head_copy;
  audit.total_params = base + adapters + (copy ? head : 0);
  audit.trainable_fraction = ratio(audit.trainable_params, audit.total_params);
  audit.convention = copy ? "base + adapters + head copy" : "base + adapters";
  audit.alternatives.push_back({"base model", base, ratio(audit.trainable_params, base)});
  if (copy) {
    audit.alternatives.push_back({"base + adapters", base + adapters, ratio(audit.trainable_params, base + adapters)});
  }
  return audit;
}

std::vector<TensorEntry> tensor_ledger(const ArchDescriptor& arch) {
  arch.validate();
  std::vector<TensorEntry> out;
  push_base(out, arch, {}, false, false);
  return out;
}

std::vector<TensorEntry> tensor_ledger(const ArchDescriptor& arch, const FreezePlan& plan) {
  arch.validate();
  const auto p = plan.resolved(arch);
  std::vector<TensorEntry> out;
  push_base(out, arch, p.trainable_blocks, p.final_norm_trainable, p.head_trainable);
  return out;
}

std::vector<TensorEntry> tensor_ledger(const ArchDescriptor& arch, const LoraPlan& plan) {
  arch.validate();
  plan.validate();
  std::vector<TensorEntry> out;
  const bool copy = plan.head_trainable && plan.head_copy;
  push_base(out, arch, {}, false, plan.head_trainable && !copy);
  for (std::int64_t i = 0; i < arch.num_layers; ++i) {
    for (const auto& m : block_matrices(arch)) {
      const bool targeted = std::any_of(plan.targets.begin(), plan.targets.end(),
                                        [&](Projection p) { return covers(p, m.name); });
      if (!targeted) continue;
      push(out, fmt::format("layers.{}.{}.lora_A", i, m.name), {plan.r, m.in_dim}, true);
      push(out, fmt::format("layers.{}.{}.lora_B", i, m.name), {m.out_dim, plan.r}, true);
    }
  }
  if (copy) push_head(out, arch.head, "head_copy", true);
  return out;
}

std::string ledger_csv(const std::vector<TensorEntry>& ledger) {
  std::string out = "name,shape,params,trainable\n";
  for (const auto& t : ledger) {
    out += fmt::format("{},{},{},{}\n", t.name, fmt::join(t.shape, "x"), t.params, t.trainable ? 1 : 0);
  }
  return out;
}

std::string format_percent(double fraction, int decimals) {
  return fmt::format("{:.{}f}%", fraction * 100.0, decimals);
}

}  // namespace mgtd
