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
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mgtd {

enum class ArchKind : std::uint8_t { CausalDecoder, MaskedEncoder };
enum class Pooling : std::uint8_t { LastToken, FirstToken };

/// Linear projections inside a transformer block that an adapter can target.
enum class Projection : std::uint8_t { Query, Key, Value, Output, FfnIn, FfnOut };

std::string_view to_string(ArchKind kind);
std::string_view to_string(Pooling pooling);
std::string_view to_string(Projection proj);
ArchKind parse_arch_kind(std::string_view name);
Pooling parse_pooling(std::string_view name);
/// Accepts query/key/value/output and the common aliases q_proj, k_proj,
/// v_proj, o_proj, dense, ffn_in, ffn_out.
Projection parse_projection(std::string_view name);

struct HeadLayer {
  std::int64_t in_dim = 0;
  std::int64_t out_dim = 0;
  bool bias = true;

  bool operator==(const HeadLayer&) const = default;
};

/// Sequence-classification head applied to the pooled hidden state.
/// Layout: for each layer, dropout -> dense, with tanh between layers.
struct ClassifierHeadSpec {
  std::vector<HeadLayer> layers;
  double dropout = 0.1;
  Pooling pooling = Pooling::LastToken;

  bool operator==(const ClassifierHeadSpec&) const = default;
};

struct AttentionBias {
  bool query = false;
  bool key = false;
  bool value = false;
  bool output = false;

  bool operator==(const AttentionBias&) const = default;
};

/// Dimensional description of a transformer classifier, enough to count
/// every parameter exactly.
struct ArchDescriptor {
  std::string name;
  ArchKind kind = ArchKind::CausalDecoder;
  std::int64_t num_layers = 0;
  std::int64_t hidden = 0;
  std::int64_t ffn_dim = 0;
  std::int64_t num_heads = 0;
  /// Width of the key/value projections; below `hidden` under grouped-query
  /// attention.
  std::int64_t kv_dim = 0;
  std::int64_t vocab = 0;
  AttentionBias attn_bias;
  /// Gated FFN has gate, up and down matrices; plain FFN has in and out.
  bool ffn_gated = false;
  bool ffn_bias = false;
  std::int64_t norm_params_per_layer = 0;
  /// Learned absolute positions; 0 for rotary models.
  std::int64_t max_positions = 0;
  std::int64_t type_vocab = 0;
  std::int64_t embedding_norm_params = 0;
  std::int64_t final_norm_params = 0;
  /// When false, a separate vocab x hidden output embedding is carried.
  bool tied_embeddings = true;
  ClassifierHeadSpec head;

  void validate() const;
  bool operator==(const ArchDescriptor&) const = default;
};

/// Layer indices may be negative (counted from the last block) until resolved.
struct FreezePlan {
  std::set<std::int64_t> trainable_blocks;
  bool head_trainable = true;
  bool final_norm_trainable = false;

  /// Maps negative indices and checks range against the descriptor.
  FreezePlan resolved(const ArchDescriptor& arch) const;
  bool operator==(const FreezePlan&) const = default;
};

struct LoraPlan {
  std::int64_t r = 4;
  double alpha = 8.0;
  double dropout = 0.0;
  std::set<Projection> targets;
  bool head_trainable = true;
  /// The trainable head is a copy; the original head stays in the model
  /// frozen and is counted in the total.
  bool head_copy = true;

  double scaling() const { return alpha / static_cast<double>(r); }
  void validate() const;
  bool operator==(const LoraPlan&) const = default;
};

/// An alternative denominator for the trainable fraction.
struct FractionConvention {
  std::string name;
  std::int64_t total = 0;
  double fraction = 0.0;
};

struct ParamAudit {
  std::int64_t total_params = 0;
  std::int64_t trainable_params = 0;
  double trainable_fraction = 0.0;
  std::string convention;
  std::vector<FractionConvention> alternatives;
};

/// One named parameter tensor.
struct TensorEntry {
  std::string name;
  std::vector<std::int64_t> shape;
  std::int64_t params = 0;
  bool trainable = false;
};

// Closed-form counts.
std::int64_t embedding_params(const ArchDescriptor& arch);
std::int64_t block_params(const ArchDescriptor& arch);
std::int64_t head_params(const ClassifierHeadSpec& head);
/// Total parameters of the classifier, head included.
std::int64_t count_params(const ArchDescriptor& arch);

/// Added trainable parameters of one rank-r adapter on an out x in matrix.
std::int64_t lora_delta(std::int64_t out_dim, std::int64_t in_dim, std::int64_t r);

/// (out, in) shapes of the matrices a projection name covers in one block.
std::vector<std::pair<std::int64_t, std::int64_t>> projection_shapes(const ArchDescriptor& arch,
                                                                     Projection proj);

ParamAudit audit_freeze(const ArchDescriptor& arch, const FreezePlan& plan);
ParamAudit audit_lora(const ArchDescriptor& arch, const LoraPlan& plan);

/// Per-tensor enumeration of the base model, everything frozen.
std::vector<TensorEntry> tensor_ledger(const ArchDescriptor& arch);
std::vector<TensorEntry> tensor_ledger(const ArchDescriptor& arch, const FreezePlan& plan);
/// Base tensors frozen, adapter factors (and head copy) appended.
std::vector<TensorEntry> tensor_ledger(const ArchDescriptor& arch, const LoraPlan& plan);

/// "name,shape,params,trainable" with shapes written as 896x128.
std::string ledger_csv(const std::vector<TensorEntry>& ledger);

/// Percentage rendered with `decimals` digits, e.g. "3.02%".
std::string format_percent(double fraction, int decimals);

}  // namespace mgtd
