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

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgtd/arch.hpp"
#include "mgtd/rng.hpp"
#include "mgtd/tokenizer.hpp"
#include "mgtd/trainer.hpp"

namespace mgtd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Small byte-level transformer classifier that runs on the CPU in double
/// precision with hand-written backpropagation. Supports both pre-norm
/// decoder (causal mask, last-token pooling) and encoder (bidirectional,
/// first-token pooling) layouts, freeze plans and LoRA adapters.
///
/// Descriptor subset: plain GELU FFN, kv_dim == hidden, LayerNorm (gain and
/// shift) before attention, before the FFN and at the output, learned
/// positions, tied embeddings, vocab >= 256.
class ToyBackend final : public ModelBackend {
 public:
  explicit ToyBackend(ArchDescriptor arch, std::uint64_t seed = 0);

  /// 2 layers, hidden 32, 4 heads, FFN 64, vocab 256. Causal models get a
  /// single bias-free 32->2 head; masked models the two-layer dense+out head.
  static ArchDescriptor make_descriptor(ArchKind kind = ArchKind::CausalDecoder, std::int64_t max_positions = 256);

  /// Restores a model written by save().
  static ToyBackend from_checkpoint(const std::filesystem::path& dir);

  std::string name() const override { return "toy"; }
  std::string tokenizer_id() const override { return tokenizer_.id(); }
  TokenSeq encode(const std::string& text) const override { return tokenizer_.encode(text); }
  void prepare(const TrainConfig& config) override;
  std::vector<Logits> forward(const std::vector<TokenSeq>& batch) override;
  double train_step(const std::vector<TokenSeq>& batch, const std::vector<Label>& labels,
                    const ClassWeights& weights, double learning_rate) override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

  const ArchDescriptor& descriptor() const { return arch_; }
  const std::optional<LoraPlan>& lora_plan() const { return lora_; }

  /// Inference logits for one sequence.
  Logits logits(const TokenSeq& tokens) const;

  /// Weighted mean loss of the batch; fills gradients of trainable tensors
  /// without updating anything. Dropout follows set_dropout().
  double loss_and_gradients(const std::vector<TokenSeq>& batch, const std::vector<Label>& labels,
                            const ClassWeights& weights);

  /// Disables all dropout (head and adapters) when false.
  void set_dropout(bool enabled) { dropout_enabled_ = enabled; }

  std::vector<std::string> parameter_names() const;
  const Matrix& parameter(const std::string& name) const;
  Matrix& mutable_parameter(const std::string& name);
  const Matrix& gradient(const std::string& name) const;
  bool is_trainable(const std::string& name) const;
  std::map<std::string, Matrix> snapshot() const;

  std::int64_t parameter_count() const;
  std::int64_t trainable_parameter_count() const;

  /// base + (alpha / r) * B * A for an adapted projection, else the base weight.
  Matrix merged_weight(std::size_t layer, Projection proj) const;
  /// Copy with every adapter folded into its base weight.
  ToyBackend merged() const;

 private:
  struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix adam_m;
    Matrix adam_v;
    bool trainable = false;
    bool decay = true;
  };
  struct LinearRef {
    int weight = -1;
    int bias = -1;
    int lora_a = -1;
    int lora_b = -1;
  };
  struct NormRef {
    int gain = -1;
    int shift = -1;
  };
  struct BlockRef {
    NormRef ln1;
    LinearRef q, k, v, o;
    NormRef ln2;
    LinearRef fc_in, fc_out;
  };
  struct LinearCache;
  struct NormCache;
  struct BlockCache;
  struct Cache;

  int add_param(std::string name, Matrix value, bool decay);
  Param& p(int idx) { return params_[static_cast<std::size_t>(idx)]; }
  const Param& p(int idx) const { return params_[static_cast<std::size_t>(idx)]; }
  const Param& find(const std::string& name) const;
  LinearRef make_linear(const std::string& name, std::int64_t out_dim, std::int64_t in_dim, bool bias);
  NormRef make_norm(const std::string& name, std::int64_t dim);
  const LinearRef& linear_for(std::size_t layer, Projection proj) const;
  LinearRef& linear_for(std::size_t layer, Projection proj);
  void inject_adapters(const LoraPlan& plan);
  void remove_adapters();
  void mark_trainable(const LinearRef& l);
  void mark_trainable(const NormRef& n);
  void mark_block_trainable(const BlockRef& b);

  Matrix linear_forward(const LinearRef& l, const Matrix& x, LinearCache& cache, bool train) const;
  Matrix linear_backward(const LinearRef& l, const LinearCache& cache, const Matrix& dy);
  Matrix norm_forward(const NormRef& n, const Matrix& x, NormCache& cache) const;
  Matrix norm_backward(const NormRef& n, const NormCache& cache, const Matrix& dy);
  Matrix attention_forward(const BlockRef& b, const Matrix& h, BlockCache& cache, bool train) const;
  Matrix attention_backward(const BlockRef& b, BlockCache& cache, const Matrix& dout);
  Logits forward_cached(const TokenSeq& tokens, Cache& cache, bool train) const;
  void backward(Cache& cache, const Logits& dlogits);
  Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p) const;
  void zero_grads();
  void check_tokens(const TokenSeq& tokens) const;

  ArchDescriptor arch_;
  ByteTokenizer tokenizer_;
  std::vector<Param> params_;
  std::map<std::string, int> index_;
  int token_embedding_ = -1;
  int position_embedding_ = -1;
  std::vector<BlockRef> blocks_;
  NormRef final_norm_;
  std::vector<LinearRef> head_;
  std::optional<LoraPlan> lora_;
  /// Blocks below this index hold nothing trainable.
  std::size_t backprop_floor_ = 0;
  bool body_trainable_ = false;
  std::size_t base_param_count_ = 0;

  Rng init_rng_;
  mutable Rng dropout_rng_;
  bool dropout_enabled_ = true;
  double weight_decay_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double epsilon_ = 1e-8;
  std::uint64_t adam_step_ = 0;
};

}  // namespace mgtd
