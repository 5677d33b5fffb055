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

#include "mgtd/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include <fmt/core.h>
#include "json.hpp"

#include "mgtd/error.hpp"
#include "mgtd/io.hpp"

namespace mgtd {

struct ToyBackend::LinearCache {
  Matrix input;
  Matrix lora_input;
  Matrix lora_mask;
  Matrix lora_hidden;
};

struct ToyBackend::NormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

struct ToyBackend::BlockCache {
  NormCache ln1;
  LinearCache q, k, v, o;
  Matrix queries, keys, values;
  std::vector<Matrix> probs;
  NormCache ln2;
  LinearCache fc_in, fc_out;
  Matrix pre_act;
};

struct ToyBackend::Cache {
  std::size_t length = 0;
  std::vector<BlockCache> blocks;
  NormCache final_norm;
  Eigen::Index pooled_row = 0;
  std::vector<LinearCache> head;
  std::vector<Matrix> head_masks;
  std::vector<Matrix> head_act;
};

namespace {

constexpr double kNormEps = 1e-5;
constexpr std::uint64_t kDropoutSalt = 0x9E3779B97F4A7C15ULL;
constexpr char kWeightsMagic[8] = {'M', 'G', 'T', 'D', 'T', 'O', 'Y', '1'};

const double kGeluC = std::sqrt(2.0 / std::numbers::pi);

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
  const double inner = kGeluC * (x + 0.044715 * x * x * x);
  const double t = std::tanh(inner);
  const double dinner = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

Matrix normal_matrix(Rng& rng, std::int64_t rows, std::int64_t cols, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * standard_normal(rng);
  return m;
}

void write_string(std::ostream& out, const std::string& s) {
  const auto n = static_cast<std::uint64_t>(s.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n > (1U << 20)) throw ValidationError("corrupt weights file");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

std::string linear_name(std::size_t layer, Projection proj) {
  const auto prefix = fmt::format("layers.{}.", layer);
  switch (proj) {
    case Projection::Query: return prefix + "attn.q_proj";
    case Projection::Key: return prefix + "attn.k_proj";
    case Projection::Value: return prefix + "attn.v_proj";
    case Projection::Output: return prefix + "attn.o_proj";
    case Projection::FfnIn: return prefix + "mlp.fc_in";
    case Projection::FfnOut: return prefix + "mlp.fc_out";
  }
  return prefix;
}

}  // namespace

ToyBackend::ToyBackend(ArchDescriptor arch, std::uint64_t seed)
    : arch_(std::move(arch)), init_rng_(seed), dropout_rng_(seed ^ kDropoutSalt) {
  arch_.validate();
  if (arch_.ffn_gated) throw ValidationError("toy backend supports only a plain FFN");
  if (arch_.kv_dim != arch_.hidden) throw ValidationError("toy backend requires kv_dim == hidden");
  if (arch_.max_positions <= 0) throw ValidationError("toy backend requires learned positions");
  if (arch_.vocab < 256) throw ValidationError("toy backend requires vocab >= 256");
  if (arch_.type_vocab != 0 || arch_.embedding_norm_params != 0 || !arch_.tied_embeddings) {
    throw ValidationError("toy backend has no token types, embedding norm or untied output embedding");
  }
  const std::int64_t h = arch_.hidden;
  if (arch_.norm_params_per_layer != 4 * h || arch_.final_norm_params != 2 * h) {
    throw ValidationError("toy backend uses two LayerNorms per block and one at the output");
  }

  token_embedding_ = add_param("embeddings.word_embeddings.weight", normal_matrix(init_rng_, arch_.vocab, h, 0.02), true);
  position_embedding_ =
      add_param("embeddings.position_embeddings.weight", normal_matrix(init_rng_, arch_.max_positions, h, 0.02), true);
  for (std::int64_t i = 0; i < arch_.num_layers; ++i) {
    const auto prefix = fmt::format("layers.{}.", i);
    BlockRef b;
    b.ln1 = make_norm(prefix + "ln1", h);
    b.q = make_linear(prefix + "attn.q_proj", h, h, arch_.attn_bias.query);
    b.k = make_linear(prefix + "attn.k_proj", h, h, arch_.attn_bias.key);
    b.v = make_linear(prefix + "attn.v_proj", h, h, arch_.attn_bias.value);
    b.o = make_linear(prefix + "attn.o_proj", h, h, arch_.attn_bias.output);
    b.ln2 = make_norm(prefix + "ln2", h);
    b.fc_in = make_linear(prefix + "mlp.fc_in", arch_.ffn_dim, h, arch_.ffn_bias);
    b.fc_out = make_linear(prefix + "mlp.fc_out", h, arch_.ffn_dim, arch_.ffn_bias);
    blocks_.push_back(b);
  }
  final_norm_ = make_norm("norm", h);
  for (std::size_t j = 0; j < arch_.head.layers.size(); ++j) {
    const auto& layer = arch_.head.layers[j];
    head_.push_back(make_linear(fmt::format("head.{}", j), layer.out_dim, layer.in_dim, layer.bias));
  }
  base_param_count_ = params_.size();
  backprop_floor_ = blocks_.size();
}

ArchDescriptor ToyBackend::make_descriptor(ArchKind kind, std::int64_t max_positions) {
  ArchDescriptor a;
  a.kind = kind;
  a.name = kind == ArchKind::CausalDecoder ? "toy-causal" : "toy-masked";
  a.num_layers = 2;
  a.hidden = 32;
  a.ffn_dim = 64;
  a.num_heads = 4;
  a.kv_dim = 32;
  a.vocab = 256;
  a.attn_bias = {true, true, true, true};
  a.ffn_bias = true;
  a.norm_params_per_layer = 4 * a.hidden;
  a.max_positions = max_positions;
  a.final_norm_params = 2 * a.hidden;
  a.tied_embeddings = true;
  if (kind == ArchKind::CausalDecoder) {
    a.head.layers = {{a.hidden, 2, false}};
    a.head.dropout = 0.0;
    a.head.pooling = Pooling::LastToken;
  } else {
    a.head.layers = {{a.hidden, a.hidden, true}, {a.hidden, 2, true}};
    a.head.dropout = 0.1;
    a.head.pooling = Pooling::FirstToken;
  }
  return a;
}

int ToyBackend::add_param(std::string name, Matrix value, bool decay) {
  if (index_.contains(name)) throw std::logic_error("duplicate parameter " + name);
  const int idx = static_cast<int>(params_.size());
  index_.emplace(name, idx);
  Param param;
  param.name = std::move(name);
  param.value = std::move(value);
  param.decay = decay;
  params_.push_back(std::move(param));
  return idx;
}

ToyBackend::LinearRef ToyBackend::make_linear(const std::string& name, std::int64_t out_dim, std::int64_t in_dim,
                                              bool bias) {
  LinearRef l;
  l.weight = add_param(name + ".weight", normal_matrix(init_rng_, out_dim, in_dim, 0.02), true);
  if (bias) l.bias = add_param(name + ".bias", Matrix::Zero(1, out_dim), false);
  return l;
}

ToyBackend::NormRef ToyBackend::make_norm(const std::string& name, std::int64_t dim) {
  NormRef n;
  n.gain = add_param(name + ".weight", Matrix::Ones(1, dim), false);
  n.shift = add_param(name + ".bias", Matrix::Zero(1, dim), false);
  return n;
}

const ToyBackend::Param& ToyBackend::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter " + name);
  return p(it->second);
}

const ToyBackend::LinearRef& ToyBackend::linear_for(std::size_t layer, Projection proj) const {
  if (layer >= blocks_.size()) throw ValidationError(fmt::format("layer {} out of range", layer));
  const auto& b = blocks_[layer];
  switch (proj) {
    case Projection::Query: return b.q;
    case Projection::Key: return b.k;
    case Projection::Value: return b.v;
    case Projection::Output: return b.o;
    case Projection::FfnIn: return b.fc_in;
    case Projection::FfnOut: return b.fc_out;
  }
  return b.q;
}

ToyBackend::LinearRef& ToyBackend::linear_for(std::size_t layer, Projection proj) {
  return const_cast<LinearRef&>(std::as_const(*this).linear_for(layer, proj));
}

void ToyBackend::inject_adapters(const LoraPlan& plan) {
  plan.validate();
  remove_adapters();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    for (auto proj : plan.targets) {
      auto& l = linear_for(i, proj);
      const auto& w = p(l.weight).value;
      const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
      Matrix a(plan.r, w.cols());
      for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = bound * (2.0 * uniform01(init_rng_) - 1.0);
      const auto name = linear_name(i, proj);
      const auto out_dim = w.rows();
      l.lora_a = add_param(name + ".lora_A", std::move(a), true);
      l.lora_b = add_param(name + ".lora_B", Matrix::Zero(out_dim, plan.r), true);
      p(l.lora_a).trainable = true;
      p(l.lora_b).trainable = true;
    }
  }
  lora_ = plan;
}

void ToyBackend::remove_adapters() {
  for (std::size_t i = base_param_count_; i < params_.size(); ++i) index_.erase(params_[i].name);
  params_.resize(base_param_count_);
  for (auto& b : blocks_) {
    for (LinearRef* l : {&b.q, &b.k, &b.v, &b.o, &b.fc_in, &b.fc_out}) l->lora_a = l->lora_b = -1;
  }
  lora_.reset();
}

void ToyBackend::mark_trainable(const LinearRef& l) {
  for (int idx : {l.weight, l.bias}) {
    if (idx >= 0) p(idx).trainable = true;
  }
}

void ToyBackend::mark_trainable(const NormRef& n) {
  p(n.gain).trainable = true;
  p(n.shift).trainable = true;
}

void ToyBackend::mark_block_trainable(const BlockRef& b) {
  mark_trainable(b.ln1);
  mark_trainable(b.ln2);
  for (const auto* l : {&b.q, &b.k, &b.v, &b.o, &b.fc_in, &b.fc_out}) mark_trainable(*l);
}

void ToyBackend::prepare(const TrainConfig& config) {
  if (static_cast<std::int64_t>(config.truncation.max_tokens) > arch_.max_positions) {
    throw ValidationError(fmt::format("max_tokens {} exceeds the model's {} positions", config.truncation.max_tokens,
                                      arch_.max_positions));
  }
  remove_adapters();
  for (auto& param : params_) param.trainable = false;

  bool head_trainable = false;
  bool final_norm_trainable = false;
  if (const auto* freeze = std::get_if<FreezePlan>(&config.plan)) {
    const auto plan = freeze->resolved(arch_);
    for (auto i : plan.trainable_blocks) mark_block_trainable(blocks_[static_cast<std::size_t>(i)]);
    head_trainable = plan.head_trainable;
    final_norm_trainable = plan.final_norm_trainable;
  } else {
    const auto& lora = std::get<LoraPlan>(config.plan);
    inject_adapters(lora);
    head_trainable = lora.head_trainable;
  }
  if (head_trainable) {
    for (const auto& l : head_) mark_trainable(l);
  }
  if (final_norm_trainable) mark_trainable(final_norm_);

  backprop_floor_ = blocks_.size();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    bool any = p(b.ln1.gain).trainable || p(b.ln2.gain).trainable;
    for (const auto* l : {&b.q, &b.k, &b.v, &b.o, &b.fc_in, &b.fc_out}) {
      any = any || p(l->weight).trainable || (l->lora_a >= 0 && p(l->lora_a).trainable);
    }
    if (any) {
      backprop_floor_ = i;
      break;
    }
  }
  body_trainable_ = backprop_floor_ < blocks_.size() || final_norm_trainable;

  for (auto& param : params_) {
    if (param.trainable) {
      param.grad = Matrix::Zero(param.value.rows(), param.value.cols());
      param.adam_m = param.grad;
      param.adam_v = param.grad;
    } else {
      param.grad.resize(0, 0);
      param.adam_m.resize(0, 0);
      param.adam_v.resize(0, 0);
    }
  }
  weight_decay_ = config.weight_decay;
  beta1_ = config.adam_beta1;
  beta2_ = config.adam_beta2;
  epsilon_ = config.adam_epsilon;
  adam_step_ = 0;
  dropout_rng_ = Rng(config.seed ^ kDropoutSalt);
}

Matrix ToyBackend::dropout_mask(Eigen::Index rows, Eigen::Index cols, double prob) const {
  Matrix mask(rows, cols);
  const double keep = 1.0 / (1.0 - prob);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform01(dropout_rng_) < prob ? 0.0 : keep;
  return mask;
}

Matrix ToyBackend::linear_forward(const LinearRef& l, const Matrix& x, LinearCache& cache, bool train) const {
  cache.input = x;
  Matrix y = x * p(l.weight).value.transpose();
  if (l.bias >= 0) y.rowwise() += p(l.bias).value.row(0);
  if (l.lora_a >= 0) {
    const double drop = lora_->dropout;
    if (train && dropout_enabled_ && drop > 0.0) {
      cache.lora_mask = dropout_mask(x.rows(), x.cols(), drop);
      cache.lora_input = x.cwiseProduct(cache.lora_mask);
    } else {
      cache.lora_mask.resize(0, 0);
      cache.lora_input = x;
    }
    cache.lora_hidden = cache.lora_input * p(l.lora_a).value.transpose();
    y.noalias() += lora_->scaling() * (cache.lora_hidden * p(l.lora_b).value.transpose());
  }
  return y;
}

Matrix ToyBackend::linear_backward(const LinearRef& l, const LinearCache& cache, const Matrix& dy) {
  auto& w = p(l.weight);
  if (w.trainable) w.grad.noalias() += dy.transpose() * cache.input;
  if (l.bias >= 0 && p(l.bias).trainable) p(l.bias).grad += dy.colwise().sum();
  Matrix dx = dy * w.value;
  if (l.lora_a >= 0) {
    auto& a = p(l.lora_a);
    auto& b = p(l.lora_b);
    const double scale = lora_->scaling();
    const Matrix dhidden = scale * (dy * b.value);
    if (b.trainable) b.grad.noalias() += scale * (dy.transpose() * cache.lora_hidden);
    if (a.trainable) a.grad.noalias() += dhidden.transpose() * cache.lora_input;
    Matrix dxin = dhidden * a.value;
    if (cache.lora_mask.size() > 0) dxin = dxin.cwiseProduct(cache.lora_mask);
    dx += dxin;
  }
  return dx;
}

Matrix ToyBackend::norm_forward(const NormRef& n, const Matrix& x, NormCache& cache) const {
  const Eigen::Index rows = x.rows();
  cache.xhat.resize(rows, x.cols());
  cache.inv_std.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = x.row(r).mean();
    const Eigen::RowVectorXd centered = x.row(r).array() - mu;
    const double var = centered.squaredNorm() / static_cast<double>(x.cols());
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    cache.inv_std(r) = inv;
    cache.xhat.row(r) = centered * inv;
  }
  Matrix y = cache.xhat.array().rowwise() * p(n.gain).value.row(0).array();
  y.rowwise() += p(n.shift).value.row(0);
  return y;
}

Matrix ToyBackend::norm_backward(const NormRef& n, const NormCache& cache, const Matrix& dy) {
  auto& gain = p(n.gain);
  auto& shift = p(n.shift);
  if (gain.trainable) gain.grad += dy.cwiseProduct(cache.xhat).colwise().sum();
  if (shift.trainable) shift.grad += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.value.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double m1 = dxhat.row(r).mean();
    const double m2 = dxhat.row(r).cwiseProduct(cache.xhat.row(r)).mean();
    dx.row(r) = cache.inv_std(r) * (dxhat.row(r).array() - m1 - cache.xhat.row(r).array() * m2).matrix();
  }
  return dx;
}

Matrix ToyBackend::attention_forward(const BlockRef& b, const Matrix& h, BlockCache& cache, bool train) const {
  cache.queries = linear_forward(b.q, h, cache.q, train);
  cache.keys = linear_forward(b.k, h, cache.k, train);
  cache.values = linear_forward(b.v, h, cache.v, train);
  const Eigen::Index len = h.rows();
  const Eigen::Index heads = arch_.num_heads;
  const Eigen::Index d = arch_.hidden / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const bool causal = arch_.kind == ArchKind::CausalDecoder;

  Matrix context(len, arch_.hidden);
  cache.probs.assign(static_cast<std::size_t>(heads), Matrix());
  for (Eigen::Index hd = 0; hd < heads; ++hd) {
    const Matrix scores = scale * (cache.queries.middleCols(hd * d, d) * cache.keys.middleCols(hd * d, d).transpose());
    Matrix probs = Matrix::Zero(len, len);
    for (Eigen::Index i = 0; i < len; ++i) {
      const Eigen::Index visible = causal ? i + 1 : len;
      const double mx = scores.row(i).head(visible).maxCoeff();
      const Eigen::RowVectorXd e = (scores.row(i).head(visible).array() - mx).exp();
      probs.row(i).head(visible) = e / e.sum();
    }
    context.middleCols(hd * d, d) = probs * cache.values.middleCols(hd * d, d);
    cache.probs[static_cast<std::size_t>(hd)] = std::move(probs);
  }
  return linear_forward(b.o, context, cache.o, train);
}

Matrix ToyBackend::attention_backward(const BlockRef& b, BlockCache& cache, const Matrix& dout) {
  const Matrix dcontext = linear_backward(b.o, cache.o, dout);
  const Eigen::Index len = dout.rows();
  const Eigen::Index heads = arch_.num_heads;
  const Eigen::Index d = arch_.hidden / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix dq(len, arch_.hidden);
  Matrix dk(len, arch_.hidden);
  Matrix dv(len, arch_.hidden);
  for (Eigen::Index hd = 0; hd < heads; ++hd) {
    const auto& probs = cache.probs[static_cast<std::size_t>(hd)];
    const Matrix dctx = dcontext.middleCols(hd * d, d);
    const Matrix dprobs = dctx * cache.values.middleCols(hd * d, d).transpose();
    dv.middleCols(hd * d, d) = probs.transpose() * dctx;
    const Eigen::VectorXd rowdot = dprobs.cwiseProduct(probs).rowwise().sum();
    const Matrix dscores = probs.cwiseProduct(dprobs.colwise() - rowdot);
    dq.middleCols(hd * d, d) = scale * (dscores * cache.keys.middleCols(hd * d, d));
    dk.middleCols(hd * d, d) = scale * (dscores.transpose() * cache.queries.middleCols(hd * d, d));
  }
  Matrix dh = linear_backward(b.q, cache.q, dq);
  dh += linear_backward(b.k, cache.k, dk);
  dh += linear_backward(b.v, cache.v, dv);
  return dh;
}

void ToyBackend::check_tokens(const TokenSeq& tokens) const {
  if (tokens.empty()) throw ValidationError("empty token sequence");
  if (static_cast<std::int64_t>(tokens.size()) > arch_.max_positions) {
    throw ValidationError(
        fmt::format("sequence of {} tokens exceeds {} positions", tokens.size(), arch_.max_positions));
  }
  for (auto t : tokens) {
    if (t < 0 || t >= arch_.vocab) throw ValidationError(fmt::format("token id {} outside vocab", t));
  }
}

Logits ToyBackend::forward_cached(const TokenSeq& tokens, Cache& cache, bool train) const {
  check_tokens(tokens);
  const auto len = static_cast<Eigen::Index>(tokens.size());
  cache.length = tokens.size();
  const auto& emb = p(token_embedding_).value;
  const auto& pos = p(position_embedding_).value;
  Matrix x(len, arch_.hidden);
  for (Eigen::Index t = 0; t < len; ++t) x.row(t) = emb.row(tokens[static_cast<std::size_t>(t)]) + pos.row(t);

  cache.blocks.resize(blocks_.size());
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const auto& b = blocks_[l];
    auto& bc = cache.blocks[l];
    x += attention_forward(b, norm_forward(b.ln1, x, bc.ln1), bc, train);
    const Matrix u = linear_forward(b.fc_in, norm_forward(b.ln2, x, bc.ln2), bc.fc_in, train);
    bc.pre_act = u;
    x += linear_forward(b.fc_out, u.unaryExpr(&gelu), bc.fc_out, train);
  }
  const Matrix xf = norm_forward(final_norm_, x, cache.final_norm);
  cache.pooled_row = arch_.head.pooling == Pooling::LastToken ? len - 1 : 0;

  Matrix z = xf.row(cache.pooled_row);
  const double drop = arch_.head.dropout;
  cache.head.resize(head_.size());
  cache.head_masks.assign(head_.size(), Matrix());
  cache.head_act.assign(head_.size(), Matrix());
  for (std::size_t j = 0; j < head_.size(); ++j) {
    if (train && dropout_enabled_ && drop > 0.0) {
      cache.head_masks[j] = dropout_mask(z.rows(), z.cols(), drop);
      z = z.cwiseProduct(cache.head_masks[j]);
    }
    z = linear_forward(head_[j], z, cache.head[j], train);
    if (j + 1 < head_.size()) {
      z = z.array().tanh().matrix();
      cache.head_act[j] = z;
    }
  }
  return {z(0, 0), z(0, 1)};
}

void ToyBackend::backward(Cache& cache, const Logits& dlogits) {
  Matrix dz(1, 2);
  dz << dlogits[0], dlogits[1];
  for (std::size_t j = head_.size(); j-- > 0;) {
    if (j + 1 < head_.size()) {
      dz = dz.cwiseProduct((1.0 - cache.head_act[j].array().square()).matrix());
    }
    dz = linear_backward(head_[j], cache.head[j], dz);
    if (cache.head_masks[j].size() > 0) dz = dz.cwiseProduct(cache.head_masks[j]);
  }
  if (!body_trainable_) return;

  Matrix dxf = Matrix::Zero(static_cast<Eigen::Index>(cache.length), arch_.hidden);
  dxf.row(cache.pooled_row) = dz.row(0);
  Matrix dx = norm_backward(final_norm_, cache.final_norm, dxf);
  for (std::size_t l = blocks_.size(); l-- > backprop_floor_;) {
    const auto& b = blocks_[l];
    auto& bc = cache.blocks[l];
    const Matrix dact = linear_backward(b.fc_out, bc.fc_out, dx);
    const Matrix du = dact.cwiseProduct(bc.pre_act.unaryExpr(&gelu_grad));
    dx += norm_backward(b.ln2, bc.ln2, linear_backward(b.fc_in, bc.fc_in, du));
    dx += norm_backward(b.ln1, bc.ln1, attention_backward(b, bc, dx));
  }
}

void ToyBackend::zero_grads() {
  for (auto& param : params_) {
    if (param.trainable) param.grad.setZero();
  }
}

Logits ToyBackend::logits(const TokenSeq& tokens) const {
  Cache cache;
  return forward_cached(tokens, cache, false);
}

std::vector<Logits> ToyBackend::forward(const std::vector<TokenSeq>& batch) {
  std::vector<Logits> out;
  out.reserve(batch.size());
  for (const auto& seq : batch) out.push_back(logits(seq));
  return out;
}

double ToyBackend::loss_and_gradients(const std::vector<TokenSeq>& batch, const std::vector<Label>& labels,
                                      const ClassWeights& weights) {
  if (batch.empty() || batch.size() != labels.size()) {
    throw ValidationError("batch and labels must be non-empty and the same length");
  }
  zero_grads();
  double weight_sum = 0.0;
  for (auto label : labels) weight_sum += weights[label];
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Cache cache;
    const Logits z = forward_cached(batch[i], cache, true);
    if (!std::isfinite(z[0]) || !std::isfinite(z[1])) return std::numeric_limits<double>::quiet_NaN();
    total += weighted_cross_entropy(z, labels[i], weights);
    Logits g = weighted_cross_entropy_grad(z, labels[i], weights);
    g[0] /= weight_sum;
    g[1] /= weight_sum;
    backward(cache, g);
  }
  return total / weight_sum;
}

double ToyBackend::train_step(const std::vector<TokenSeq>& batch, const std::vector<Label>& labels,
                              const ClassWeights& weights, double learning_rate) {
  const double loss = loss_and_gradients(batch, labels, weights);
  if (!std::isfinite(loss)) return loss;
  ++adam_step_;
  const double t = static_cast<double>(adam_step_);
  const double bias1 = 1.0 - std::pow(beta1_, t);
  const double bias2 = 1.0 - std::pow(beta2_, t);
  const double step = learning_rate / bias1;
  const double sqrt_bias2 = std::sqrt(bias2);
  for (auto& param : params_) {
    if (!param.trainable) continue;
    if (param.decay && weight_decay_ > 0.0) param.value *= 1.0 - learning_rate * weight_decay_;
    param.adam_m = beta1_ * param.adam_m + (1.0 - beta1_) * param.grad;
    param.adam_v = beta2_ * param.adam_v + (1.0 - beta2_) * param.grad.cwiseAbs2();
    const Matrix denom = (param.adam_v.array().sqrt() / sqrt_bias2 + epsilon_).matrix();
    param.value.array() -= step * param.adam_m.array() / denom.array();
  }
  return loss;
}

void ToyBackend::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json model = {{"backend", "toy"}, {"arch", arch_}};
  model["lora"] = lora_ ? nlohmann::json(*lora_) : nlohmann::json(nullptr);
  write_json_file(dir / "model.json", model);

  std::ofstream out(dir / "weights.bin", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / "weights.bin").string());
  out.write(kWeightsMagic, sizeof kWeightsMagic);
  const auto count = static_cast<std::uint64_t>(params_.size());
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& param : params_) {
    write_string(out, param.name);
    const std::int64_t dims[2] = {param.value.rows(), param.value.cols()};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    out.write(reinterpret_cast<const char*>(param.value.data()),
              static_cast<std::streamsize>(param.value.size() * static_cast<Eigen::Index>(sizeof(double))));
  }
  if (!out) throw std::runtime_error("write failed: " + (dir / "weights.bin").string());
}

void ToyBackend::load(const std::filesystem::path& dir) {
  const auto model = read_json_file(dir / "model.json");
  if (model.value("backend", "") != "toy") throw ValidationError(dir.string() + " is not a toy checkpoint");
  if (model.at("arch").get<ArchDescriptor>() != arch_) {
    throw ValidationError(dir.string() + ": checkpoint architecture does not match the model");
  }
  if (model.contains("lora") && !model["lora"].is_null()) {
    inject_adapters(model["lora"].get<LoraPlan>());
  } else {
    remove_adapters();
  }

  std::ifstream in(dir / "weights.bin", std::ios::binary);
  if (!in) throw ValidationError("cannot open " + (dir / "weights.bin").string());
  char magic[sizeof kWeightsMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kWeightsMagic, sizeof magic) != 0) throw ValidationError("corrupt weights file");
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || count != params_.size()) throw ValidationError("weights file does not match the model's tensors");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name = read_string(in);
    std::int64_t dims[2] = {0, 0};
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    auto it = index_.find(name);
    if (!in || it == index_.end()) throw ValidationError("unexpected tensor " + name + " in weights file");
    auto& value = p(it->second).value;
    if (dims[0] != value.rows() || dims[1] != value.cols()) throw ValidationError("shape mismatch for " + name);
    in.read(reinterpret_cast<char*>(value.data()),
            static_cast<std::streamsize>(value.size() * static_cast<Eigen::Index>(sizeof(double))));
    if (!in) throw ValidationError("truncated weights file");
  }
}

ToyBackend ToyBackend::from_checkpoint(const std::filesystem::path& dir) {
  const auto model = read_json_file(dir / "model.json");
  if (!model.contains("arch")) throw ValidationError(dir.string() + ": model.json has no arch");
  ToyBackend backend(model["arch"].get<ArchDescriptor>(), 0);
  backend.load(dir);
  return backend;
}

std::vector<std::string> ToyBackend::parameter_names() const {
  std::vector<std::string> names;
  names.reserve(params_.size());
  for (const auto& param : params_) names.push_back(param.name);
  return names;
}

const Matrix& ToyBackend::parameter(const std::string& name) const { return find(name).value; }

Matrix& ToyBackend::mutable_parameter(const std::string& name) {
  return const_cast<Param&>(find(name)).value;
}

const Matrix& ToyBackend::gradient(const std::string& name) const { return find(name).grad; }

bool ToyBackend::is_trainable(const std::string& name) const { return find(name).trainable; }

std::map<std::string, Matrix> ToyBackend::snapshot() const {
  std::map<std::string, Matrix> out;
  for (const auto& param : params_) out.emplace(param.name, param.value);
  return out;
}

std::int64_t ToyBackend::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& param : params_) n += param.value.size();
  return n;
}

std::int64_t ToyBackend::trainable_parameter_count() const {
  std::int64_t n = 0;
  for (const auto& param : params_) {
    if (param.trainable) n += param.value.size();
  }
  return n;
}

Matrix ToyBackend::merged_weight(std::size_t layer, Projection proj) const {
  const auto& l = linear_for(layer, proj);
  Matrix w = p(l.weight).value;
  if (l.lora_a >= 0) w.noalias() += lora_->scaling() * (p(l.lora_b).value * p(l.lora_a).value);
  return w;
}

ToyBackend ToyBackend::merged() const {
  ToyBackend copy = *this;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    for (auto proj : {Projection::Query, Projection::Key, Projection::Value, Projection::Output, Projection::FfnIn,
                      Projection::FfnOut}) {
      copy.p(copy.linear_for(i, proj).weight).value = merged_weight(i, proj);
    }
  }
  copy.remove_adapters();
  return copy;
}

}  // namespace mgtd
