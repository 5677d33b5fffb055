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

// Brute-force parameter enumeration written directly from the layer
// definitions. Shares nothing with the closed-form counts in arch.cpp.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mgtd/arch.hpp"

namespace mgtd::oracle {

struct Tensor {
  std::string name;
  std::int64_t numel = 0;
  bool trainable = false;
};

struct Census {
  std::int64_t total = 0;
  std::int64_t trainable = 0;
};

inline Census census(const std::vector<Tensor>& tensors) {
  Census c;
  for (const auto& t : tensors) {
    c.total += t.numel;
    if (t.trainable) c.trainable += t.numel;
  }
  return c;
}

struct Options {
  std::set<std::int64_t> trainable_layers;
  bool head = false;
  bool final_norm = false;
};

inline std::vector<Tensor> enumerate(const ArchDescriptor& a, const Options& opt = {}) {
  std::vector<Tensor> t;
  auto add = [&t](std::string name, std::int64_t rows, std::int64_t cols, bool trainable) {
    if (rows * cols > 0) t.push_back({std::move(name), rows * cols, trainable});
  };
  const auto h = a.hidden;
  const auto f = a.ffn_dim;
  const auto kv = a.kv_dim;
  add("tok", a.vocab, h, false);
  add("pos", a.max_positions, h, false);
  add("type", a.type_vocab, h, false);
  add("emb_norm", a.embedding_norm_params, 1, false);
  for (std::int64_t l = 0; l < a.num_layers; ++l) {
    const bool on = opt.trainable_layers.count(l) > 0;
    const auto p = "l" + std::to_string(l) + ".";
    add(p + "q.w", h, h, on);
    if (a.attn_bias.query) add(p + "q.b", h, 1, on);
    add(p + "k.w", kv, h, on);
    if (a.attn_bias.key) add(p + "k.b", kv, 1, on);
    add(p + "v.w", kv, h, on);
    if (a.attn_bias.value) add(p + "v.b", kv, 1, on);
    add(p + "o.w", h, h, on);
    if (a.attn_bias.output) add(p + "o.b", h, 1, on);
    if (a.ffn_gated) {
      add(p + "gate.w", f, h, on);
      add(p + "up.w", f, h, on);
      add(p + "down.w", h, f, on);
      if (a.ffn_bias) {
        add(p + "gate.b", f, 1, on);
        add(p + "up.b", f, 1, on);
        add(p + "down.b", h, 1, on);
      }
    } else {
      add(p + "fc1.w", f, h, on);
      add(p + "fc2.w", h, f, on);
      if (a.ffn_bias) {
        add(p + "fc1.b", f, 1, on);
        add(p + "fc2.b", h, 1, on);
      }
    }
    add(p + "norms", a.norm_params_per_layer, 1, on);
  }
  add("final_norm", a.final_norm_params, 1, opt.final_norm);
  if (!a.tied_embeddings) add("lm_head", a.vocab, h, false);
  for (std::size_t j = 0; j < a.head.layers.size(); ++j) {
    const auto& l = a.head.layers[j];
    add("head" + std::to_string(j) + ".w", l.out_dim, l.in_dim, opt.head);
    if (l.bias) add("head" + std::to_string(j) + ".b", l.out_dim, 1, opt.head);
  }
  return t;
}

inline std::vector<Tensor> enumerate_freeze(const ArchDescriptor& a, const FreezePlan& plan) {
  Options opt;
  for (auto i : plan.trainable_blocks) opt.trainable_layers.insert(i < 0 ? i + a.num_layers : i);
  opt.head = plan.head_trainable;
  opt.final_norm = plan.final_norm_trainable;
  return enumerate(a, opt);
}

inline std::vector<Tensor> enumerate_lora(const ArchDescriptor& a, const LoraPlan& plan) {
  auto t = enumerate(a);
  const auto h = a.hidden;
  const auto f = a.ffn_dim;
  const auto kv = a.kv_dim;
  const auto r = plan.r;
  for (std::int64_t l = 0; l < a.num_layers; ++l) {
    std::vector<std::pair<std::int64_t, std::int64_t>> mats;  // (out, in)
    for (auto proj : plan.targets) {
      switch (proj) {
        case Projection::Query: mats.emplace_back(h, h); break;
        case Projection::Key: mats.emplace_back(kv, h); break;
        case Projection::Value: mats.emplace_back(kv, h); break;
        case Projection::Output: mats.emplace_back(h, h); break;
        case Projection::FfnIn:
          mats.emplace_back(f, h);
          if (a.ffn_gated) mats.emplace_back(f, h);
          break;
        case Projection::FfnOut: mats.emplace_back(h, f); break;
      }
    }
    for (std::size_t m = 0; m < mats.size(); ++m) {
      const auto [out, in] = mats[m];
      t.push_back({"l" + std::to_string(l) + ".A" + std::to_string(m), r * in, true});
      t.push_back({"l" + std::to_string(l) + ".B" + std::to_string(m), out * r, true});
    }
  }
  if (plan.head_trainable) {
    for (std::size_t j = 0; j < a.head.layers.size(); ++j) {
      const auto& l = a.head.layers[j];
      const auto n = l.out_dim * l.in_dim + (l.bias ? l.out_dim : 0);
      if (plan.head_copy) {
        t.push_back({"head_copy" + std::to_string(j), n, true});
      } else {
        for (auto& x : t) {
          if (x.name.rfind("head" + std::to_string(j) + ".", 0) == 0) x.trainable = true;
        }
      }
    }
  }
  return t;
}

}  // namespace mgtd::oracle
