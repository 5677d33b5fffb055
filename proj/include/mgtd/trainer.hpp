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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mgtd/arch.hpp"
#include "mgtd/corpus.hpp"
#include "mgtd/sampler.hpp"
#include "mgtd/tokenizer.hpp"

namespace mgtd {

/// Two-class scores (human, machine).
using Logits = std::array<double, kNumClasses>;

enum class TruncationSide : std::uint8_t { KeepHead };

struct TruncationPolicy {
  std::size_t max_tokens = 512;
  TruncationSide side = TruncationSide::KeepHead;

  bool operator==(const TruncationPolicy&) const = default;
};

/// First min(len, max_tokens) tokens, order preserved.
TokenSeq truncate(const TokenSeq& tokens, const TruncationPolicy& policy);

enum class ScheduleShape : std::uint8_t { LinearDecay, Constant };

/// Linear warmup from 0 to the peak learning rate over `warmup_steps`, then
/// linear decay to 0 at `total_steps` (or flat, for ScheduleShape::Constant).
struct Schedule {
  std::size_t steps_per_epoch = 0;
  std::size_t total_steps = 0;
  std::size_t warmup_steps = 0;
  double peak_lr = 1.0;
  ScheduleShape shape = ScheduleShape::LinearDecay;

  double lr_at(std::size_t step) const;
};

/// steps_per_epoch drops the final partial batch.
Schedule make_schedule(std::size_t num_examples, std::size_t batch_size, std::size_t epochs,
                       double warmup_fraction, double peak_lr = 1.0,
                       ScheduleShape shape = ScheduleShape::LinearDecay);

enum class OptimizerKind : std::uint8_t { AdamW };

using TrainingPlan = std::variant<FreezePlan, LoraPlan>;

struct TrainConfig {
  std::string name = "run";
  /// Descriptor file (or builtin name) the backend is built from.
  std::string arch;
  double learning_rate = 5e-5;
  double weight_decay = 0.0;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 1;
  double warmup_fraction = 0.0;
  ScheduleShape schedule = ScheduleShape::LinearDecay;
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool weighted_loss = false;
  bool balance = false;
  std::uint64_t seed = 42;
  TruncationPolicy truncation;
  TrainingPlan plan = FreezePlan{};
  double early_stop_tolerance = 0.005;

  void validate() const;
};

/// One row of the per-epoch training log.
struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_macro_f1 = 0.0;
  double wall_time_s = 0.0;
};

/// w_label * -log softmax(logits)[label]. Throws on non-finite logits.
double weighted_cross_entropy(const Logits& logits, Label label, const ClassWeights& weights);

/// Gradient of weighted_cross_entropy with respect to the logits.
Logits weighted_cross_entropy_grad(const Logits& logits, Label label, const ClassWeights& weights);

/// Batch reduction sum(w * loss) / sum(w).
double weighted_mean_loss(const std::vector<Logits>& logits, const std::vector<Label>& labels,
                          const ClassWeights& weights);

/// softmax(logits)[Machine], computed stably.
double machine_probability(const Logits& logits);

enum class StopDecision : std::uint8_t { Continue, Stop };

/// Stops once the latest validation-loss improvement over the previous epoch
/// falls below `tolerance`, or when `max_epochs` (if nonzero) is reached.
StopDecision early_stop(const std::vector<EpochLog>& logs, double tolerance, std::size_t max_epochs = 0);

/// A trainable two-class sequence classifier. The trainer drives it; backends
/// own weights, plan application and optimizer state.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual std::string name() const = 0;
  virtual std::string tokenizer_id() const = 0;
  virtual TokenSeq encode(const std::string& text) const = 0;

  /// Applies the freeze or adapter plan and resets optimizer state.
  virtual void prepare(const TrainConfig& config) = 0;

  /// Inference-mode logits, one per sequence.
  virtual std::vector<Logits> forward(const std::vector<TokenSeq>& batch) = 0;

  /// One optimizer step on the weighted mean loss; returns that loss.
  virtual double train_step(const std::vector<TokenSeq>& batch, const std::vector<Label>& labels,
                            const ClassWeights& weights, double learning_rate) = 0;

  virtual void save(const std::filesystem::path& dir) const = 0;
  virtual void load(const std::filesystem::path& dir) = 0;
};

enum class StopReason : std::uint8_t { MaxEpochs, EarlyStop };

struct TrainResult {
  std::filesystem::path checkpoint_dir;
  std::size_t best_epoch = 0;
  std::vector<EpochLog> logs;
  StopReason reason = StopReason::MaxEpochs;
};

/// Thrown when a loss turns non-finite. Carries the epochs completed so far.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::vector<EpochLog> partial)
      : std::runtime_error(what), partial_logs(std::move(partial)) {}
  std::vector<EpochLog> partial_logs;
};

struct TrainOptions {
  /// Called after every epoch; the default prints nothing.
  std::function<void(const EpochLog&)> on_epoch;
};

/// Runs up to config.max_epochs epochs. The checkpoint directory receives a
/// config snapshot, the best-validation-loss weights and epoch_logs.csv; on
/// return the backend holds the best weights.
TrainResult train(ModelBackend& backend, const Corpus& train_set, const Corpus& valid_set,
                  const TrainConfig& config, const std::filesystem::path& checkpoint_dir,
                  const TrainOptions& options = {});

/// epoch,train_loss,valid_loss,valid_macro_f1,wall_time_s
std::string epoch_logs_csv(const std::vector<EpochLog>& logs);
std::vector<EpochLog> parse_epoch_logs_csv(const std::string& csv);

}  // namespace mgtd
