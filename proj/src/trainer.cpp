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

#include "mgtd/trainer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "mgtd/config.hpp"
#include "mgtd/error.hpp"
#include "mgtd/evaluator.hpp"
#include "mgtd/rng.hpp"

namespace mgtd {
namespace {

void check_finite(const Logits& logits) {
  for (double v : logits) {
    if (!std::isfinite(v)) throw ValidationError("non-finite logits");
  }
}

double log_sum_exp(const Logits& logits) {
  const double m = std::max(logits[0], logits[1]);
  return m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * (epoch + 1)));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  return order;
}

void encode_all(const ModelBackend& backend, const Corpus& corpus, const TruncationPolicy& policy,
                std::vector<TokenSeq>& out) {
  out.clear();
  out.reserve(corpus.size());
  for (const auto& r : corpus) {
    auto ids = truncate(backend.encode(r.text), policy);
    if (ids.empty()) throw ValidationError("record '" + r.id + "' encodes to zero tokens");
    out.push_back(std::move(ids));
  }
}

struct ValidResult {
  double loss = 0.0;
  double macro_f1 = 0.0;
};

ValidResult validate_epoch(ModelBackend& backend, const std::vector<TokenSeq>& tokens,
                           const std::vector<Label>& labels, const ClassWeights& weights, std::size_t batch_size) {
  std::vector<Logits> logits;
  logits.reserve(tokens.size());
  for (std::size_t start = 0; start < tokens.size(); start += batch_size) {
    const auto end = std::min(tokens.size(), start + batch_size);
    std::vector<TokenSeq> batch(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                tokens.begin() + static_cast<std::ptrdiff_t>(end));
    auto out = backend.forward(batch);
    if (out.size() != batch.size()) throw std::runtime_error("backend returned the wrong number of logits");
    logits.insert(logits.end(), out.begin(), out.end());
  }
  for (const auto& l : logits) {
    if (!std::isfinite(l[0]) || !std::isfinite(l[1])) {
      return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    }
  }
  std::vector<Label> predicted;
  predicted.reserve(logits.size());
  for (const auto& l : logits) predicted.push_back(decide({}, l).label);
  return {weighted_mean_loss(logits, labels, weights), f1_scores(confusion(predicted, labels)).macro};
}

}  // namespace

TokenSeq truncate(const TokenSeq& tokens, const TruncationPolicy& policy) {
  const auto n = std::min(tokens.size(), policy.max_tokens);
  return TokenSeq(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(n));
}

double Schedule::lr_at(std::size_t step) const {
  if (step < warmup_steps) {
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (shape == ScheduleShape::Constant) return peak_lr;
  if (step >= total_steps) return 0.0;
  return peak_lr * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup_steps);
}

Schedule make_schedule(std::size_t num_examples, std::size_t batch_size, std::size_t epochs,
                       double warmup_fraction, double peak_lr, ScheduleShape shape) {
  if (num_examples == 0 || batch_size == 0 || epochs == 0) {
    throw ValidationError("schedule: examples, batch size and epochs must be positive");
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw ValidationError("schedule: warmup fraction must be in [0, 1)");
  }
  if (batch_size > num_examples) {
    throw ValidationError(fmt::format("schedule: batch size {} exceeds {} examples", batch_size, num_examples));
  }
  Schedule s;
  s.steps_per_epoch = num_examples / batch_size;
  s.total_steps = s.steps_per_epoch * epochs;
  // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
  s.warmup_steps = static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(s.total_steps) + 1e-9));
  s.peak_lr = peak_lr;
  s.shape = shape;
  return s;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (max_epochs == 0) throw ValidationError("max_epochs must be >= 1");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ValidationError("warmup_fraction must be in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("adam betas must be in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ValidationError("adam_epsilon must be positive");
  if (truncation.max_tokens == 0) throw ValidationError("max_tokens must be >= 1");
  if (!(early_stop_tolerance >= 0.0)) throw ValidationError("early_stop_tolerance must be non-negative");
  if (const auto* lora = std::get_if<LoraPlan>(&plan)) lora->validate();
}

double weighted_cross_entropy(const Logits& logits, Label label, const ClassWeights& weights) {
  check_finite(logits);
  const auto y = index_of(label);
  const double d = logits[1 - y] - logits[y];
  const double nll = d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
  return weights[label] * nll;
}

Logits weighted_cross_entropy_grad(const Logits& logits, Label label, const ClassWeights& weights) {
  check_finite(logits);
  const double lse = log_sum_exp(logits);
  Logits g{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double p = std::exp(logits[c] - lse);
    g[c] = weights[label] * (p - (c == index_of(label) ? 1.0 : 0.0));
  }
  return g;
}

double weighted_mean_loss(const std::vector<Logits>& logits, const std::vector<Label>& labels,
                          const ClassWeights& weights) {
  if (logits.size() != labels.size()) throw ValidationError("logits and labels differ in length");
  if (logits.empty()) throw ValidationError("empty batch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    num += weighted_cross_entropy(logits[i], labels[i], weights);
    den += weights[labels[i]];
  }
  return num / den;
}

double machine_probability(const Logits& logits) {
  return std::exp(logits[index_of(Label::Machine)] - log_sum_exp(logits));
}

StopDecision early_stop(const std::vector<EpochLog>& logs, double tolerance, std::size_t max_epochs) {
  if (logs.empty()) return StopDecision::Continue;
  if (max_epochs != 0 && logs.back().epoch >= max_epochs) return StopDecision::Stop;
  if (logs.size() < 2) return StopDecision::Continue;
  const double improvement = logs[logs.size() - 2].valid_loss - logs.back().valid_loss;
  return improvement < tolerance ? StopDecision::Stop : StopDecision::Continue;
}

TrainResult train(ModelBackend& backend, const Corpus& train_set, const Corpus& valid_set,
                  const TrainConfig& config, const std::filesystem::path& checkpoint_dir,
                  const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw ValidationError("training corpus is empty");
  if (valid_set.empty()) throw ValidationError("validation corpus is empty");

  const Corpus training =
      config.balance ? balance_downsample(train_set, BalanceSpec::with_human_fraction(0.5, config.seed)) : train_set;
  const ClassWeights weights = config.weighted_loss ? class_weights(training.label_counts()) : ClassWeights::uniform();
  const auto schedule = make_schedule(training.size(), config.batch_size, config.max_epochs, config.warmup_fraction,
                                      config.learning_rate, config.schedule);

  backend.prepare(config);

  std::vector<TokenSeq> train_tokens;
  std::vector<TokenSeq> valid_tokens;
  encode_all(backend, training, config.truncation, train_tokens);
  encode_all(backend, valid_set, config.truncation, valid_tokens);
  const auto train_labels = training.labels();
  const auto valid_labels = valid_set.labels();

  std::filesystem::create_directories(checkpoint_dir);
  write_text(checkpoint_dir / "config.toml", to_toml(config));

  TrainResult result;
  result.checkpoint_dir = checkpoint_dir;
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t step = 0;

  auto diverge = [&](const std::string& what) {
    write_text(checkpoint_dir / "epoch_logs.csv", epoch_logs_csv(result.logs));
    throw DivergenceError(what, result.logs);
  };

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto order = shuffled_indices(training.size(), config.seed, epoch);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < schedule.steps_per_epoch; ++b) {
      std::vector<TokenSeq> batch;
      std::vector<Label> labels;
      batch.reserve(config.batch_size);
      labels.reserve(config.batch_size);
      for (std::size_t k = 0; k < config.batch_size; ++k) {
        const auto i = order[b * config.batch_size + k];
        batch.push_back(train_tokens[i]);
        labels.push_back(train_labels[i]);
      }
      const double loss = backend.train_step(batch, labels, weights, schedule.lr_at(step));
      ++step;
      if (!std::isfinite(loss)) diverge(fmt::format("training loss became non-finite at epoch {}, step {}", epoch, step));
      loss_sum += loss;
    }

    const auto valid = validate_epoch(backend, valid_tokens, valid_labels, weights, config.batch_size);
    if (!std::isfinite(valid.loss)) diverge(fmt::format("validation loss became non-finite at epoch {}", epoch));

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(schedule.steps_per_epoch);
    log.valid_loss = valid.loss;
    log.valid_macro_f1 = valid.macro_f1;
    log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.logs.push_back(log);
    if (options.on_epoch) options.on_epoch(log);

    if (log.valid_loss < best_valid) {
      best_valid = log.valid_loss;
      result.best_epoch = epoch;
      backend.save(checkpoint_dir);
    }
    write_text(checkpoint_dir / "epoch_logs.csv", epoch_logs_csv(result.logs));

    if (early_stop(result.logs, config.early_stop_tolerance) == StopDecision::Stop) {
      result.reason = StopReason::EarlyStop;
      break;
    }
    if (early_stop(result.logs, config.early_stop_tolerance, config.max_epochs) == StopDecision::Stop) {
      result.reason = StopReason::MaxEpochs;
      break;
    }
  }

  if (result.best_epoch != result.logs.back().epoch) backend.load(checkpoint_dir);
  return result;
}

std::string epoch_logs_csv(const std::vector<EpochLog>& logs) {
  std::string out = "epoch,train_loss,valid_loss,valid_macro_f1,wall_time_s\n";
  for (const auto& l : logs) {
    out += fmt::format("{},{},{},{},{:.3f}\n", l.epoch, l.train_loss, l.valid_loss, l.valid_macro_f1, l.wall_time_s);
  }
  return out;
}

std::vector<EpochLog> parse_epoch_logs_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch,train_loss,valid_loss,valid_macro_f1,wall_time_s", 0) != 0) {
    throw ValidationError("epoch log CSV has an unexpected header");
  }
  std::vector<EpochLog> logs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw ValidationError(fmt::format("epoch log CSV line {} has {} columns", line_no, cells.size()));
    try {
      EpochLog l;
      l.epoch = std::stoul(cells[0]);
      l.train_loss = std::stod(cells[1]);
      l.valid_loss = std::stod(cells[2]);
      l.valid_macro_f1 = std::stod(cells[3]);
      l.wall_time_s = std::stod(cells[4]);
      logs.push_back(l);
    } catch (const std::logic_error&) {
      throw ValidationError(fmt::format("epoch log CSV line {} is malformed", line_no));
    }
  }
  return logs;
}

}  // namespace mgtd
