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

#include "mgtd/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgtd/arch.hpp"
#include "mgtd/config.hpp"
#include "mgtd/corpus.hpp"
#include "mgtd/error.hpp"
#include "mgtd/evaluator.hpp"
#include "mgtd/io.hpp"
#include "mgtd/length_stats.hpp"
#include "mgtd/reporter.hpp"
#include "mgtd/sampler.hpp"
#include "mgtd/tokenizer.hpp"
#include "mgtd/toy_model.hpp"
#include "mgtd/trainer.hpp"

namespace mgtd {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string with_commas(std::int64_t n) {
  auto digits = std::to_string(n < 0 ? -n : n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return n < 0 ? "-" + out : out;
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json counts_json(const LabelCounts& c) {
  return {{"human", c[index_of(Label::Human)]}, {"machine", c[index_of(Label::Machine)]}};
}

/// Options every subcommand carries.
struct Common {
  std::uint64_t seed = 42;
  bool json = false;
  std::string config;
};

void add_common(CLI::App* sub, Common& c, bool config_file) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_flag("--json", c.json, "Machine-readable output on stdout");
  if (config_file) sub->add_option("--config", c.config, "TOML file of option defaults (keys are option names)");
}

std::vector<std::string> config_results(const ConfigValue& value) {
  return std::visit(
      [](const auto& v) -> std::vector<std::string> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return {v ? "true" : "false"};
        } else if constexpr (std::is_same_v<T, std::string>) {
          return {v};
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
          return v;
        } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
          std::vector<std::string> out;
          for (auto x : v) out.push_back(std::to_string(x));
          return out;
        } else {
          return {fmt::format("{}", v)};
        }
      },
      value);
}

// Options given on the command line win over the file.
void apply_config_file(CLI::App& sub, const Common& c) {
  if (c.config.empty()) return;
  for (const auto& [key, value] : load_flat_config(c.config)) {
    auto* opt = key == "config" ? nullptr : sub.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ValidationError(fmt::format("{}: unknown key '{}' for '{}'", c.config, key, sub.get_name()));
    if (opt->count() > 0) continue;
    for (const auto& r : config_results(value)) opt->add_result(r);
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw ValidationError(fmt::format("{}: bad value for '{}': {}", c.config, key, e.what()));
    }
  }
}

struct IngestCmd {
  Common common;
  std::string input;
  std::string split = "train";
  std::string output;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("ingest", "Validate a JSONL corpus and report its composition");
    sub->add_option("--input", input, "Corpus file (JSON Lines)")->required();
    sub->add_option("--split", split, "train|dev|test")->capture_default_str();
    sub->add_option("--output", output, "Write the normalized corpus here");
    add_common(sub, common, true);
  }

  int run(std::ostream& out) const {
    const auto corpus = load_corpus(input, parse_split(split));
    if (!output.empty()) write_corpus(corpus, output);
    const auto counts = corpus.label_counts();
    const auto sources = group_counts(corpus, GroupField::Source);
    const auto generators = group_counts(corpus, GroupField::Generator);
    if (common.json) {
      out << ordered_json{{"records", corpus.size()}, {"labels", counts_json(counts)},
                          {"sha256", corpus.provenance().digest}, {"sources", sources},
                          {"generators", generators}}
                 .dump(2)
          << '\n';
      return kExitOk;
    }
    fmt::print(out, "records: {}\nhuman: {}\nmachine: {}\nsha256: {}\n", corpus.size(), counts[0], counts[1],
               corpus.provenance().digest);
    for (const auto& [source, n] : sources) fmt::print(out, "source {}: {}\n", source, n);
    return kExitOk;
  }
};

struct StatsCmd {
  Common common;
  std::string input;
  std::string split = "train";
  std::string tokenizer = "byte-256";
  std::size_t bucket_width = kDefaultBucketWidth;
  std::string out_path;
  std::string compare;
  std::string plot;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("stats", "Token-length statistics per label");
    sub->add_option("--input", input, "Corpus file (JSON Lines)")->required();
    sub->add_option("--split", split, "train|dev|test")->capture_default_str();
    sub->add_option("--tokenizer", tokenizer, "byte-256|whitespace")->capture_default_str();
    sub->add_option("--bucket-width", bucket_width, "Histogram bucket width in tokens")->capture_default_str();
    sub->add_option("--out", out_path, "Write the statistics as JSON");
    sub->add_option("--compare", compare, "Second corpus; report the mean-length shift against it");
    sub->add_option("--plot", plot, "Write a histogram SVG (and CSV sidecar)");
    add_common(sub, common, true);
  }

  int run(std::ostream& out) const {
    const auto tok = make_tokenizer(tokenizer);
    const auto stats = token_length_stats(load_corpus(input, parse_split(split)), *tok, bucket_width);
    std::optional<LengthShift> shift;
    if (!compare.empty()) {
      const auto other = token_length_stats(load_corpus(compare, Split::Test), *tok, bucket_width);
      shift = compare_lengths(stats, other);
    }
    if (!out_path.empty()) write_file(out_path, nlohmann::json(stats).dump(2) + "\n");
    if (!plot.empty()) render_histogram(stats, plot);
    if (common.json) {
      nlohmann::json j = stats;
      if (shift) j["shift"] = *shift;
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    fmt::print(out, "tokenizer: {}\nrecords: {}\n", stats.tokenizer, stats.records);
    for (const auto& [label, s] : stats.per_label) {
      fmt::print(out, "{}: n={} mean={:.2f} median={:.1f} p95={:.1f} max={}\n", to_string(label), s.records, s.mean,
                 s.median, s.p95, s.max);
    }
    if (shift) out << length_shift_summary(*shift);
    return kExitOk;
  }
};

struct BalanceCmd {
  Common common;
  std::string input;
  std::string output;
  double ratio = 0.5;
  std::string group_by;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("balance", "Downsample a training corpus to a target class ratio");
    sub->add_option("--input", input, "Training corpus (JSON Lines)")->required();
    sub->add_option("--output", output, "Balanced corpus output")->required();
    sub->add_option("--ratio", ratio, "Target human fraction")->capture_default_str();
    sub->add_option("--group-by", group_by, "Balance within each source|generator|language");
    add_common(sub, common, true);
  }

  int run(std::ostream& out) const {
    const auto corpus = load_corpus(input, Split::Train);
    auto spec = BalanceSpec::with_human_fraction(ratio, common.seed);
    if (!group_by.empty()) spec.group_by = parse_group_field(group_by);
    const auto balanced = balance_downsample(corpus, spec);
    write_corpus(balanced, output);
    const auto before = corpus.label_counts();
    const auto after = balanced.label_counts();
    if (common.json) {
      out << ordered_json{{"input", counts_json(before)}, {"output", counts_json(after)},
                          {"records", balanced.size()}, {"sha256", balanced.provenance().digest}}
                 .dump(2)
          << '\n';
      return kExitOk;
    }
    fmt::print(out, "input: human {} machine {}\noutput: human {} machine {}\n", before[0], before[1], after[0],
               after[1]);
    return kExitOk;
  }
};

struct AuditCmd {
  Common common;
  std::string arch;
  std::string plan;
  std::string ledger;
  int decimals = 4;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("audit", "Count total and trainable parameters for a plan");
    sub->add_option("--arch", arch, "Descriptor JSON or built-in name")->required();
    sub->add_option("--plan", plan, "Freeze or LoRA plan JSON")->required();
    sub->add_option("--ledger", ledger, "Write the per-tensor ledger CSV");
    sub->add_option("--decimals", decimals, "Decimal places for percentages")->check(CLI::Range(0, 10));
    add_common(sub, common, true);
  }

  int run(std::ostream& out) const {
    const auto descriptor = resolve_arch(arch);
    const auto p = load_plan(plan);
    ParamAudit audit;
    std::vector<TensorEntry> tensors;
    std::visit(
        [&](const auto& concrete) {
          using T = std::decay_t<decltype(concrete)>;
          if constexpr (std::is_same_v<T, FreezePlan>) {
            audit = audit_freeze(descriptor, concrete);
          } else {
            audit = audit_lora(descriptor, concrete);
          }
          if (!ledger.empty()) tensors = tensor_ledger(descriptor, concrete);
        },
        p);
    if (!ledger.empty()) write_file(ledger, ledger_csv(tensors));
    if (common.json) {
      nlohmann::json j = audit;
      j["arch"] = descriptor.name;
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    fmt::print(out, "arch: {}\ntotal: {}\ntrainable: {} ({})\nconvention: {}\n", descriptor.name,
               with_commas(audit.total_params), with_commas(audit.trainable_params),
               format_percent(audit.trainable_fraction, decimals), audit.convention);
    for (const auto& alt : audit.alternatives) {
      fmt::print(out, "  {}: total {} -> {}\n", alt.name, with_commas(alt.total), format_percent(alt.fraction, decimals));
    }
    return kExitOk;
  }
};

struct TrainCmd {
  Common common;
  std::string config;
  std::vector<std::string> overrides;
  std::string train_path;
  std::string valid_path;
  std::string out_dir;
  std::string arch;
  std::string backend = "toy";
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("train", "Fine-tune a backend and write a checkpoint");
    sub->add_option("--config", config, "Training preset (TOML)");
    sub->add_option("--set", overrides, "Override a config key (key=value); repeatable");
    sub->add_option("--train", train_path, "Training corpus")->required();
    sub->add_option("--valid", valid_path, "Validation corpus")->required();
    sub->add_option("--out-dir", out_dir, "Checkpoint directory")->required();
    sub->add_option("--arch", arch, "Descriptor JSON or built-in name (overrides the config)");
    sub->add_option("--backend", backend, "Model backend")->check(CLI::IsMember({"toy"}))->capture_default_str();
    seed_opt = sub->add_option("--seed", common.seed, "Random seed (overrides the config)");
    sub->add_flag("--json", common.json, "Machine-readable output on stdout");
  }

  int run(std::ostream& out) const {
    FlatConfig flat = config.empty() ? FlatConfig{} : load_flat_config(config);
    for (const auto& o : overrides) apply_override(flat, o);
    if (!arch.empty()) flat["arch"] = arch;
    if (seed_opt->count() > 0) flat["seed"] = static_cast<std::int64_t>(common.seed);
    const auto cfg = train_config_from(flat);
    if (cfg.arch.empty()) throw ValidationError("no architecture: set 'arch' in the config or pass --arch");
    const auto descriptor = resolve_arch(cfg.arch);
    std::optional<ToyBackend> model;
    try {
      model.emplace(descriptor, cfg.seed);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("the toy backend cannot build '{}' ({}); use toy-causal or toy-masked",
                                        descriptor.name, e.what()));
    }
    const auto train_set = load_corpus(train_path, Split::Train);
    const auto valid_set = load_corpus(valid_path, Split::Dev);
    TrainOptions options;
    if (!common.json) {
      options.on_epoch = [&out](const EpochLog& e) {
        fmt::print(out, "epoch {}: train_loss={:.4f} valid_loss={:.4f} valid_macro_f1={:.4f} ({:.1f}s)\n", e.epoch,
                   e.train_loss, e.valid_loss, e.valid_macro_f1, e.wall_time_s);
      };
    }
    const auto result = train(*model, train_set, valid_set, cfg, out_dir, options);
    const char* reason = result.reason == StopReason::EarlyStop ? "early_stop" : "max_epochs";
    if (common.json) {
      ordered_json epochs = ordered_json::array();
      for (const auto& e : result.logs) {
        epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"valid_loss", e.valid_loss},
                          {"valid_macro_f1", e.valid_macro_f1}});
      }
      out << ordered_json{{"checkpoint_dir", result.checkpoint_dir.string()}, {"best_epoch", result.best_epoch},
                          {"stop_reason", reason}, {"epochs", epochs}}
                 .dump(2)
          << '\n';
      return kExitOk;
    }
    fmt::print(out, "stopped: {}\nbest epoch: {}\ncheckpoint: {}\n", reason, result.best_epoch,
               result.checkpoint_dir.string());
    return kExitOk;
  }
};

struct PredictCmd {
  Common common;
  std::string checkpoint;
  std::string input;
  std::string output;
  std::string split = "test";
  std::size_t batch_size = 32;
  std::size_t max_tokens = 0;
  std::string tie = "human";

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("predict", "Label a corpus with a trained checkpoint");
    sub->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    sub->add_option("--input", input, "Corpus to label")->required();
    sub->add_option("--output", output, "Predictions (JSON Lines)")->required();
    sub->add_option("--split", split, "train|dev|test")->capture_default_str();
    sub->add_option("--batch-size", batch_size, "Inference batch size")->capture_default_str();
    sub->add_option("--max-tokens", max_tokens, "Truncation length (default: the training config's)");
    sub->add_option("--tie", tie, "Label for equal logits")->check(CLI::IsMember({"human", "machine"}))
        ->capture_default_str();
    add_common(sub, common, true);
  }

  int run(std::ostream& out) const {
    auto model = ToyBackend::from_checkpoint(checkpoint);
    TruncationPolicy policy;
    if (max_tokens > 0) {
      policy.max_tokens = max_tokens;
    } else if (fs::exists(fs::path(checkpoint) / "config.toml")) {
      policy = load_train_config(fs::path(checkpoint) / "config.toml").truncation;
    } else {
      policy.max_tokens = std::min<std::size_t>(policy.max_tokens,
                                                static_cast<std::size_t>(model.descriptor().max_positions));
    }
    const auto corpus = load_corpus(input, parse_split(split));
    const auto preds = predict(model, corpus, policy, batch_size, tie == "machine" ? TieBreak::Machine : TieBreak::Human);
    write_file(output, predictions_jsonl(preds));
    const auto positives = std::count_if(preds.begin(), preds.end(), [](const auto& p) { return p.label == Label::Machine; });
    if (common.json) {
      out << ordered_json{{"predictions", preds.size()}, {"predicted_machine", positives}, {"output", output}}.dump(2)
          << '\n';
      return kExitOk;
    }
    fmt::print(out, "predictions: {}\npredicted machine: {}\n", preds.size(), positives);
    return kExitOk;
  }
};

struct EvaluateCmd {
  Common common;
  std::string preds;
  std::string gold;
  std::string out_dir;
  std::vector<std::string> group_by = {"source", "generator", "language"};

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("evaluate", "Score predictions against a gold corpus");
    sub->add_option("--preds", preds, "Predictions (JSON Lines)")->required();
    sub->add_option("--gold", gold, "Gold corpus")->required();
    sub->add_option("--out", out_dir, "Directory for metrics.json and breakdown CSVs");
    sub->add_option("--group-by", group_by, "Breakdown fields")->delimiter(',')->capture_default_str();
    add_common(sub, common, true);
  }

  int run(std::ostream& out) const {
    const auto corpus = load_corpus(gold, Split::Test);
    const auto predictions = parse_predictions_jsonl(read_file(preds));
    const auto labels = align_predictions(corpus, predictions);
    std::vector<GroupField> fields;
    for (const auto& g : group_by) fields.push_back(parse_group_field(g));
    const auto report = evaluate(corpus, labels, fields);
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_json_file(fs::path(out_dir) / "metrics.json", nlohmann::json(report));
      for (const auto& [field, breakdown] : report.per_group) {
        write_file(fs::path(out_dir) / fmt::format("breakdown_{}.csv", field), breakdown_csv(breakdown));
      }
    }
    if (common.json) {
      out << nlohmann::json(report).dump(2) << '\n';
      return kExitOk;
    }
    const auto& s = report.scores;
    const auto& cm = report.confusion;
    fmt::print(out, "f1_macro: {:.4f}\nf1_micro: {:.4f}\naccuracy: {:.4f}\n", s.macro, s.micro, s.accuracy);
    fmt::print(out, "confusion: tn={} fp={} fn={} tp={}\npredicted machine: {}\n", cm.tn, cm.fp, cm.fn, cm.tp,
               cm.fp + cm.tp);
    return kExitOk;
  }
};

struct ReportCmd {
  Common common;
  std::string run_dir;
  std::string out_dir;
  std::string figures = "all";
  bool approximate = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("report", "Render figures and a consolidated run report");
    sub->add_option("--run-dir", run_dir, "Directory holding metrics.json and run artifacts")->required();
    sub->add_option("--out-dir", out_dir, "Report output directory")->required();
    sub->add_option("--figures", figures, "all|hist|breakdown|confusion")->capture_default_str();
    sub->add_flag("--approximate-confusion", approximate, "Flag the confusion matrix as approximate");
    add_common(sub, common, true);
  }

  int run(std::ostream& out) const {
    auto run = load_run(run_dir);
    run.confusion_approximate = approximate;
    const auto manifest = emit_report(run, out_dir, parse_figure_selection(figures));
    if (common.json) {
      out << read_file(fs::path(out_dir) / "manifest.json");
      return kExitOk;
    }
    fmt::print(out, "report: {}\nfiles: {}\n", out_dir, manifest.files.size());
    for (const auto& f : manifest.files) fmt::print(out, "  {}  {}\n", f.sha256.substr(0, 12), f.path);
    return kExitOk;
  }
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Machine-generated text detection toolkit", "mgtd"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "mgtd 0.1.0");

  IngestCmd ingest;
  StatsCmd stats;
  BalanceCmd balance;
  AuditCmd audit;
  TrainCmd train_cmd;
  PredictCmd predict_cmd;
  EvaluateCmd evaluate_cmd;
  ReportCmd report;
  ingest.add(app);
  stats.add(app);
  balance.add(app);
  audit.add(app);
  train_cmd.add(app);
  predict_cmd.add(app);
  evaluate_cmd.add(app);
  report.add(app);

  if (!args.empty() && !args.front().empty() && args.front().front() != '-' &&
      app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << "error: unknown subcommand '" << args.front() << "'\n\n" << app.help();
    return kExitValidation;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "mgtd 0.1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const auto& name = sub->get_name();
    auto& target = *app.get_subcommand(name);
    if (name == "ingest") return apply_config_file(target, ingest.common), ingest.run(out);
    if (name == "stats") return apply_config_file(target, stats.common), stats.run(out);
    if (name == "balance") return apply_config_file(target, balance.common), balance.run(out);
    if (name == "audit") return apply_config_file(target, audit.common), audit.run(out);
    if (name == "train") return train_cmd.run(out);
    if (name == "predict") return apply_config_file(target, predict_cmd.common), predict_cmd.run(out);
    if (name == "evaluate") return apply_config_file(target, evaluate_cmd.common), evaluate_cmd.run(out);
    if (name == "report") return apply_config_file(target, report.common), report.run(out);
    err << "error: unknown subcommand " << name << "\n\n" << app.help();
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << " (after " << e.partial_logs.size() << " complete epochs)\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace mgtd
