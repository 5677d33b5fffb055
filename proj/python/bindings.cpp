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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mgtd/arch.hpp"
#include "mgtd/cli.hpp"
#include "mgtd/corpus.hpp"
#include "mgtd/error.hpp"
#include "mgtd/evaluator.hpp"
#include "mgtd/io.hpp"
#include "mgtd/sampler.hpp"
#include "mgtd/trainer.hpp"

namespace py = pybind11;
using namespace mgtd;

namespace {

Label to_label(int v) {
  if (v != 0 && v != 1) throw ValidationError("label must be 0 (human) or 1 (machine)");
  return static_cast<Label>(v);
}

std::vector<Label> to_labels(const std::vector<int>& vs) {
  std::vector<Label> out;
  out.reserve(vs.size());
  for (int v : vs) out.push_back(to_label(v));
  return out;
}

std::set<Projection> to_projections(const std::vector<std::string>& names) {
  std::set<Projection> out;
  for (const auto& n : names) out.insert(parse_projection(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Machine-generated text detection: parameter audits, metrics, schedules and the mgtd CLI.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<FractionConvention>(m, "FractionConvention")
      .def_readonly("name", &FractionConvention::name)
      .def_readonly("total", &FractionConvention::total)
      .def_readonly("fraction", &FractionConvention::fraction);

  py::class_<ParamAudit>(m, "ParamAudit")
      .def_readonly("total_params", &ParamAudit::total_params)
      .def_readonly("trainable_params", &ParamAudit::trainable_params)
      .def_readonly("trainable_fraction", &ParamAudit::trainable_fraction)
      .def_readonly("convention", &ParamAudit::convention)
      .def_readonly("alternatives", &ParamAudit::alternatives)
      .def("__repr__", [](const ParamAudit& a) {
        return "ParamAudit(trainable=" + std::to_string(a.trainable_params) + ", total=" +
               std::to_string(a.total_params) + ")";
      });

  m.def("builtin_archs", &builtin_arch_names, "Names of the built-in architecture descriptors.");
  m.def(
      "count_params", [](const std::string& arch) { return count_params(resolve_arch(arch)); }, py::arg("arch"),
      "Total parameters of a built-in descriptor or descriptor JSON file.");

  m.def(
      "audit_freeze",
      [](const std::string& arch, const std::vector<std::int64_t>& blocks, bool head, bool final_norm) {
        FreezePlan plan;
        plan.trainable_blocks = {blocks.begin(), blocks.end()};
        plan.head_trainable = head;
        plan.final_norm_trainable = final_norm;
        return audit_freeze(resolve_arch(arch), plan);
      },
      py::arg("arch"), py::arg("trainable_blocks"), py::arg("head") = true, py::arg("final_norm") = false);

  m.def(
      "audit_lora",
      [](const std::string& arch, std::int64_t r, double alpha, const std::vector<std::string>& targets, bool head,
         bool head_copy) {
        LoraPlan plan;
        plan.r = r;
        plan.alpha = alpha;
        plan.targets = to_projections(targets);
        plan.head_trainable = head;
        plan.head_copy = head_copy;
        return audit_lora(resolve_arch(arch), plan);
      },
      py::arg("arch"), py::arg("r"), py::arg("alpha"), py::arg("targets"), py::arg("head") = true,
      py::arg("head_copy") = true);

  py::class_<Schedule>(m, "Schedule")
      .def_readonly("steps_per_epoch", &Schedule::steps_per_epoch)
      .def_readonly("total_steps", &Schedule::total_steps)
      .def_readonly("warmup_steps", &Schedule::warmup_steps)
      .def_readonly("peak_lr", &Schedule::peak_lr)
      .def("lr_at", &Schedule::lr_at, py::arg("step"));

  m.def(
      "make_schedule",
      [](std::size_t n, std::size_t batch, std::size_t epochs, double warmup, double peak) {
        return make_schedule(n, batch, epochs, warmup, peak);
      },
      py::arg("num_examples"), py::arg("batch_size"), py::arg("epochs"), py::arg("warmup_fraction"),
      py::arg("peak_lr") = 1.0);

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def_readonly("tn", &ConfusionMatrix::tn)
      .def_readonly("fp", &ConfusionMatrix::fp)
      .def_readonly("fn", &ConfusionMatrix::fn)
      .def_readonly("tp", &ConfusionMatrix::tp);

  py::class_<F1Scores>(m, "F1Scores")
      .def_readonly("f1_human", &F1Scores::f1_human)
      .def_readonly("f1_machine", &F1Scores::f1_machine)
      .def_readonly("macro", &F1Scores::macro)
      .def_readonly("micro", &F1Scores::micro)
      .def_readonly("accuracy", &F1Scores::accuracy);

  m.def(
      "confusion",
      [](const std::vector<int>& predicted, const std::vector<int>& gold) {
        return confusion(to_labels(predicted), to_labels(gold));
      },
      py::arg("predicted"), py::arg("gold"), "Labels are 0 for human and 1 for machine.");
  m.def(
      "f1_scores",
      [](const std::vector<int>& predicted, const std::vector<int>& gold) {
        return f1_scores(confusion(to_labels(predicted), to_labels(gold)));
      },
      py::arg("predicted"), py::arg("gold"));

  m.def(
      "weighted_cross_entropy",
      [](std::array<double, 2> logits, int label, std::array<double, 2> weights) {
        return weighted_cross_entropy(logits, to_label(label), ClassWeights{weights});
      },
      py::arg("logits"), py::arg("label"), py::arg("weights") = std::array<double, 2>{1.0, 1.0});
  m.def(
      "weighted_cross_entropy_grad",
      [](std::array<double, 2> logits, int label, std::array<double, 2> weights) {
        return weighted_cross_entropy_grad(logits, to_label(label), ClassWeights{weights});
      },
      py::arg("logits"), py::arg("label"), py::arg("weights") = std::array<double, 2>{1.0, 1.0});

  m.def(
      "balance_jsonl",
      [](const std::string& jsonl, double human_fraction, std::uint64_t seed) {
        const auto corpus = parse_corpus(jsonl, Split::Train);
        return serialize_corpus(balance_downsample(corpus, BalanceSpec::with_human_fraction(human_fraction, seed)));
      },
      py::arg("jsonl"), py::arg("human_fraction") = 0.5, py::arg("seed") = 42,
      "Downsample a JSON Lines training corpus to the target class ratio.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run an mgtd subcommand; returns (exit_code, stdout, stderr).");
}
