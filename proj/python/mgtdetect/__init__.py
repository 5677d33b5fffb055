# Copyright 2026 The mgtdetect Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Machine-generated text detection toolkit."""

from mgtdetect._core import (
    ConfusionMatrix,
    F1Scores,
    ParamAudit,
    Schedule,
    ValidationError,
    audit_freeze,
    audit_lora,
    balance_jsonl,
    builtin_archs,
    confusion,
    count_params,
    f1_scores,
    make_schedule,
    run_cli,
    weighted_cross_entropy,
    weighted_cross_entropy_grad,
)

__all__ = [
    "ConfusionMatrix",
    "F1Scores",
    "ParamAudit",
    "Schedule",
    "ValidationError",
    "audit_freeze",
    "audit_lora",
    "balance_jsonl",
    "builtin_archs",
    "confusion",
    "count_params",
    "f1_scores",
    "make_schedule",
    "run_cli",
    "weighted_cross_entropy",
    "weighted_cross_entropy_grad",
]
