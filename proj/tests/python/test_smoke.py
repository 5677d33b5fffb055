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

import json
import math
import random

import pytest

import mgtdetect as m


def test_builtins_listed():
    assert {"qwen2.5-0.5b", "xlm-roberta-base"} <= set(m.builtin_archs())


def test_freeze_audit():
    a = m.audit_freeze("qwen2.5-0.5b", [-1])
    assert a.trainable_params == 14_914_176
    assert round(100 * a.trainable_fraction, 2) == 3.02


def test_lora_audit():
    a = m.audit_lora("xlm-roberta-base", r=4, alpha=8.0, targets=["query", "value"])
    assert a.trainable_params == 739_586
    with pytest.raises(ValueError):
        m.audit_lora("xlm-roberta-base", r=4, alpha=8.0, targets=["nope"])


def test_schedule():
    s = m.make_schedule(674_083, 16, 1, 0.10)
    assert (s.steps_per_epoch, s.warmup_steps) == (42_130, 4_213)
    assert s.lr_at(s.total_steps) == 0.0


def test_f1_against_direct_count():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randint(1, 200)
        gold = [rng.randint(0, 1) for _ in range(n)]
        pred = [rng.randint(0, 1) for _ in range(n)]
        s = m.f1_scores(pred, gold)
        f1 = []
        for c in (0, 1):
            tp = sum(p == c and g == c for p, g in zip(pred, gold))
            fp = sum(p == c and g != c for p, g in zip(pred, gold))
            fn = sum(p != c and g == c for p, g in zip(pred, gold))
            prec = tp / (tp + fp) if tp + fp else 0.0
            rec = tp / (tp + fn) if tp + fn else 0.0
            f1.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
        assert s.macro == pytest.approx(sum(f1) / 2, abs=1e-12)
        assert s.micro == pytest.approx(sum(p == g for p, g in zip(pred, gold)) / n, abs=1e-12)


def test_cross_entropy():
    assert m.weighted_cross_entropy([0.0, 0.0], 0) == pytest.approx(math.log(2))
    g = m.weighted_cross_entropy_grad([1.0, -1.0], 1, [1.0, 2.0])
    assert sum(g) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        m.weighted_cross_entropy([0.0, 0.0], 2)


def test_balance_jsonl():
    lines = [
        json.dumps({"id": f"r{i}", "text": f"t {i}", "label": int(i >= 5), "model": "x", "source": "s"})
        for i in range(20)
    ]
    out = m.balance_jsonl("\n".join(lines) + "\n", seed=1)
    labels = [json.loads(line)["label"] for line in out.splitlines()]
    assert labels.count(0) == labels.count(1) == 5


def test_cli():
    code, out, _ = m.run_cli(["audit", "--arch", "xlm-roberta-base", "--plan", "/nonexistent.json"])
    assert code == 1
    code, _, err = m.run_cli(["frobnicate"])
    assert code == 1
    assert "unknown subcommand" in err
