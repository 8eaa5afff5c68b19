"""Paired comparison of two runs: macro deltas plus bootstrap intervals.

Both runs are scored against the same gold questions (missing questions
score 0 on both sides, keeping the pairing aligned), then question indices
are resampled with replacement; the same resample matrix is reused for
every metric so the three intervals are computed over identical draws.
Seeded and fully reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import QPRecord, Run
from .metrics import (
    PRR_FIRST_MATCH,
    EvalReport,
    GoldMismatchError,
    evaluate_run,
)
from .textnorm import DEFAULT_CONFIG, NormConfig

METRIC_KEYS = ("pRR", "EM", "F1@1")
CI_LEVEL = 0.95


@dataclass(frozen=True)
class MetricComparison:
    macro_a: float
    macro_b: float
    delta: float
    ci_low: float
    ci_high: float

    def to_dict(self) -> dict:
        return {
            "macro_a": round(self.macro_a, 6),
            "macro_b": round(self.macro_b, 6),
            "delta": round(self.delta, 6),
            "ci_low": round(self.ci_low, 6),
            "ci_high": round(self.ci_high, 6),
        }


@dataclass(frozen=True)
class CompareReport:
    run_a: str
    run_b: str
    n_questions: int
    n_boot: int
    seed: int
    metrics: dict[str, MetricComparison]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "compare",
            "run_a": self.run_a,
            "run_b": self.run_b,
            "n_questions": self.n_questions,
            "n_boot": self.n_boot,
            "seed": self.seed,
            "ci_level": CI_LEVEL,
            "metrics": {k: self.metrics[k].to_dict() for k in METRIC_KEYS},
        }


def _vectors(report: EvalReport) -> dict[str, np.ndarray]:
    return {
        "pRR": np.array([q.prr for q in report.per_question], dtype=float),
        "EM": np.array([float(q.em) for q in report.per_question], dtype=float),
        "F1@1": np.array([q.f1_at_1 for q in report.per_question], dtype=float),
    }


def compare_runs(
    run_a: Run,
    run_b: Run,
    gold: Sequence[QPRecord],
    cfg: NormConfig = DEFAULT_CONFIG,
    mode: str = PRR_FIRST_MATCH,
    n_boot: int = 1000,
    seed: int = 0,
    strict: bool = False,
) -> CompareReport:
    """Per-metric macro deltas (a - b) with paired-bootstrap intervals."""
    if not gold:
        raise ValueError("gold dataset is empty")
    if strict and set(run_a.entries) != set(run_b.entries):
        only_a = sorted(set(run_a.entries) - set(run_b.entries))
        only_b = sorted(set(run_b.entries) - set(run_a.entries))
        raise GoldMismatchError(
            f"question sets differ: {len(only_a)} only in {run_a.run_id!r}, "
            f"{len(only_b)} only in {run_b.run_id!r}")

    report_a = evaluate_run(run_a, gold, cfg, mode, strict=strict)
    report_b = evaluate_run(run_b, gold, cfg, mode, strict=strict)
    vec_a = _vectors(report_a)
    vec_b = _vectors(report_b)

    n = len(gold)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_boot, n))
    lo_q = 100 * (1 - CI_LEVEL) / 2
    hi_q = 100 - lo_q

    metrics = {}
    for key in METRIC_KEYS:
        a, b = vec_a[key], vec_b[key]
        deltas = a[idx].mean(axis=1) - b[idx].mean(axis=1)
        lo, hi = np.percentile(deltas, [lo_q, hi_q])
        metrics[key] = MetricComparison(
            macro_a=float(a.mean()),
            macro_b=float(b.mean()),
            delta=float(a.mean() - b.mean()),
            ci_low=float(lo),
            ci_high=float(hi),
        )
    return CompareReport(
        run_a=run_a.run_id,
        run_b=run_b.run_id,
        n_questions=n,
        n_boot=n_boot,
        seed=seed,
        metrics=metrics,
    )
