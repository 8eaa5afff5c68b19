"""Ranked-answer scoring: partial reciprocal rank, exact match and F1@1.

All string comparison is mediated by a :class:`~mrctk.textnorm.NormConfig`;
exact match means equality after normalization (raw equality under the
identity config). Per question: em = 1 implies f1_at_1 = 1 implies prr = 1,
and em <= f1_at_1 <= prr always holds.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .data import QPRecord, RankedAnswer, Run
from .textnorm import DEFAULT_CONFIG, NormConfig, normalize, tokenize

log = logging.getLogger(__name__)

PRR_FIRST_MATCH = "first_match"
PRR_BEST_RATIO = "best_ratio"
PRR_MODES = (PRR_FIRST_MATCH, PRR_BEST_RATIO)


class GoldMismatchError(ValueError):
    """A run refers to questions that do not exist in the gold dataset."""


def token_f1(pred: str, gold: str, cfg: NormConfig = DEFAULT_CONFIG) -> float:
    """Multiset token-overlap F1 between a prediction and one gold answer.

    Both token sequences empty scores 1 (vacuous agreement); exactly one
    empty scores 0.
    """
    pred_tokens = tokenize(pred, cfg)
    gold_tokens = tokenize(gold, cfg)
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def exact_match(pred: str, golds: Sequence[str], cfg: NormConfig = DEFAULT_CONFIG) -> int:
    """1 iff the prediction equals some gold answer after normalization."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred_norm = normalize(pred, cfg)
    return int(any(pred_norm == normalize(g, cfg) for g in golds))


def best_partial(pred: str, golds: Sequence[str], cfg: NormConfig = DEFAULT_CONFIG) -> float:
    """Token F1 against the best-matching gold answer (max over golds)."""
    if not golds:
        raise ValueError("golds must be non-empty")
    return max(token_f1(pred, g, cfg) for g in golds)


def prr(
    preds: Sequence[RankedAnswer],
    golds: Sequence[str],
    cfg: NormConfig = DEFAULT_CONFIG,
    mode: str = PRR_FIRST_MATCH,
) -> tuple[float, int | None]:
    """Partial reciprocal rank of a ranked answer list.

    With m_i the best partial score of the answer at rank i:

    * ``first_match``: take the smallest i with m_i > 0 and return
      (m_i / i, i); (0, None) when nothing overlaps.
    * ``best_ratio``: return max_i(m_i / i) with the smallest maximizing
      rank; (0, None) when the maximum is zero.
    """
    if mode not in PRR_MODES:
        raise ValueError(f"mode must be one of {PRR_MODES}, got {mode!r}")
    if not golds:
        raise ValueError("golds must be non-empty")
    ranked = sorted(preds, key=lambda a: a.rank)
    if mode == PRR_FIRST_MATCH:
        for ans in ranked:
            m = best_partial(ans.text, golds, cfg)
            if m > 0:
                return m / ans.rank, ans.rank
        return 0.0, None
    best_value, best_rank = 0.0, None
    for ans in ranked:
        value = best_partial(ans.text, golds, cfg) / ans.rank
        if value > best_value:
            best_value, best_rank = value, ans.rank
    return best_value, best_rank


@dataclass(frozen=True)
class QuestionScore:
    pq_id: str
    prr: float
    em: int
    f1_at_1: float
    first_match_rank: int | None

    def to_dict(self) -> dict:
        return {
            "pq_id": self.pq_id,
            "pRR": round(self.prr, 6),
            "EM": self.em,
            "F1@1": round(self.f1_at_1, 6),
            "first_match_rank": self.first_match_rank,
        }


@dataclass(frozen=True)
class EvalReport:
    """Per-question and macro-averaged scores for one run.

    Macro values are arithmetic means over *all* gold questions; questions
    missing from the run (or mapped to an empty list) score 0 and are
    counted in ``n_missing``. ``n_vacuous_f1`` counts questions whose
    rank-1 F1 was the both-empty vacuous case.
    """
    per_question: tuple[QuestionScore, ...]
    macro_prr: float
    macro_em: float
    macro_f1_at_1: float
    norm_config: NormConfig
    prr_mode: str
    n_questions: int
    n_missing: int
    n_vacuous_f1: int = 0

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "eval",
            "prr_mode": self.prr_mode,
            "norm_config": self.norm_config.to_dict(),
            "n_questions": self.n_questions,
            "n_missing": self.n_missing,
            "n_vacuous_f1": self.n_vacuous_f1,
            "macro": {
                "pRR": round(self.macro_prr, 6),
                "EM": round(self.macro_em, 6),
                "F1@1": round(self.macro_f1_at_1, 6),
            },
            "per_question": [q.to_dict() for q in self.per_question],
        }


def evaluate_run(
    run: Run,
    gold: Sequence[QPRecord],
    cfg: NormConfig = DEFAULT_CONFIG,
    mode: str = PRR_FIRST_MATCH,
    strict: bool = False,
) -> EvalReport:
    """Score a run against gold records.

    pRR is computed over the full ranked list; EM and F1@1 over the rank-1
    answer only. Run entries whose pq_id is absent from the gold set raise
    in strict mode and are otherwise warned about and excluded.
    """
    gold_ids = {rec.pq_id for rec in gold}
    unknown = sorted(set(run.entries) - gold_ids)
    if unknown:
        if strict:
            raise GoldMismatchError(
                f"run {run.run_id!r} contains {len(unknown)} pq_id(s) absent "
                f"from gold: {unknown[:5]}")
        log.warning(
            "run %r: %d pq_id(s) absent from gold, excluded", run.run_id, len(unknown))

    scores: list[QuestionScore] = []
    n_missing = 0
    n_vacuous = 0
    for rec in gold:
        answers = run.entries.get(rec.pq_id, ())
        if not answers:
            n_missing += 1
            scores.append(QuestionScore(rec.pq_id, 0.0, 0, 0.0, None))
            continue
        golds = [a.text for a in rec.answers]
        top = min(answers, key=lambda a: a.rank)
        em = exact_match(top.text, golds, cfg)
        f1 = best_partial(top.text, golds, cfg)
        if not tokenize(top.text, cfg) and any(not tokenize(g, cfg) for g in golds):
            n_vacuous += 1
        value, rank = prr(answers, golds, cfg, mode)
        scores.append(QuestionScore(rec.pq_id, value, em, f1, rank))

    n = len(gold)
    return EvalReport(
        per_question=tuple(scores),
        macro_prr=sum(q.prr for q in scores) / n if n else 0.0,
        macro_em=sum(q.em for q in scores) / n if n else 0.0,
        macro_f1_at_1=sum(q.f1_at_1 for q in scores) / n if n else 0.0,
        norm_config=cfg,
        prr_mode=mode,
        n_questions=n,
        n_missing=n_missing,
        n_vacuous_f1=n_vacuous,
    )
