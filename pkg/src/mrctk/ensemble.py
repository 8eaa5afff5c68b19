"""Fuse ranked, scored runs of the same system family into one run.

Per question, answers are matched across files (raw or normalized string
equality), their scores aggregated (arithmetic mean by default, with a
literal pairwise running average kept for faithfulness experiments), then
sorted and re-ranked densely. Ordering is fully deterministic: score
descending, then match key ascending, so fused runs are byte-reproducible
and, for the order-free aggregations, invariant under permutation of the
input runs. ``dedupe_within`` canonicalizes to the same order, which makes
fusing a single run exactly equal to deduplicating it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .data import DEFAULT_K_MAX, RankedAnswer, Run, RunError
from .textnorm import DEFAULT_CONFIG, NormConfig, normalize

AGG_MEAN = "mean"
AGG_PAIRWISE_RUNNING = "pairwise_running"
AGG_MAX = "max"
AGG_SUM = "sum"
AGGREGATIONS = (AGG_MEAN, AGG_PAIRWISE_RUNNING, AGG_MAX, AGG_SUM)

MATCH_RAW = "raw_equality"
MATCH_NORMALIZED = "normalized_equality"
MATCH_POLICIES = (MATCH_RAW, MATCH_NORMALIZED)


@dataclass(frozen=True)
class FuseConfig:
    """Aggregation strategy, matching policy and output cap for fusion.

    ``sum`` is normalized by the number of runs containing the question so
    scores stay in [0, 1]; ``count_weighting`` multiplies the aggregate by
    support / runs-containing-the-question. Tie-breaking is fixed: match
    key ascending after score descending.
    """
    aggregation: str = AGG_MEAN
    match_policy: str = MATCH_NORMALIZED
    norm: NormConfig = field(default_factory=NormConfig)
    k_max: int = DEFAULT_K_MAX
    count_weighting: bool = False

    def __post_init__(self) -> None:
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if self.match_policy not in MATCH_POLICIES:
            raise ValueError(f"match_policy must be one of {MATCH_POLICIES}")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass(frozen=True)
class FusedCandidate:
    """One fused answer with its provenance across the input runs."""
    text: str
    agg_score: float
    support: int
    source_scores: tuple[tuple[str, float], ...]


def match_key(text: str, policy: str, norm: NormConfig = DEFAULT_CONFIG) -> str:
    if policy == MATCH_RAW:
        return text
    return normalize(text, norm)


def fuse_pairwise_running(scores: Sequence[float]) -> float:
    """Left fold of pairwise averaging: s <- (s + x) / 2 per new score.

    This reproduces the pseudocode's iterated two-way average verbatim; it
    is order-sensitive and differs from the arithmetic mean for three or
    more scores.
    """
    if not scores:
        raise ValueError("scores must be non-empty")
    acc = scores[0]
    for x in scores[1:]:
        acc = (acc + x) / 2
    return acc


def _aggregate(scores: list[float], aggregation: str, n_runs: int) -> float:
    if aggregation == AGG_MEAN:
        return sum(scores) / len(scores)
    if aggregation == AGG_MAX:
        return max(scores)
    if aggregation == AGG_SUM:
        return sum(scores) / n_runs
    return fuse_pairwise_running(scores)


def dedupe_within(
    answers: Sequence[RankedAnswer],
    policy: str = MATCH_NORMALIZED,
    norm: NormConfig = DEFAULT_CONFIG,
) -> tuple[RankedAnswer, ...]:
    """Collapse duplicate texts under the policy to their highest-scoring
    occurrence and re-rank densely in canonical order (score descending,
    match key ascending)."""
    best: dict[str, RankedAnswer] = {}
    for ans in answers:
        key = match_key(ans.text, policy, norm)
        cur = best.get(key)
        if cur is None or ans.score > cur.score:
            best[key] = ans
    ordered = sorted(best.items(), key=lambda kv: (-kv[1].score, kv[0]))
    return tuple(
        RankedAnswer(text=ans.text, rank=i, score=ans.score)
        for i, (_, ans) in enumerate(ordered, 1)
    )


def fuse_candidates(
    runs: Sequence[Run],
    cfg: FuseConfig = FuseConfig(),
) -> dict[str, list[FusedCandidate]]:
    """Build the per-question fused candidate table with provenance.

    The question set is the union of the input question sets; a question
    present in only some runs is fused from the runs that contain it.
    """
    if not runs:
        raise ValueError("need at least one input run")
    for run in runs:
        for pq_id, answers in run.entries.items():
            if len(answers) > cfg.k_max:
                raise RunError(
                    f"run {run.run_id!r}, {pq_id}: {len(answers)} answers "
                    f"exceed k_max={cfg.k_max}")

    question_ids = sorted({pq_id for run in runs for pq_id in run.entries})
    table: dict[str, list[FusedCandidate]] = {}
    for pq_id in question_ids:
        # key -> [(run_id, score, raw_text)] in input run order
        occurrences: dict[str, list[tuple[str, float, str]]] = {}
        n_present = 0
        for run in runs:
            answers = run.entries.get(pq_id)
            if not answers:
                continue
            n_present += 1
            for ans in dedupe_within(answers, cfg.match_policy, cfg.norm):
                key = match_key(ans.text, cfg.match_policy, cfg.norm)
                occurrences.setdefault(key, []).append(
                    (run.run_id, ans.score, ans.text))

        candidates: list[tuple[str, FusedCandidate]] = []
        for key, occ in occurrences.items():
            scores = [score for _, score, _ in occ]
            agg = _aggregate(scores, cfg.aggregation, n_present)
            if cfg.count_weighting:
                agg *= len(occ) / n_present
            # Surface form: highest-scoring occurrence, smallest raw text on ties,
            # so the choice does not depend on input run order.
            text = min(occ, key=lambda o: (-o[1], o[2]))[2]
            candidates.append((key, FusedCandidate(
                text=text,
                agg_score=agg,
                support=len(occ),
                source_scores=tuple((run_id, score) for run_id, score, _ in occ),
            )))

        candidates.sort(key=lambda kc: (-kc[1].agg_score, kc[0]))
        table[pq_id] = [cand for _, cand in candidates[:cfg.k_max]]
    return table


def run_from_candidates(
    table: dict[str, list[FusedCandidate]], run_id: str = "ensemble"
) -> Run:
    """Turn a fused candidate table into a rank-dense Run."""
    entries = {
        pq_id: tuple(
            RankedAnswer(text=c.text, rank=i, score=c.agg_score)
            for i, c in enumerate(candidates, 1)
        )
        for pq_id, candidates in table.items()
    }
    return Run(run_id=run_id, entries=entries)


def fuse(runs: Sequence[Run], cfg: FuseConfig = FuseConfig(), run_id: str = "ensemble") -> Run:
    """Fuse runs into a single rank-dense, score-sorted run (at most
    ``cfg.k_max`` answers per question)."""
    return run_from_candidates(fuse_candidates(runs, cfg), run_id)
