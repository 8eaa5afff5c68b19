import random

import pytest

from mrctk.data import RankedAnswer, Run, RunError, check_run, write_run
from mrctk.ensemble import (
    AGG_MAX,
    AGG_MEAN,
    AGG_PAIRWISE_RUNNING,
    AGG_SUM,
    MATCH_NORMALIZED,
    MATCH_RAW,
    FuseConfig,
    dedupe_within,
    fuse,
    fuse_candidates,
    fuse_pairwise_running,
)

from reference import ref_fuse

RAW_CFG = FuseConfig(match_policy=MATCH_RAW)


def answers(*pairs) -> tuple[RankedAnswer, ...]:
    return tuple(RankedAnswer(text=t, rank=i, score=s)
                 for i, (s, t) in enumerate(pairs, 1))


def make_run(run_id, **entries) -> Run:
    return Run(run_id=run_id, entries=dict(entries))


# ---------------------------------------------------------------------------
# dedupe_within
# ---------------------------------------------------------------------------

def test_dedupe_no_duplicates_unchanged():
    a = answers((0.9, "x"), (0.5, "y"), (0.2, "z"))
    assert dedupe_within(a, MATCH_RAW) == a


def test_dedupe_collapses_to_highest_score():
    a = answers((0.9, "x"), (0.7, "y"), (0.5, "x"))
    out = dedupe_within(a, MATCH_RAW)
    assert out == answers((0.9, "x"), (0.7, "y"))


def test_dedupe_policy_raw_vs_normalized():
    plain = "كتاب"
    voweled = "كِتَاب"
    a = answers((0.9, voweled), (0.4, plain))
    assert len(dedupe_within(a, MATCH_NORMALIZED)) == 1
    assert dedupe_within(a, MATCH_NORMALIZED)[0].text == voweled
    assert len(dedupe_within(a, MATCH_RAW)) == 2


# ---------------------------------------------------------------------------
# fuse_pairwise_running
# ---------------------------------------------------------------------------

def test_pairwise_single():
    assert fuse_pairwise_running([0.8]) == 0.8


def test_pairwise_two():
    assert fuse_pairwise_running([0.8, 0.6]) == pytest.approx(0.7)


def test_pairwise_three_differs_from_mean():
    got = fuse_pairwise_running([0.8, 0.6, 0.4])
    assert got == pytest.approx(0.55)
    assert got != pytest.approx(0.6)  # the arithmetic mean


def test_pairwise_empty_rejected():
    with pytest.raises(ValueError):
        fuse_pairwise_running([])


# ---------------------------------------------------------------------------
# fuse
# ---------------------------------------------------------------------------

def test_fuse_single_run_equals_dedupe():
    run = make_run("r1",
                   q1=answers((0.9, "x"), (0.5, "x"), (0.3, "y")),
                   q2=answers((0.4, "z")))
    fused = fuse([run], RAW_CFG)
    assert fused.entries["q1"] == dedupe_within(run.entries["q1"], MATCH_RAW)
    assert fused.entries["q2"] == dedupe_within(run.entries["q2"], MATCH_RAW)


def test_fuse_hand_traced_mean():
    # X scored 0.8 and 0.6 in both runs, Y 0.65 in one:
    # X -> (0.8 + 0.6) / 2 = 0.7 ranks above Y -> 0.65
    r1 = make_run("r1", q=answers((0.8, "X"), (0.65, "Y")))
    r2 = make_run("r2", q=answers((0.6, "X"),))
    fused = fuse([r1, r2], RAW_CFG)
    assert fused.entries["q"] == answers((0.7, "X"), (0.65, "Y"))


def test_fuse_hand_traced_count_weighting():
    r1 = make_run("r1", q=answers((0.8, "X"), (0.65, "Y")))
    r2 = make_run("r2", q=answers((0.6, "X"),))
    cfg = FuseConfig(match_policy=MATCH_RAW, count_weighting=True)
    fused = fuse([r1, r2], cfg)
    got = {a.text: a.score for a in fused.entries["q"]}
    assert got["X"] == pytest.approx(0.7)       # 0.7 * (2/2)
    assert got["Y"] == pytest.approx(0.325)     # 0.65 * (1/2)
    assert [a.text for a in fused.entries["q"]] == ["X", "Y"]


def test_fuse_five_identical_runs_equals_single():
    base = make_run("r", q1=answers((0.9, "x"), (0.5, "y")))
    copies = [make_run(f"r{i}", q1=base.entries["q1"]) for i in range(5)]
    for agg in (AGG_MEAN, AGG_MAX):
        cfg = FuseConfig(aggregation=agg, match_policy=MATCH_RAW)
        assert fuse(copies, cfg).entries == fuse([base], cfg).entries


def test_fuse_normalized_matching_pools_variants():
    plain = "كتاب"
    voweled = "كِتَاب"
    r1 = make_run("r1", q=answers((0.8, voweled)))
    r2 = make_run("r2", q=answers((0.6, plain)))
    fused = fuse([r1, r2], FuseConfig(match_policy=MATCH_NORMALIZED))
    assert len(fused.entries["q"]) == 1
    ans = fused.entries["q"][0]
    assert ans.score == pytest.approx(0.7)
    assert ans.text == voweled  # surface form of the highest-scoring occurrence


def test_fuse_question_subsets_kept():
    r1 = make_run("r1", q1=answers((0.9, "x")))
    r2 = make_run("r2", q2=answers((0.8, "y")))
    fused = fuse([r1, r2], RAW_CFG)
    assert set(fused.entries) == {"q1", "q2"}
    assert fused.entries["q1"][0].score == pytest.approx(0.9)


def test_fuse_empty_input_rejected():
    with pytest.raises(ValueError):
        fuse([], RAW_CFG)


def test_fuse_input_k_max_violation_rejected():
    run = make_run("r1", q=answers(*((0.5, f"t{i}") for i in range(6))))
    with pytest.raises(RunError):
        fuse([run], RAW_CFG)


def test_fuse_truncates_union_to_k_max():
    # each input respects k_max; their union does not and gets capped
    r1 = make_run("r1", q=answers((0.9, "a"), (0.8, "b")))
    r2 = make_run("r2", q=answers((0.7, "c"), (0.6, "d")))
    cfg = FuseConfig(match_policy=MATCH_RAW, k_max=2)
    fused = fuse([r1, r2], cfg)
    assert [a.text for a in fused.entries["q"]] == ["a", "b"]
    assert [a.rank for a in fused.entries["q"]] == [1, 2]


def test_fuse_output_always_valid_run():
    rng = random.Random(23)
    for _ in range(100):
        runs = random_runs(rng)
        for agg in (AGG_MEAN, AGG_PAIRWISE_RUNNING, AGG_MAX, AGG_SUM):
            cfg = FuseConfig(aggregation=agg, match_policy=MATCH_RAW,
                             count_weighting=rng.random() < 0.5)
            check_run(fuse(runs, cfg), k_max=cfg.k_max)


def test_fuse_tie_break_by_text_ascending():
    r1 = make_run("r1", q=answers((0.5, "bb"), (0.5, "aa")))
    fused = fuse([r1], RAW_CFG)
    assert [a.text for a in fused.entries["q"]] == ["aa", "bb"]


def test_pairwise_running_is_order_sensitive():
    r1 = make_run("r1", q=answers((0.8, "x")))
    r2 = make_run("r2", q=answers((0.6, "x")))
    r3 = make_run("r3", q=answers((0.4, "x")))
    cfg = FuseConfig(aggregation=AGG_PAIRWISE_RUNNING, match_policy=MATCH_RAW)
    forward = fuse([r1, r2, r3], cfg).entries["q"][0].score
    backward = fuse([r3, r2, r1], cfg).entries["q"][0].score
    assert forward == pytest.approx(0.55)
    assert backward == pytest.approx(0.65)


def test_fuse_monotone_in_source_scores():
    rng = random.Random(29)
    for _ in range(100):
        runs = random_runs(rng)
        target_run = rng.randrange(len(runs))
        entries = runs[target_run].entries
        if not entries:
            continue
        qid = rng.choice(sorted(entries))
        if not entries[qid]:
            continue
        # raise the rank-1 score (keeps the non-increasing invariant)
        bumped_answers = (
            RankedAnswer(entries[qid][0].text, 1,
                         min(1.0, entries[qid][0].score + 0.2)),
        ) + entries[qid][1:]
        bumped_entries = dict(entries)
        bumped_entries[qid] = bumped_answers
        bumped = list(runs)
        bumped[target_run] = Run(runs[target_run].run_id, bumped_entries)
        text = entries[qid][0].text
        for agg in (AGG_MEAN, AGG_MAX, AGG_SUM):
            cfg = FuseConfig(aggregation=agg, match_policy=MATCH_RAW)
            before = {a.text: a.score for a in fuse(runs, cfg).entries[qid]}
            after = {a.text: a.score for a in fuse(bumped, cfg).entries[qid]}
            if text in before and text in after:
                assert after[text] >= before[text] - 1e-12


# ---------------------------------------------------------------------------
# randomized instances + brute-force oracle
# ---------------------------------------------------------------------------

VOCAB = ["amber", "basil", "cedar", "dune"]
# Dyadic grid: sums of up to a few scores are exact in binary floating
# point, so exact-equality properties (N-copy stability, permutation
# invariance) are not perturbed by accumulation order.
SCORE_GRID = [i / 64 for i in range(65)]


def random_runs(rng: random.Random, max_runs=3, max_answers=4) -> list[Run]:
    n_runs = rng.randint(1, max_runs)
    qids = [f"q{i}" for i in range(rng.randint(1, 3))]
    runs = []
    for r in range(n_runs):
        entries = {}
        for qid in qids:
            if rng.random() < 0.2:
                continue  # question absent from this run
            k = rng.randint(1, max_answers)
            texts = rng.sample(
                [" ".join(p) for p in
                 [(a, b) for a in VOCAB for b in VOCAB]], k)
            scores = sorted(rng.choices(SCORE_GRID, k=k), reverse=True)
            entries[qid] = answers(*zip(scores, texts))
        runs.append(Run(run_id=f"r{r}", entries=entries))
    return runs


def as_plain(runs: list[Run]) -> list[tuple[str, dict[str, list[tuple[str, float]]]]]:
    return [
        (run.run_id,
         {qid: [(a.text, a.score) for a in sorted(ans, key=lambda a: a.rank)]
          for qid, ans in run.entries.items()})
        for run in runs
    ]


@pytest.mark.parametrize("agg", [AGG_MEAN, AGG_MAX, AGG_SUM, AGG_PAIRWISE_RUNNING])
def test_fuse_agrees_with_brute_force(agg):
    rng = random.Random(hash(agg) % 10_000)
    for _ in range(200):
        runs = random_runs(rng)
        weighting = rng.random() < 0.5
        cfg = FuseConfig(aggregation=agg, match_policy=MATCH_RAW,
                         count_weighting=weighting)
        got = fuse_candidates(runs, cfg)
        want = ref_fuse(as_plain(runs), aggregation=agg,
                        count_weighting=weighting, k_max=cfg.k_max)
        assert set(got) == set(want)
        for qid in want:
            flat = [(c.text, c.agg_score, c.support) for c in got[qid]]
            assert flat == want[qid]


def test_fuse_permutation_invariance_mean_max_sum():
    rng = random.Random(31)
    for _ in range(200):
        runs = random_runs(rng)
        perm = rng.sample(runs, len(runs))
        for agg in (AGG_MEAN, AGG_MAX, AGG_SUM):
            cfg = FuseConfig(aggregation=agg, match_policy=MATCH_RAW)
            assert write_run(fuse(perm, cfg)) == write_run(fuse(runs, cfg))


def test_fuse_idempotence_random():
    rng = random.Random(37)
    for _ in range(200):
        run = random_runs(rng, max_runs=1)[0]
        fused = fuse([run], RAW_CFG)
        for qid, ans in run.entries.items():
            assert fused.entries[qid] == dedupe_within(ans, MATCH_RAW)


def test_fuse_copies_stable_random():
    rng = random.Random(41)
    for _ in range(100):
        run = random_runs(rng, max_runs=1)[0]
        n = rng.randint(2, 5)
        copies = [Run(run_id=f"c{i}", entries=run.entries) for i in range(n)]
        for agg in (AGG_MEAN, AGG_MAX):
            cfg = FuseConfig(aggregation=agg, match_policy=MATCH_RAW)
            assert fuse(copies, cfg).entries == fuse([run], cfg).entries


def test_fuse_config_validation():
    with pytest.raises(ValueError):
        FuseConfig(aggregation="median")
    with pytest.raises(ValueError):
        FuseConfig(match_policy="fuzzy")
    with pytest.raises(ValueError):
        FuseConfig(k_max=0)


def test_fused_scores_stay_in_unit_interval_under_sum():
    r1 = make_run("r1", q=answers((0.9, "x")))
    r2 = make_run("r2", q=answers((0.9, "x")))
    r3 = make_run("r3", q=answers((0.9, "x")))
    fused = fuse([r1, r2, r3], FuseConfig(aggregation=AGG_SUM, match_policy=MATCH_RAW))
    assert fused.entries["q"][0].score == pytest.approx(0.9)
    check_run(fused)
