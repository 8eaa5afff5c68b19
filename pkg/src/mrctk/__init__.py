"""Toolkit for span-prediction reading comprehension experiments.

Validates question-passage datasets, scores ranked answer runs with
pRR / EM / F1@1, fuses runs from multiple seeds into one, and compares
systems with a paired bootstrap.
"""

from .data import (
    DEFAULT_FIELD_MAP,
    DEFAULT_K_MAX,
    DatasetError,
    Finding,
    GoldAnswer,
    QPRecord,
    RankedAnswer,
    Run,
    RunError,
    SplitStats,
    ValidationReport,
    check_run,
    dataset_stats,
    load_dataset,
    load_run,
    parse_dataset,
    parse_run,
    save_run,
    validate_dataset,
    write_run,
)
from .ensemble import (
    FuseConfig,
    FusedCandidate,
    dedupe_within,
    fuse,
    fuse_candidates,
    fuse_pairwise_running,
)
from .metrics import (
    PRR_BEST_RATIO,
    PRR_FIRST_MATCH,
    EvalReport,
    GoldMismatchError,
    QuestionScore,
    best_partial,
    evaluate_run,
    exact_match,
    prr,
    token_f1,
)
from .compare import CompareReport, compare_runs
from .textnorm import DEFAULT_CONFIG, NormConfig, normalize, tokenize

__version__ = "0.1.0"
