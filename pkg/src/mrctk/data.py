"""Dataset and run-file I/O: the single source of truth for on-disk formats.

Two JSON Lines formats, both UTF-8 with one object per line:

* dataset: question-passage records with gold answers carrying exact
  character offsets into the raw passage (offsets in unicode scalar
  values, never bytes, and always checked pre-normalization);
* run: per question, a ranked, scored list of candidate answer texts.

Parsing fails fast on structural problems (bad JSON, missing fields,
duplicate ids, broken rank/score invariants). Semantic dataset checks live
in :func:`validate_dataset`, which reports findings instead of raising.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

DEFAULT_K_MAX = 5

#: canonical field name -> on-disk key; callers may override any subset.
DEFAULT_FIELD_MAP: dict[str, str] = {
    "pq_id": "pq_id",
    "passage": "passage",
    "question": "question",
    "surah": "surah",
    "verses": "verses",
    "answers": "answers",
    "answer_text": "text",
    "answer_start": "start_char",
}

SURAH_MIN, SURAH_MAX = 1, 114


class DatasetError(ValueError):
    """Structural problem in a dataset file (malformed line, missing field)."""


class RunError(ValueError):
    """Structural or invariant problem in a run file or Run object."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoldAnswer:
    """One gold answer span, extracted verbatim from the raw passage."""
    text: str
    start_char: int


@dataclass(frozen=True)
class QPRecord:
    """One question-passage pair with its gold answers (one dataset line)."""
    pq_id: str
    passage: str
    question: str
    answers: tuple[GoldAnswer, ...]
    surah: int | None = None
    verses: str | None = None


@dataclass(frozen=True)
class RankedAnswer:
    """One candidate answer inside a run entry. Ranks are 1-based."""
    text: str
    rank: int
    score: float


@dataclass(frozen=True, eq=True)
class Run:
    """A system's ranked, scored answers per question.

    ``run_id`` is a label (typically the file stem); it is not serialized,
    so structural equality of round-tripped runs compares ``entries``
    against the id the caller supplied at parse time.
    """
    run_id: str
    entries: dict[str, tuple[RankedAnswer, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class SplitStats:
    """Question-passage pair and question-passage-answer triplet counts."""
    qp_pairs: int
    qpa_triplets: int

    def __add__(self, other: "SplitStats") -> "SplitStats":
        return SplitStats(
            self.qp_pairs + other.qp_pairs,
            self.qpa_triplets + other.qpa_triplets,
        )


@dataclass(frozen=True)
class Finding:
    """One validation finding: where, which rule, what happened."""
    locator: str
    rule: str
    message: str


@dataclass
class ValidationReport:
    errors: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "validation",
            "ok": self.ok,
            "errors": [vars(f) for f in self.errors],
            "warnings": [vars(f) for f in self.warnings],
        }


RULE_DUPLICATE_ID = "pq-id-duplicate"
RULE_EMPTY_ANSWERS = "answers-empty"
RULE_SURAH_RANGE = "surah-range"
RULE_OFFSET_RANGE = "offset-range"
RULE_OFFSET_MISMATCH = "offset-mismatch"


# ---------------------------------------------------------------------------
# Line handling
# ---------------------------------------------------------------------------

def _iter_json_lines(source: bytes | IO[bytes]) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for each non-blank line of a JSONL stream."""
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    for line_no, raw in enumerate(source, 1):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise DatasetError(f"line {line_no}: not valid UTF-8: {e}") from e
        if not text.strip():
            log.warning("line %d: blank line skipped", line_no)
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise DatasetError(f"line {line_no}: malformed JSON: {e.msg}") from e
        if not isinstance(obj, dict):
            raise DatasetError(f"line {line_no}: expected a JSON object")
        yield line_no, obj


def _require(obj: dict, key: str, line_no: int, kind: type, what: str):
    if key not in obj:
        raise DatasetError(f"line {line_no}: missing required field {key!r}")
    value = obj[key]
    if kind is int and isinstance(value, bool):
        raise DatasetError(f"line {line_no}: {what} {key!r} must be an integer")
    if not isinstance(value, kind):
        raise DatasetError(
            f"line {line_no}: {what} {key!r} must be {kind.__name__}, "
            f"got {type(value).__name__}"
        )
    return value


# ---------------------------------------------------------------------------
# Dataset operations
# ---------------------------------------------------------------------------

def parse_dataset(
    source: bytes | IO[bytes],
    field_map: Mapping[str, str] | None = None,
) -> list[QPRecord]:
    """Parse a JSONL dataset into records, in file order.

    ``field_map`` renames on-disk keys to the canonical fields without code
    change; unspecified entries fall back to :data:`DEFAULT_FIELD_MAP`.
    Blank lines are skipped with a warning. Raises :class:`DatasetError`
    (with the line number) on malformed lines, missing required fields and
    duplicate ids.
    """
    fmap = dict(DEFAULT_FIELD_MAP)
    if field_map:
        unknown = set(field_map) - set(fmap)
        if unknown:
            raise ValueError(f"unknown field_map keys: {sorted(unknown)}")
        fmap.update(field_map)

    records: list[QPRecord] = []
    seen: set[str] = set()
    for line_no, obj in _iter_json_lines(source):
        pq_id = _require(obj, fmap["pq_id"], line_no, str, "field")
        if pq_id in seen:
            raise DatasetError(f"line {line_no}: duplicate pq_id {pq_id!r}")
        seen.add(pq_id)
        passage = _require(obj, fmap["passage"], line_no, str, "field")
        question = _require(obj, fmap["question"], line_no, str, "field")
        raw_answers = _require(obj, fmap["answers"], line_no, list, "field")

        answers = []
        for item in raw_answers:
            if not isinstance(item, dict):
                raise DatasetError(f"line {line_no}: answer entries must be objects")
            text = _require(item, fmap["answer_text"], line_no, str, "answer field")
            start = _require(item, fmap["answer_start"], line_no, int, "answer field")
            answers.append(GoldAnswer(text=text, start_char=start))

        surah = obj.get(fmap["surah"])
        if surah is not None and (isinstance(surah, bool) or not isinstance(surah, int)):
            raise DatasetError(f"line {line_no}: field {fmap['surah']!r} must be an integer")
        verses = obj.get(fmap["verses"])
        if verses is not None and not isinstance(verses, str):
            raise DatasetError(f"line {line_no}: field {fmap['verses']!r} must be a string")

        records.append(QPRecord(
            pq_id=pq_id,
            passage=passage,
            question=question,
            answers=tuple(answers),
            surah=surah,
            verses=verses,
        ))
    return records


def validate_dataset(records: Sequence[QPRecord], strict: bool = False) -> ValidationReport:
    """Check every record and gold-answer invariant; pure and deterministic.

    Offset substring mismatches are errors in strict mode and warnings
    otherwise; everything else that breaks an invariant is always an error.
    The substring check is exact on the raw passage: no normalization is
    applied before comparing.
    """
    report = ValidationReport()
    seen: set[str] = set()
    for rec in records:
        if rec.pq_id in seen:
            report.errors.append(Finding(
                rec.pq_id, RULE_DUPLICATE_ID, "pq_id occurs more than once"))
        seen.add(rec.pq_id)

        if not rec.answers:
            report.errors.append(Finding(
                rec.pq_id, RULE_EMPTY_ANSWERS, "record has no gold answers"))

        if rec.surah is not None and not (SURAH_MIN <= rec.surah <= SURAH_MAX):
            report.errors.append(Finding(
                rec.pq_id, RULE_SURAH_RANGE,
                f"surah {rec.surah} outside [{SURAH_MIN}, {SURAH_MAX}]"))

        for i, ans in enumerate(rec.answers):
            loc = f"{rec.pq_id}:answers[{i}]"
            end = ans.start_char + len(ans.text)
            if ans.start_char < 0 or end > len(rec.passage):
                report.errors.append(Finding(
                    loc, RULE_OFFSET_RANGE,
                    f"span [{ans.start_char}, {end}) outside passage of "
                    f"length {len(rec.passage)}"))
                continue
            found = rec.passage[ans.start_char:end]
            if found != ans.text:
                finding = Finding(
                    loc, RULE_OFFSET_MISMATCH,
                    f"passage substring {found!r} != answer text {ans.text!r}")
                (report.errors if strict else report.warnings).append(finding)
    return report


def dataset_stats(records: Sequence[QPRecord]) -> SplitStats:
    """Count question-passage pairs and question-passage-answer triplets."""
    return SplitStats(
        qp_pairs=len(records),
        qpa_triplets=sum(len(r.answers) for r in records),
    )


def load_dataset(path: str | Path, field_map: Mapping[str, str] | None = None) -> list[QPRecord]:
    with open(path, "rb") as f:
        return parse_dataset(f, field_map)


# ---------------------------------------------------------------------------
# Run operations
# ---------------------------------------------------------------------------

def check_run(run: Run, k_max: int = DEFAULT_K_MAX) -> None:
    """Raise :class:`RunError` unless every run invariant holds.

    Per question: at most ``k_max`` answers, ranks exactly 1..m with no
    gaps or duplicates, scores in [0, 1] and non-increasing in rank.
    """
    for pq_id, answers in run.entries.items():
        if len(answers) > k_max:
            raise RunError(
                f"{pq_id}: {len(answers)} answers exceed k_max={k_max}")
        ranks = sorted(a.rank for a in answers)
        if ranks != list(range(1, len(answers) + 1)):
            raise RunError(f"{pq_id}: ranks {ranks} are not dense 1..{len(answers)}")
        by_rank = sorted(answers, key=lambda a: a.rank)
        prev = None
        for a in by_rank:
            if not 0.0 <= a.score <= 1.0:
                raise RunError(f"{pq_id}: score {a.score} outside [0, 1]")
            if prev is not None and a.score > prev:
                raise RunError(
                    f"{pq_id}: score {a.score} at rank {a.rank} exceeds the "
                    f"score at the previous rank")
            prev = a.score


def parse_run(
    source: bytes | IO[bytes],
    run_id: str = "run",
    k_max: int = DEFAULT_K_MAX,
) -> Run:
    """Parse a JSONL run file, re-checking rank and score invariants."""
    entries: dict[str, tuple[RankedAnswer, ...]] = {}
    for line_no, obj in _iter_json_lines(source):
        try:
            pq_id = _require(obj, "pq_id", line_no, str, "field")
            raw = _require(obj, "answers", line_no, list, "field")
            answers = []
            for item in raw:
                if not isinstance(item, dict):
                    raise RunError(f"line {line_no}: answer entries must be objects")
                text = _require(item, "text", line_no, str, "answer field")
                rank = _require(item, "rank", line_no, int, "answer field")
                score = item.get("score")
                if isinstance(score, bool) or not isinstance(score, (int, float)):
                    raise RunError(f"line {line_no}: answer field 'score' must be a number")
                answers.append(RankedAnswer(text=text, rank=rank, score=float(score)))
        except DatasetError as e:
            raise RunError(str(e)) from e
        if pq_id in entries:
            raise RunError(f"line {line_no}: duplicate pq_id {pq_id!r}")
        entries[pq_id] = tuple(sorted(answers, key=lambda a: a.rank))
    run = Run(run_id=run_id, entries=entries)
    check_run(run, k_max=k_max)
    return run


def write_run(run: Run, k_max: int = DEFAULT_K_MAX) -> bytes:
    """Serialize a run canonically: entries sorted by pq_id, answers by
    rank, scores with fixed 6-decimal precision. Refuses invalid runs."""
    check_run(run, k_max=k_max)
    lines = []
    for pq_id in sorted(run.entries):
        answers = sorted(run.entries[pq_id], key=lambda a: a.rank)
        parts = ", ".join(
            '{"text": %s, "rank": %d, "score": %.6f}'
            % (json.dumps(a.text, ensure_ascii=False), a.rank, a.score)
            for a in answers
        )
        lines.append(
            '{"pq_id": %s, "answers": [%s]}'
            % (json.dumps(pq_id, ensure_ascii=False), parts)
        )
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def load_run(path: str | Path, run_id: str | None = None, k_max: int = DEFAULT_K_MAX) -> Run:
    path = Path(path)
    with open(path, "rb") as f:
        return parse_run(f, run_id=run_id or path.stem, k_max=k_max)


def save_run(run: Run, path: str | Path, k_max: int = DEFAULT_K_MAX) -> None:
    Path(path).write_bytes(write_run(run, k_max=k_max))
