"""Emit run files and manifests.

Run files follow the evaluation toolkit's documented contract: JSON Lines,
one object per question, entries sorted by pq_id, answers rank-dense with
non-increasing scores printed at 6-decimal precision.
"""

from __future__ import annotations

import json
from pathlib import Path


def write_run_file(path: str | Path, entries: dict[str, list[tuple[str, float]]]) -> None:
    """Write {pq_id: [(text, score), ...]} canonically; scores must already
    be sorted non-increasing and lie in [0, 1]."""
    lines = []
    for pq_id in sorted(entries):
        answers = entries[pq_id]
        parts = ", ".join(
            '{"text": %s, "rank": %d, "score": %.6f}'
            % (json.dumps(text, ensure_ascii=False), rank, score)
            for rank, (text, score) in enumerate(answers, 1)
        )
        lines.append(
            '{"pq_id": %s, "answers": [%s]}'
            % (json.dumps(pq_id, ensure_ascii=False), parts)
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""),
                          encoding="utf-8")


def write_manifest(path: str | Path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8")


def read_manifest(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
