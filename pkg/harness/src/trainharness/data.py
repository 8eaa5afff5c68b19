"""Load question-answering examples from the two supported dataset formats.

* JSONL question-passage files (the evaluation toolkit's dataset format):
  one object per line with pq_id / passage / question / answers, each
  answer carrying text plus a 0-based character offset.
* SQuAD-format JSON documents (data -> paragraphs -> qas), the shape the
  transfer-learning source corpus ships in.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class QAExample:
    qid: str
    question: str
    context: str
    answers: tuple[tuple[str, int], ...]  # (text, char_start)


def load_qrcd_jsonl(path: str | Path) -> list[QAExample]:
    examples = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}: line {line_no}: malformed JSON: {e.msg}") from e
            try:
                examples.append(QAExample(
                    qid=obj["pq_id"],
                    question=obj["question"],
                    context=obj["passage"],
                    answers=tuple((a["text"], a["start_char"]) for a in obj["answers"]),
                ))
            except KeyError as e:
                raise ValueError(f"{path}: line {line_no}: missing field {e}") from e
    return examples


def load_squad_json(path: str | Path) -> list[QAExample]:
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    examples = []
    for article in payload["data"]:
        for paragraph in article["paragraphs"]:
            context = paragraph["context"]
            for qa in paragraph["qas"]:
                examples.append(QAExample(
                    qid=str(qa["id"]),
                    question=qa["question"],
                    context=context,
                    answers=tuple(
                        (a["text"], a["answer_start"]) for a in qa["answers"]),
                ))
    return examples


def load_examples(path: str | Path) -> list[QAExample]:
    """Dispatch on extension: .jsonl -> question-passage lines, else SQuAD."""
    path = Path(path)
    if path.suffix == ".jsonl":
        return load_qrcd_jsonl(path)
    return load_squad_json(path)


def fingerprint(path: str | Path) -> str:
    """SHA-256 of the file bytes, recorded in manifests."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
