"""Extract top-k ranked answer spans from a trained checkpoint.

Per question, candidate spans are scored by start_logit + end_logit over
every stride window, deduped by text keeping the best-scoring occurrence,
softmax-normalized within the question (scores land in (0, 1] and sum to
at most 1), and the k best are written in the run-file contract: dense
1-based ranks with non-increasing scores.
"""

from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModelForQuestionAnswering, AutoTokenizer

from .data import fingerprint, load_examples
from .runio import read_manifest, write_manifest, write_run_file
from .train import TRAIN_MANIFEST

log = logging.getLogger(__name__)

N_BEST_PER_SIDE = 10
MAX_ANSWER_TOKENS = 30
FORWARD_BATCH = 16


def _candidates_for_feature(start_logits, end_logits, offsets, seq_ids, context):
    valid = [
        i for i, sid in enumerate(seq_ids)
        if sid == 1 and tuple(offsets[i]) != (0, 0)
    ]
    if not valid:
        return []
    starts = sorted(valid, key=lambda i: -start_logits[i])[:N_BEST_PER_SIDE]
    ends = sorted(valid, key=lambda i: -end_logits[i])[:N_BEST_PER_SIDE]
    out = []
    for s in starts:
        for e in ends:
            if e < s or e - s + 1 > MAX_ANSWER_TOKENS:
                continue
            text = context[offsets[s][0]:offsets[e][1]]
            if not text.strip():
                continue
            out.append((float(start_logits[s] + end_logits[e]), text))
    return out


def predict_topk(
    checkpoint: str | Path,
    dataset: str | Path,
    k: int,
    out_path: str | Path,
    max_length: int | None = None,
    stride: int | None = None,
) -> Path:
    """Write a run file with the k best spans per question plus a sidecar
    manifest. Sequence length and stride default to the values recorded in
    the checkpoint's training manifest."""
    if k < 1:
        raise ValueError("k must be >= 1")
    checkpoint = Path(checkpoint)
    started = time.monotonic()

    train_cfg = {}
    manifest_path = checkpoint / TRAIN_MANIFEST
    if manifest_path.exists():
        train_cfg = read_manifest(manifest_path).get("config", {})
    max_length = max_length or train_cfg.get("max_sequence_length", 384)
    stride = stride or train_cfg.get("doc_stride", 128)

    tokenizer = AutoTokenizer.from_pretrained(checkpoint)
    model = AutoModelForQuestionAnswering.from_pretrained(checkpoint)
    model.eval()

    examples = load_examples(dataset)
    for example in examples:
        if not example.context.strip():
            raise ValueError(f"{example.qid}: empty passage")

    enc = tokenizer(
        [e.question for e in examples],
        [e.context for e in examples],
        truncation="only_second",
        max_length=max_length,
        stride=stride,
        return_overflowing_tokens=True,
        return_offsets_mapping=True,
        padding="max_length",
    )
    n_features = len(enc["input_ids"])
    input_ids = torch.tensor(enc["input_ids"], dtype=torch.long)
    token_type_ids = torch.tensor(enc["token_type_ids"], dtype=torch.long)
    attention_mask = torch.tensor(enc["attention_mask"], dtype=torch.long)

    start_logits = []
    end_logits = []
    with torch.no_grad():
        for b in range(0, n_features, FORWARD_BATCH):
            out = model(
                input_ids=input_ids[b:b + FORWARD_BATCH],
                token_type_ids=token_type_ids[b:b + FORWARD_BATCH],
                attention_mask=attention_mask[b:b + FORWARD_BATCH],
            )
            start_logits.append(out.start_logits.numpy())
            end_logits.append(out.end_logits.numpy())
    start_logits = np.concatenate(start_logits)
    end_logits = np.concatenate(end_logits)

    per_example: dict[int, list[tuple[float, str]]] = {}
    for i in range(n_features):
        sample = enc["overflow_to_sample_mapping"][i]
        per_example.setdefault(sample, []).extend(_candidates_for_feature(
            start_logits[i], end_logits[i],
            enc["offset_mapping"][i], enc.sequence_ids(i),
            examples[sample].context))

    entries: dict[str, list[tuple[str, float]]] = {}
    for sample, example in enumerate(examples):
        candidates = per_example.get(sample, [])
        if not candidates:
            raise ValueError(f"{example.qid}: no valid span candidates")
        best: dict[str, float] = {}
        for score, text in candidates:
            if text not in best or score > best[text]:
                best[text] = score
        texts = sorted(best, key=lambda t: (-best[t], t))
        logits = np.array([best[t] for t in texts])
        probs = np.exp(logits - logits.max())
        probs = probs / probs.sum()
        entries[example.qid] = [(t, float(p)) for t, p in zip(texts, probs)][:k]

    write_run_file(out_path, entries)
    write_manifest(str(out_path) + ".manifest.json", {
        "schema_version": 1,
        "kind": "run_manifest",
        "checkpoint": str(checkpoint),
        "config": train_cfg or None,
        "dataset": {"path": str(dataset), "sha256": fingerprint(dataset)},
        "k": k,
        "max_sequence_length": max_length,
        "doc_stride": stride,
        "n_questions": len(examples),
        "wall_time_s": round(time.monotonic() - started, 3),
    })
    return Path(out_path)
