"""Fine-tune a span-prediction transformer on a QA dataset.

The question and passage are packed into a single sequence separated by
the tokenizer's [SEP] token; long passages are windowed with a stride and
gold spans that fall outside a window point at the [CLS] position. The
optimizer is Adam-style (decoupled variant with zero weight decay, which
makes it plain Adam) with a linear warm-up over ``warmup_fraction`` of the
training steps followed by linear decay.
"""

from __future__ import annotations

import hashlib
import logging
import random
import time
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModelForQuestionAnswering, AutoTokenizer

from .config import TrainConfig
from .data import QAExample, fingerprint, load_examples
from .runio import write_manifest

log = logging.getLogger(__name__)

TRAIN_MANIFEST = "train_manifest.json"


def set_seed(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def param_checksum(model: torch.nn.Module) -> str:
    """SHA-256 over all parameters in state-dict key order."""
    digest = hashlib.sha256()
    state = model.state_dict()
    for key in sorted(state):
        digest.update(key.encode())
        digest.update(state[key].detach().cpu().numpy().tobytes())
    return digest.hexdigest()


def build_train_features(
    examples: list[QAExample],
    tokenizer,
    max_length: int,
    stride: int,
) -> dict[str, torch.Tensor]:
    """Tokenize with overflowing windows and map gold spans to token
    positions; spans not fully inside a window target the [CLS] index."""
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
    start_positions = []
    end_positions = []
    for i, offsets in enumerate(enc["offset_mapping"]):
        example = examples[enc["overflow_to_sample_mapping"][i]]
        if not example.answers:
            start_positions.append(0)
            end_positions.append(0)
            continue
        text, start_char = example.answers[0]
        end_char = start_char + len(text)
        seq_ids = enc.sequence_ids(i)

        ctx_from = seq_ids.index(1)
        ctx_to = len(seq_ids) - 1 - seq_ids[::-1].index(1)
        if offsets[ctx_from][0] > start_char or offsets[ctx_to][1] < end_char:
            start_positions.append(0)
            end_positions.append(0)
            continue
        tok_start = ctx_from
        while tok_start <= ctx_to and offsets[tok_start][1] <= start_char:
            tok_start += 1
        tok_end = ctx_to
        while tok_end >= ctx_from and offsets[tok_end][0] >= end_char:
            tok_end -= 1
        start_positions.append(tok_start)
        end_positions.append(tok_end)

    return {
        "input_ids": torch.tensor(enc["input_ids"], dtype=torch.long),
        "token_type_ids": torch.tensor(enc["token_type_ids"], dtype=torch.long),
        "attention_mask": torch.tensor(enc["attention_mask"], dtype=torch.long),
        "start_positions": torch.tensor(start_positions, dtype=torch.long),
        "end_positions": torch.tensor(end_positions, dtype=torch.long),
    }


def _dataset_loss(model, features: dict[str, torch.Tensor], batch_size: int) -> float:
    """Mean loss over the whole feature set, eval mode, no gradients."""
    n = features["input_ids"].shape[0]
    was_training = model.training
    model.eval()
    total = 0.0
    with torch.no_grad():
        for b in range(0, n, batch_size):
            batch = {k: v[b:b + batch_size] for k, v in features.items()}
            out = model(**batch)
            total += out.loss.item() * batch["input_ids"].shape[0]
    if was_training:
        model.train()
    return total / n


def _linear_schedule(optimizer, warmup_steps: int, total_steps: int):
    def lr_lambda(step: int) -> float:
        if step < warmup_steps:
            return (step + 1) / max(1, warmup_steps)
        remaining = max(0, total_steps - step)
        return remaining / max(1, total_steps - warmup_steps)

    return torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)


def fine_tune(
    cfg: TrainConfig,
    dataset: str | Path,
    out_dir: str | Path,
    init_weights: str | Path | None = None,
) -> Path:
    """Train a span-prediction checkpoint and write it plus its manifest.

    ``init_weights`` points at a previously saved checkpoint directory and
    switches the starting point from the base model to those weights (the
    transfer-learning hand-off).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    set_seed(cfg.seed)

    source = str(init_weights) if init_weights else cfg.base_model_id
    try:
        tokenizer = AutoTokenizer.from_pretrained(source)
        model = AutoModelForQuestionAnswering.from_pretrained(source)
    except OSError as e:
        raise ValueError(
            f"cannot resolve model {source!r}: not a local checkpoint "
            f"directory and not downloadable here ({e})") from e
    init_checksum = param_checksum(model)

    examples = load_examples(dataset)
    if not examples:
        raise ValueError(f"dataset {dataset} contains no examples")
    features = build_train_features(
        examples, tokenizer, cfg.max_sequence_length, cfg.doc_stride)
    n_features = features["input_ids"].shape[0]

    n_batches = (n_features + cfg.batch_size - 1) // cfg.batch_size
    total_steps = cfg.epochs * n_batches
    warmup_steps = int(round(cfg.warmup_fraction * total_steps))
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=cfg.learning_rate, weight_decay=0.0)
    scheduler = _linear_schedule(optimizer, warmup_steps, total_steps)

    loss_initial = _dataset_loss(model, features, cfg.batch_size)
    generator = torch.Generator().manual_seed(cfg.seed)
    model.train()
    first_step_loss = None
    last_step_loss = None
    epoch_losses = []
    for epoch in range(cfg.epochs):
        order = torch.randperm(n_features, generator=generator)
        losses = []
        for b in range(n_batches):
            idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            batch = {k: v[idx] for k, v in features.items()}
            optimizer.zero_grad()
            out = model(**batch)
            out.loss.backward()
            optimizer.step()
            scheduler.step()
            losses.append(out.loss.item())
            if first_step_loss is None:
                first_step_loss = out.loss.item()
            last_step_loss = out.loss.item()
        epoch_losses.append(sum(losses) / len(losses))
        log.info("epoch %d/%d mean loss %.4f", epoch + 1, cfg.epochs, epoch_losses[-1])
    loss_trained = _dataset_loss(model, features, cfg.batch_size)

    model.eval()
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    write_manifest(out_dir / TRAIN_MANIFEST, {
        "schema_version": 1,
        "kind": "train_manifest",
        "config": cfg.to_dict(),
        "dataset": {
            "path": str(dataset),
            "sha256": fingerprint(dataset),
            "n_examples": len(examples),
            "n_features": n_features,
        },
        "init_weights": str(init_weights) if init_weights else None,
        "init_param_checksum": init_checksum,
        "final_param_checksum": param_checksum(model),
        "warmup_steps": warmup_steps,
        "total_steps": total_steps,
        "loss_initial": loss_initial,
        "loss_trained": loss_trained,
        "loss_first_step": first_step_loss,
        "loss_last_step": last_step_loss,
        "loss_per_epoch": epoch_losses,
        "wall_time_s": round(time.monotonic() - started, 3),
        "completed": True,
    })
    return out_dir
