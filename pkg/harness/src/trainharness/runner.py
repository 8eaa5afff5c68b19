"""Multi-seed self-ensemble inputs and the source->target transfer pipeline."""

from __future__ import annotations

import logging
import time
from dataclasses import replace
from pathlib import Path

from .config import TrainConfig, TransferPlan
from .predict import predict_topk
from .runio import read_manifest, write_manifest
from .train import TRAIN_MANIFEST, fine_tune

log = logging.getLogger(__name__)

MULTI_SEED_MANIFEST = "multi_seed_manifest.json"


class StageError(RuntimeError):
    """A pipeline stage failed; the message carries the stage label."""


def multi_seed(
    cfg: TrainConfig,
    seeds: list[int],
    dataset: str | Path,
    out_dir: str | Path,
    init_weights: str | Path | None = None,
    predict_dataset: str | Path | None = None,
) -> list[Path]:
    """Run one fine-tune + predict per seed; outputs are named by seed.

    Any member failure writes a partial-results manifest listing what
    completed, then re-raises with the failing seed labelled.
    """
    if len(set(seeds)) != len(seeds):
        raise ValueError(f"seeds must be distinct, got {seeds}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    predict_dataset = predict_dataset or dataset
    started = time.monotonic()

    completed: list[dict] = []
    run_paths: list[Path] = []

    def flush(status: str, error: str | None = None) -> None:
        write_manifest(out_dir / MULTI_SEED_MANIFEST, {
            "schema_version": 1,
            "kind": "multi_seed_manifest",
            "status": status,
            "error": error,
            "seeds": seeds,
            "config": cfg.to_dict(),
            "init_weights": str(init_weights) if init_weights else None,
            "completed": completed,
            "wall_time_s": round(time.monotonic() - started, 3),
        })

    for seed in seeds:
        try:
            seed_cfg = replace(cfg, seed=seed)
            ckpt = fine_tune(seed_cfg, dataset, out_dir / f"seed{seed}",
                             init_weights=init_weights)
            run_path = out_dir / f"run_seed{seed}.jsonl"
            predict_topk(ckpt, predict_dataset, cfg.k_answers, run_path)
        except Exception as e:
            flush("partial", error=f"seed {seed}: {e}")
            raise StageError(f"multi_seed member for seed {seed} failed: {e}") from e
        completed.append({"seed": seed, "run": run_path.name})
        run_paths.append(run_path)
        flush("in_progress")
    flush("complete")
    return run_paths


def _source_checkpoint_ready(ckpt_dir: Path) -> bool:
    manifest = ckpt_dir / TRAIN_MANIFEST
    return manifest.exists() and read_manifest(manifest).get("completed", False)


def transfer_pipeline(
    plan: TransferPlan,
    cfg: TrainConfig,
    seeds: list[int],
    predict_dataset: str | Path | None = None,
) -> list[Path]:
    """Train on the resource-rich source, then start target training from
    those saved weights; finish with multi-seed prediction runs.

    A completed source checkpoint under ``plan.checkpoint_dir`` is reused
    instead of retrained. Without a source dataset the pipeline is plain
    target fine-tuning.
    """
    checkpoint_dir = Path(plan.checkpoint_dir)
    source_ckpt: Path | None = None

    if plan.source_dataset:
        source_ckpt = checkpoint_dir / "source"
        if _source_checkpoint_ready(source_ckpt):
            log.info("reusing completed source checkpoint at %s", source_ckpt)
        else:
            try:
                fine_tune(cfg, plan.source_dataset, source_ckpt)
            except Exception as e:
                raise StageError(f"source stage failed: {e}") from e

    try:
        return multi_seed(
            cfg, seeds, plan.target_dataset, checkpoint_dir / "target",
            init_weights=source_ckpt, predict_dataset=predict_dataset)
    except StageError as e:
        raise StageError(f"target stage failed: {e}") from e
