"""Command line for the training harness: train, predict, multi-seed, transfer."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .config import TrainConfig, TransferPlan
from .predict import predict_topk
from .runner import multi_seed, transfer_pipeline
from .train import fine_tune


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base-model", required=True, help="hub id or local checkpoint")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=2e-5)
    p.add_argument("--warmup-fraction", type=float, default=0.10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-sequence-length", type=int, default=384)
    p.add_argument("--doc-stride", type=int, default=128)
    p.add_argument("--k-answers", type=int, default=5)


def _config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        base_model_id=args.base_model,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        warmup_fraction=args.warmup_fraction,
        seed=args.seed,
        max_sequence_length=args.max_sequence_length,
        doc_stride=args.doc_stride,
        k_answers=args.k_answers,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrc-harness",
        description="Fine-tune span-prediction models and emit ranked-answer "
                    "run files in the evaluation toolkit's format.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune one checkpoint")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--init-weights", help="checkpoint to start from")
    _add_train_flags(p)

    p = sub.add_parser("predict", help="write a top-k run file")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("-k", type=int, default=5)

    p = sub.add_parser("multi-seed", help="one run file per seed")
    p.add_argument("dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seeds", type=int, nargs="+", required=True)
    p.add_argument("--predict-dataset")
    p.add_argument("--init-weights")
    _add_train_flags(p)

    p = sub.add_parser("transfer", help="source fine-tune, then target from its weights")
    p.add_argument("--source")
    p.add_argument("--target", required=True)
    p.add_argument("--checkpoint-dir", required=True)
    p.add_argument("--seeds", type=int, nargs="+", required=True)
    p.add_argument("--predict-dataset")
    _add_train_flags(p)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        out = fine_tune(_config(args), args.dataset, args.out,
                        init_weights=args.init_weights)
        print(f"checkpoint written to {out}")
    elif args.command == "predict":
        out = predict_topk(args.checkpoint, args.dataset, args.k, args.out)
        print(f"run written to {out}")
    elif args.command == "multi-seed":
        runs = multi_seed(_config(args), args.seeds, args.dataset, args.out_dir,
                          init_weights=args.init_weights,
                          predict_dataset=args.predict_dataset)
        for run in runs:
            print(f"run written to {run}")
    else:
        plan = TransferPlan(source_dataset=args.source, target_dataset=args.target,
                            checkpoint_dir=args.checkpoint_dir)
        runs = transfer_pipeline(plan, _config(args), args.seeds,
                                 predict_dataset=args.predict_dataset)
        for run in runs:
            print(f"run written to {run}")
    return 0


def entrypoint() -> None:
    sys.exit(main())
