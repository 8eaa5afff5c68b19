"""Training configuration and the source->target transfer plan."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one fine-tuning job.

    Defaults follow the fixed recipe used across all experiments: batch
    size 8, Adam-style optimizer at 2e-5, linear warm-up over 10% of the
    training steps, 5 epochs. Sequence length and stride are standard
    span-QA practice and are echoed in every manifest.
    """

    base_model_id: str
    epochs: int = 5
    batch_size: int = 8
    learning_rate: float = 2e-5
    warmup_fraction: float = 0.10
    seed: int = 42
    max_sequence_length: int = 384
    doc_stride: int = 128
    k_answers: int = 5

    def __post_init__(self) -> None:
        if not self.base_model_id:
            raise ValueError("base_model_id must be set")
        if not 0 <= self.warmup_fraction < 1:
            raise ValueError("warmup_fraction must be in [0, 1)")
        for name in ("epochs", "batch_size", "seed", "k_answers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.doc_stride < self.max_sequence_length:
            raise ValueError("doc_stride must be in (0, max_sequence_length)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TransferPlan:
    """Datasets and checkpoint directory for sequential fine-tuning.

    The source stage trains fully before the target stage begins; with
    ``source_dataset`` unset the plan degenerates to plain target
    fine-tuning.
    """

    source_dataset: str | None
    target_dataset: str
    checkpoint_dir: str
