"""Training harness: fine-tune span-prediction models, emit ranked runs."""

from .config import TrainConfig, TransferPlan
from .data import QAExample, load_examples, load_qrcd_jsonl, load_squad_json
from .predict import predict_topk
from .runner import StageError, multi_seed, transfer_pipeline
from .train import fine_tune, param_checksum

__version__ = "0.1.0"
