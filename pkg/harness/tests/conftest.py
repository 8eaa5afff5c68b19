import os

# Must be set before transformers is imported anywhere in the session.
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import json

import pytest

from trainharness.config import TrainConfig

FILLERS = ["night", "power", "light", "mercy", "patience", "prayer",
           "charity", "wisdom", "guidance", "peace", "reward", "faith",
           "truth", "hope", "kindness", "justice", "shade", "water",
           "gardens", "rivers"]


def toy_target_records() -> list[dict]:
    """20 question-passage records with exact gold offsets."""
    records = []
    for i in range(20):
        a, b, c = FILLERS[i], FILLERS[(i + 3) % 20], FILLERS[(i + 7) % 20]
        passage = f"the {a} of {b} brings {c} to the people"
        answer = f"the {a} of {b}"
        records.append({
            "pq_id": f"toy:{i:02d}",
            "passage": passage,
            "question": f"what brings {c} to the people",
            "surah": (i % 114) + 1,
            "verses": f"{i + 1}-{i + 2}",
            "answers": [{"text": answer, "start_char": passage.index(answer)}],
        })
    return records


def toy_source_payload() -> dict:
    """20 SQuAD-format examples over a slightly different template."""
    paragraphs = []
    for i in range(20):
        a, b = FILLERS[(i + 5) % 20], FILLERS[(i + 11) % 20]
        context = f"people seek the {a} of {b} in every land"
        answer = f"the {a} of {b}"
        paragraphs.append({
            "context": context,
            "qas": [{
                "id": f"src-{i:02d}",
                "question": f"what do people seek in every land",
                "answers": [{"text": answer, "answer_start": context.index(answer)}],
            }],
        })
    return {"version": "1.1", "data": [{"title": "toy", "paragraphs": paragraphs}]}


@pytest.fixture(scope="session")
def toy_target(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("data") / "toy_target.jsonl"
    path.write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in toy_target_records()) + "\n",
        encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def toy_source(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("data") / "toy_source.json"
    path.write_text(json.dumps(toy_source_payload(), ensure_ascii=False),
                    encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def tiny_model(tmp_path_factory) -> str:
    """A small randomly initialized span-prediction checkpoint built
    locally, so tests never touch the network."""
    import torch
    from transformers import BertConfig, BertForQuestionAnswering, BertTokenizerFast

    words = set()
    for rec in toy_target_records():
        words.update(rec["passage"].split())
        words.update(rec["question"].split())
    for article in toy_source_payload()["data"]:
        for para in article["paragraphs"]:
            words.update(para["context"].split())
            for qa in para["qas"]:
                words.update(qa["question"].split())

    model_dir = tmp_path_factory.mktemp("tiny_model")
    vocab_path = model_dir / "base_vocab.txt"
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + sorted(words)
    vocab_path.write_text("\n".join(vocab) + "\n", encoding="utf-8")

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=512,
    )
    model = BertForQuestionAnswering(config)
    tokenizer = BertTokenizerFast(str(vocab_path), model_max_length=512)
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    return str(model_dir)


@pytest.fixture(scope="session")
def tiny_cfg(tiny_model) -> TrainConfig:
    # toy-scale learning rate: 2e-5 moves a random tiny model too little
    # for a one-epoch smoke run to show anything
    return TrainConfig(
        base_model_id=tiny_model,
        epochs=1,
        learning_rate=1e-3,
        seed=7,
        max_sequence_length=64,
        doc_stride=32,
    )
