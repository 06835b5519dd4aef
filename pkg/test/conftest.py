from typing import Any, Dict, List, Optional

import numpy as np
import pytest

from app.dataset.synthetic import generate_synthetic_dataset
from app.dataset.validation import validate_sample
from app.inputs.builder import build_finetune_sample, build_pretrain_sample
from app.inputs.collate import collate
from app.inputs.tokenizer import Vocabulary
from app.models.sample import GeneratorConfig
from app.models.training import ModelConfig
from app.modeling.model import SceneTextSeq2Seq

D_FEAT = 8


# ============================================
# DONNÉES
# ============================================

@pytest.fixture
def generator_config() -> GeneratorConfig:
    return GeneratorConfig(d_feat=D_FEAT, text_embedding_dim=8)


@pytest.fixture
def samples(generator_config):
    return generate_synthetic_dataset(7, 12, generator_config)


@pytest.fixture
def vocab(samples) -> Vocabulary:
    return Vocabulary.build(samples)


@pytest.fixture
def make_record():
    """Fabrique d'enregistrements JSONL bruts"""

    def factory(
            image_id: str = "img-1",
            objects: Optional[List[Dict[str, Any]]] = None,
            scene_tokens: Optional[List[Dict[str, Any]]] = None,
            question: Optional[str] = "what is written",
            answers: Optional[List[str]] = None,
            **extra
    ) -> Dict[str, Any]:
        if objects is None:
            objects = [{"label": "sign", "box": [0.1, 0.1, 0.5, 0.5], "feature": [0.1] * D_FEAT}]
        if scene_tokens is None:
            scene_tokens = [{"text": "stop", "box": [0.2, 0.2, 0.3, 0.3], "feature": [0.2] * D_FEAT}]
        record = {
            "image_id": image_id,
            "objects": objects,
            "scene_tokens": scene_tokens,
            "question": question,
            "answers": answers if answers is not None else ["stop"] * 10,
        }
        record.update(extra)
        return record

    return factory


@pytest.fixture
def make_sample(make_record):
    """Fabrique de SceneSample validés"""

    def factory(**kwargs):
        return validate_sample(make_record(**kwargs))

    return factory


def region(text: str, box: List[float], value: float = 0.0, key: str = "text") -> Dict[str, Any]:
    return {key: text, "box": box, "feature": [value] * D_FEAT}


@pytest.fixture
def make_region():
    return region


# ============================================
# MODÈLE
# ============================================

@pytest.fixture
def tiny_config(vocab) -> ModelConfig:
    return ModelConfig(
        vocab_size=len(vocab),
        d_model=16,
        n_layers_enc=1,
        n_layers_dec=1,
        n_heads=2,
        d_ff=32,
        d_feat=D_FEAT,
        rpp_rank=2,
        max_text_len=64,
        max_dec_len=8,
    )


@pytest.fixture
def tiny_model(tiny_config) -> SceneTextSeq2Seq:
    import torch

    torch.manual_seed(0)
    return SceneTextSeq2Seq(tiny_config)


@pytest.fixture
def pretrain_batch(samples, vocab):
    rows = [
        build_pretrain_sample(s, 0, vocab, np.random.default_rng(i), mlm_probability=0.3, max_dec_len=8)
        for i, s in enumerate(samples[:4])
    ]
    return collate(rows)


@pytest.fixture
def finetune_batch(samples, vocab):
    return collate([build_finetune_sample(s, vocab, max_dec_len=8) for s in samples[:4]])
