"""
Gradients analytiques contre différences finies centrées (float64)
"""
import numpy as np
import pytest
import torch

from app.inputs.builder import build_pretrain_sample
from app.inputs.collate import collate
from app.inputs.tokenizer import Vocabulary
from app.modeling.losses import total_pretrain_loss
from app.modeling.model import SceneTextSeq2Seq

STEP = 1e-6
ENTRIES_PER_TENSOR = 6
VOCAB_SIZE = 32


@pytest.fixture
def small_vocab(samples):
    # spéciaux puis les mots les plus fréquents, le reste devient [UNK]
    return Vocabulary(Vocabulary.build(samples[:4]).tokens[:VOCAB_SIZE])


@pytest.fixture
def double_batch(samples, small_vocab):
    rows = [
        build_pretrain_sample(s, 0, small_vocab, np.random.default_rng(i), mlm_probability=0.3, max_dec_len=8)
        for i, s in enumerate(samples[:4])
    ]
    return collate(rows).to(dtype=torch.float64)


@pytest.fixture
def double_model(tiny_config):
    torch.manual_seed(1)
    config = tiny_config.model_copy(update={"vocab_size": VOCAB_SIZE, "d_model": 8, "d_ff": 16})
    model = SceneTextSeq2Seq(config).double()
    # biais non nuls
    with torch.no_grad():
        for parameter in model.parameters():
            parameter.add_(0.05 * torch.randn_like(parameter))
    return model


def test_finite_differences(double_model, double_batch):
    batch = double_batch
    assert int(batch.token_ids.max()) < VOCAB_SIZE

    def loss_value() -> float:
        return float(total_pretrain_loss(batch, double_model)[0])

    double_model.zero_grad()
    total_pretrain_loss(batch, double_model)[0].backward()

    generator = torch.Generator().manual_seed(0)
    checked = 0
    failures = []
    with torch.no_grad():
        for name, parameter in double_model.named_parameters():
            flat = parameter.view(-1)
            grad = parameter.grad.view(-1)
            count = min(ENTRIES_PER_TENSOR, flat.numel())
            for index in torch.randperm(flat.numel(), generator=generator)[:count].tolist():
                original = float(flat[index])
                flat[index] = original + STEP
                plus = loss_value()
                flat[index] = original - STEP
                minus = loss_value()
                flat[index] = original

                numeric = (plus - minus) / (2 * STEP)
                analytic = float(grad[index])
                scale = max(abs(numeric), abs(analytic), 1e-4)
                if abs(numeric - analytic) / scale > 1e-3:
                    failures.append((name, index, analytic, numeric))
                checked += 1

    assert checked >= 200
    assert not failures, failures[:5]
