import math

import pytest
import torch

from app.core.exceptions import ShapeError
from app.inputs.masking import IGNORE_INDEX
from app.models.enums import Stage
from app.modeling.losses import (
    LossWeights, compute_stage_loss, masked_cross_entropy, rpp_loss, total_pretrain_loss,
)


class TestMaskedCrossEntropy:

    def test_uniform_logits(self):
        logits = torch.zeros(2, 3, 16)
        labels = torch.tensor([[1, 2, IGNORE_INDEX], [4, IGNORE_INDEX, IGNORE_INDEX]])
        assert float(masked_cross_entropy(logits, labels)) == pytest.approx(math.log(16))

    def test_confident_logits(self):
        labels = torch.tensor([[3, 5]])
        logits = torch.zeros(1, 2, 16)
        logits[0, 0, 3] = 100.0
        logits[0, 1, 5] = 100.0
        assert float(masked_cross_entropy(logits, labels)) < 1e-8

    def test_all_ignored(self):
        logits = torch.randn(2, 4, 16, requires_grad=True)
        labels = torch.full((2, 4), IGNORE_INDEX)
        loss = masked_cross_entropy(logits, labels)
        assert float(loss) == 0.0
        loss.backward()
        assert torch.count_nonzero(logits.grad) == 0

    def test_mean_over_real_positions(self):
        logits = torch.zeros(1, 4, 8)
        logits[0, 0, 1] = 100.0
        labels = torch.tensor([[1, 2, IGNORE_INDEX, IGNORE_INDEX]])
        assert float(masked_cross_entropy(logits, labels)) == pytest.approx(math.log(8) / 2)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            masked_cross_entropy(torch.zeros(1, 3, 8), torch.zeros(1, 4, dtype=torch.long))


def zero_model_(model):
    with torch.no_grad():
        for parameter in model.parameters():
            parameter.zero_()
    return model


class TestStageLoss:

    def test_zero_parameters_give_uniform_losses(self, tiny_model, pretrain_batch):
        model = zero_model_(tiny_model)
        output = compute_stage_loss(model, pretrain_batch, model.embed(pretrain_batch), Stage.PRETRAIN)
        values = output.component_values()

        log_v = math.log(model.config.vocab_size)
        assert values["gen"] == pytest.approx(log_v, abs=1e-5)
        has_mlm = bool((pretrain_batch.mlm_labels != IGNORE_INDEX).any())
        assert values["mlm"] == pytest.approx(log_v if has_mlm else 0.0, abs=1e-5)
        assert values["rpp"] == pytest.approx(math.log(11), abs=1e-5)
        expected = log_v * (2 if has_mlm else 1) + math.log(11)
        assert float(output.total) == pytest.approx(expected, abs=1e-5)

    def test_weights_select_generation(self, tiny_model, pretrain_batch):
        output = compute_stage_loss(
            tiny_model, pretrain_batch, tiny_model.embed(pretrain_batch), Stage.PRETRAIN,
            LossWeights(gen=1.0, mlm=0.0, rpp=0.0)
        )
        assert float(output.total) == pytest.approx(output.component_values()["gen"], abs=1e-6)

    def test_finetune_components(self, tiny_model, finetune_batch):
        embeddings = tiny_model.embed(finetune_batch)
        plain = compute_stage_loss(tiny_model, finetune_batch, embeddings, Stage.FINETUNE)
        assert set(plain.component_values()) == {"gen"}
        auxiliary = compute_stage_loss(tiny_model, finetune_batch, embeddings, Stage.FINETUNE, auxiliary=True)
        assert set(auxiliary.component_values()) == {"gen", "rpp"}

    def test_logits_exposed(self, tiny_model, pretrain_batch):
        output = compute_stage_loss(tiny_model, pretrain_batch, tiny_model.embed(pretrain_batch), Stage.PRETRAIN)
        assert output.logits.shape == (
            pretrain_batch.batch_size,
            pretrain_batch.decoder_target_ids.shape[1],
            tiny_model.config.vocab_size,
        )

    def test_total_pretrain_loss(self, tiny_model, pretrain_batch):
        weights = LossWeights(gen=1.0, mlm=0.5, rpp=2.0)
        total, components = total_pretrain_loss(pretrain_batch, tiny_model, weights)
        expected = components["gen"] + 0.5 * components["mlm"] + 2.0 * components["rpp"]
        assert float(total) == pytest.approx(expected, rel=1e-5)
        assert all(value >= 0.0 for value in components.values())


def test_rpp_without_objects(tiny_model, finetune_batch):
    states = tiny_model.encode(finetune_batch)
    labels = torch.full((finetune_batch.batch_size, finetune_batch.n_scene, 0), IGNORE_INDEX)
    assert float(rpp_loss(states, labels, tiny_model)) == 0.0


def test_rpp_rejects_flat_labels(tiny_model, pretrain_batch):
    states = tiny_model.encode(pretrain_batch)
    with pytest.raises(ShapeError):
        rpp_loss(states, pretrain_batch.rpp_labels.flatten(1), tiny_model)
