import math

import pytest
import torch

from app.models.enums import Modality, Stage
from app.models.training import AdvConfig
from app.modeling.losses import compute_stage_loss
from app.training.adversarial import (
    initial_delta, kl_consistency, modality_mask, perturb_embeddings, project_l2, select_modality,
)


def per_sample_norms(delta):
    return delta.reshape(delta.shape[0], -1).norm(dim=1)


def stage_loss(model, batch):
    return lambda embeddings: compute_stage_loss(model, batch, embeddings, Stage.PRETRAIN).total


class TestModality:

    def test_cycle(self):
        adv = AdvConfig()
        assert [select_modality(adv, s) for s in range(4)] == [
            Modality.TEXT, Modality.OBJECT, Modality.SCENE, Modality.TEXT
        ]

    def test_fixed(self):
        adv = AdvConfig(target_modality=Modality.SCENE)
        assert {select_modality(adv, s) for s in range(5)} == {Modality.SCENE}

    def test_masks_partition_real_positions(self, pretrain_batch):
        masks = [modality_mask(pretrain_batch, m) for m in (Modality.TEXT, Modality.OBJECT, Modality.SCENE)]
        assert torch.equal(masks[0] | masks[1] | masks[2], pretrain_batch.attention_mask)
        assert not (masks[0] & masks[1]).any() and not (masks[1] & masks[2]).any()
        assert torch.equal(modality_mask(pretrain_batch, Modality.ALL), pretrain_batch.attention_mask)

    def test_cycle_must_be_resolved(self, pretrain_batch):
        with pytest.raises(ValueError):
            modality_mask(pretrain_batch, Modality.CYCLE)


class TestPerturbation:

    def test_tiny_radius(self, tiny_model, pretrain_batch):
        adv = AdvConfig(epsilon=1e-12, alpha=1e-2, k_steps=3)
        embeddings = tiny_model.embed(pretrain_batch)
        delta = perturb_embeddings(
            pretrain_batch, embeddings, adv, stage_loss(tiny_model, pretrain_batch), Modality.ALL,
            torch.Generator().manual_seed(0)
        )
        assert (per_sample_norms(delta) <= 1e-12 * (1 + 1e-6)).all()

    @pytest.mark.parametrize("k_steps", [1, 3])
    def test_within_ball(self, tiny_model, pretrain_batch, k_steps):
        adv = AdvConfig(epsilon=0.5, alpha=1.0, k_steps=k_steps)
        embeddings = tiny_model.embed(pretrain_batch)
        delta = perturb_embeddings(
            pretrain_batch, embeddings, adv, stage_loss(tiny_model, pretrain_batch), Modality.ALL,
            torch.Generator().manual_seed(0)
        )
        assert (per_sample_norms(delta) <= 0.5 + 1e-6).all()
        assert delta.shape == embeddings.shape
        assert not delta.requires_grad

    def test_object_modality_only(self, tiny_model, pretrain_batch):
        adv = AdvConfig(epsilon=1.0, alpha=0.1)
        embeddings = tiny_model.embed(pretrain_batch)
        delta = perturb_embeddings(
            pretrain_batch, embeddings, adv, stage_loss(tiny_model, pretrain_batch), Modality.OBJECT,
            torch.Generator().manual_seed(0)
        )
        objects = modality_mask(pretrain_batch, Modality.OBJECT)
        assert torch.count_nonzero(delta[~objects]) == 0
        assert torch.count_nonzero(delta[objects]) > 0

    def test_initial_delta_within_ball(self, tiny_model, pretrain_batch):
        adv = AdvConfig(epsilon=0.3)
        embeddings = tiny_model.embed(pretrain_batch)
        delta = initial_delta(pretrain_batch, embeddings, adv, Modality.TEXT, torch.Generator().manual_seed(3))
        assert (per_sample_norms(delta) <= 0.3 + 1e-6).all()
        assert torch.count_nonzero(delta[~modality_mask(pretrain_batch, Modality.TEXT)]) == 0

    def test_ascent_increases_loss(self, tiny_model, pretrain_batch):
        model = tiny_model.double()
        batch = pretrain_batch.to(dtype=torch.float64)
        adv = AdvConfig(epsilon=1.0, alpha=1e-3, k_steps=1)
        embeddings = model.embed(batch).detach()
        loss_fn = stage_loss(model, batch)

        start = initial_delta(batch, embeddings, adv, Modality.ALL, torch.Generator().manual_seed(4))
        delta = perturb_embeddings(batch, embeddings, adv, loss_fn, Modality.ALL, torch.Generator().manual_seed(4))
        with torch.no_grad():
            assert float(loss_fn(embeddings + delta)) >= float(loss_fn(embeddings + start)) - 1e-9

    def test_projection(self):
        delta = torch.ones(2, 3, 4)
        delta[1] *= 0.01
        projected = project_l2(delta, 1.0)
        assert per_sample_norms(projected)[0] == pytest.approx(1.0)
        assert torch.equal(projected[1], delta[1])


class TestKLConsistency:

    def test_identical_inputs(self):
        logits = torch.randn(3, 4, 10)
        assert float(kl_consistency(logits, logits.clone())) == pytest.approx(0.0, abs=1e-7)

    def test_worked_value(self):
        clean = torch.log(torch.tensor([[0.5, 0.5]]))
        perturbed = torch.log(torch.tensor([[0.9, 0.1]]))
        expected = 0.5 * (-0.4 * math.log(0.5 / 0.9) + 0.4 * math.log(0.5 / 0.1))
        value = float(kl_consistency(clean, perturbed))
        assert value == pytest.approx(expected, abs=1e-6)
        assert value == pytest.approx(0.4395, abs=1e-4)

    def test_symmetric_and_non_negative(self):
        generator = torch.Generator().manual_seed(0)
        p = torch.randn(5, 3, 12, generator=generator)
        q = torch.randn(5, 3, 12, generator=generator)
        assert float(kl_consistency(p, q)) == pytest.approx(float(kl_consistency(q, p)), abs=1e-7)
        assert float(kl_consistency(p, q)) >= 0.0

    def test_ignored_positions(self):
        p = torch.zeros(1, 2, 3)
        q = torch.zeros(1, 2, 3)
        q[0, 1, 0] = 5.0
        labels = torch.tensor([[1, -100]])
        assert float(kl_consistency(p, q, labels)) == pytest.approx(0.0, abs=1e-7)
        assert float(kl_consistency(p, q, torch.full((1, 2), -100))) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            kl_consistency(torch.zeros(1, 2, 3), torch.zeros(1, 2, 4))
