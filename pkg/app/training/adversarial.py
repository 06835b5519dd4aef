"""
Perturbations adversariales dans l'espace d'embedding et régularisation KL symétrique
"""
from typing import Callable, Optional

import torch
import torch.nn.functional as F

from app.core.exceptions import NumericalError
from app.inputs.collate import MultimodalBatch
from app.inputs.masking import IGNORE_INDEX
from app.models.enums import Modality
from app.models.training import AdvConfig

NORM_FLOOR = 1e-12

MODALITY_CYCLE = (Modality.TEXT, Modality.OBJECT, Modality.SCENE)


def select_modality(adv: AdvConfig, step: int) -> Modality:
    """Modalité du step: cycle TEXT → OBJECT → SCENE ou modalité fixe"""
    if adv.target_modality == Modality.CYCLE:
        return MODALITY_CYCLE[step % len(MODALITY_CYCLE)]
    return adv.target_modality


def modality_mask(batch: MultimodalBatch, modality: Modality) -> torch.Tensor:
    """Masque [B × L] des positions réelles de la modalité"""
    if modality == Modality.CYCLE:
        raise ValueError("CYCLE doit être résolu par select_modality")
    text_length, n_objects = batch.text_length, batch.n_objects
    selected = torch.zeros_like(batch.attention_mask)
    if modality in (Modality.TEXT, Modality.ALL):
        selected[:, :text_length] = True
    if modality in (Modality.OBJECT, Modality.ALL):
        selected[:, text_length:text_length + n_objects] = True
    if modality in (Modality.SCENE, Modality.ALL):
        selected[:, text_length + n_objects:] = True
    return selected & batch.attention_mask


def _per_sample_norm(x: torch.Tensor) -> torch.Tensor:
    return x.reshape(x.shape[0], -1).norm(p=2, dim=1).view(-1, 1, 1)


def project_l2(delta: torch.Tensor, epsilon: float) -> torch.Tensor:
    """Projection par échantillon sur la boule L2 de rayon epsilon"""
    norm = _per_sample_norm(delta)
    scale = torch.where(norm > epsilon, epsilon / norm.clamp_min(NORM_FLOOR), torch.ones_like(norm))
    return delta * scale


def initial_delta(
        batch: MultimodalBatch,
        embeddings: torch.Tensor,
        adv: AdvConfig,
        modality: Modality,
        generator: Optional[torch.Generator] = None
) -> torch.Tensor:
    """δ₀ uniforme dans [-ε/√dims, ε/√dims] sur les positions éligibles (‖δ₀‖₂ ≤ ε)"""
    eligible = modality_mask(batch, modality)[..., None].to(embeddings.dtype)
    dims = (eligible.sum(dim=(1, 2)) * embeddings.shape[-1]).clamp_min(1.0).view(-1, 1, 1)
    noise = torch.rand(
        embeddings.shape, generator=generator, dtype=embeddings.dtype, device=embeddings.device
    ) * 2.0 - 1.0
    return noise * eligible * (adv.epsilon / dims.sqrt())


def perturb_embeddings(
        batch: MultimodalBatch,
        embeddings: torch.Tensor,
        adv: AdvConfig,
        loss_fn: Callable[[torch.Tensor], torch.Tensor],
        modality: Modality,
        generator: Optional[torch.Generator] = None
) -> torch.Tensor:
    """
    Calculer δ par montée de gradient projetée

    Départ initial_delta puis k_steps de δ ← Π_ε(δ + α·g/‖g‖₂), normes par échantillon.

    Args:
        batch: Batch (pour les masques de modalité)
        embeddings: Sortie de embed (le graphe n'est pas modifié)
        adv: Hyperparamètres adversariaux
        loss_fn: Perte différentiable en fonction des embeddings
        modality: Modalité perturbée (TEXT, OBJECT, SCENE ou ALL)
        generator: Générateur torch pour l'initialisation

    Returns:
        δ détaché, de la forme des embeddings

    Raises:
        NumericalError: Gradient non fini
    """
    base = embeddings.detach()
    eligible = modality_mask(batch, modality)[..., None].to(base.dtype)
    delta = initial_delta(batch, base, adv, modality, generator)

    for _ in range(adv.k_steps):
        delta.requires_grad_(True)
        loss = loss_fn(base + delta)
        (grad,) = torch.autograd.grad(loss, delta)
        if not torch.isfinite(grad).all():
            raise NumericalError("Gradient adversarial non fini")
        grad = grad * eligible
        step = adv.alpha * grad / _per_sample_norm(grad).clamp_min(NORM_FLOOR)
        delta = project_l2((delta + step).detach(), adv.epsilon) * eligible

    return delta.detach()


def kl_consistency(
        clean_logits: torch.Tensor,
        adv_logits: torch.Tensor,
        labels: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """
    KL symétrique ½[KL(p‖q) + KL(q‖p)] moyenne sur les positions non ignorées

    Calculée comme ½ Σ (p − q)(log p − log q), symétrique terme à terme.
    """
    if clean_logits.shape != adv_logits.shape:
        raise ValueError(f"Formes différentes: {tuple(clean_logits.shape)} / {tuple(adv_logits.shape)}")
    log_p = F.log_softmax(clean_logits, dim=-1)
    log_q = F.log_softmax(adv_logits, dim=-1)
    per_position = 0.5 * ((log_p.exp() - log_q.exp()) * (log_p - log_q)).sum(dim=-1)

    if labels is None:
        keep = torch.ones(per_position.shape, dtype=torch.bool, device=per_position.device)
    else:
        keep = labels != IGNORE_INDEX
    count = int(keep.sum())
    if count == 0:
        return per_position.sum() * 0.0
    return (per_position * keep.to(per_position.dtype)).sum() / count
