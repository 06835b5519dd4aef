from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import torch
import torch.nn.functional as F

from app.core.exceptions import ShapeError
from app.inputs.collate import MultimodalBatch
from app.inputs.masking import IGNORE_INDEX
from app.models.enums import Stage
from app.modeling.model import SceneTextSeq2Seq


@dataclass(frozen=True)
class LossWeights:
    gen: float = 1.0
    mlm: float = 1.0
    rpp: float = 1.0


@dataclass
class StageOutput:
    """Perte d'étape, composantes et logits génératifs (pour la régularisation KL)"""

    total: torch.Tensor
    components: Dict[str, torch.Tensor] = field(default_factory=dict)
    logits: Optional[torch.Tensor] = None

    def component_values(self) -> Dict[str, float]:
        return {name: float(value.detach()) for name, value in self.components.items()}


def masked_cross_entropy(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Moyenne de l'entropie croisée sur les positions non ignorées (0 si aucune)"""
    if logits.shape[:-1] != labels.shape:
        raise ShapeError(f"Logits {tuple(logits.shape)} incompatibles avec labels {tuple(labels.shape)}")
    flat_logits = logits.reshape(-1, logits.shape[-1])
    flat_labels = labels.reshape(-1)
    count = int((flat_labels != IGNORE_INDEX).sum())
    if count == 0:
        return flat_logits.sum() * 0.0
    return F.cross_entropy(flat_logits, flat_labels, ignore_index=IGNORE_INDEX, reduction="sum") / count


def generation_loss(logits: torch.Tensor, decoder_target_ids: torch.Tensor) -> torch.Tensor:
    return masked_cross_entropy(logits, decoder_target_ids)


def mlm_loss(encoder_states: torch.Tensor, mlm_labels: torch.Tensor, model: SceneTextSeq2Seq) -> torch.Tensor:
    return masked_cross_entropy(model.mlm_logits(encoder_states, mlm_labels.shape[1]), mlm_labels)


def rpp_loss(encoder_states: torch.Tensor, rpp_labels: torch.Tensor, model: SceneTextSeq2Seq) -> torch.Tensor:
    if rpp_labels.dim() != 3:
        raise ShapeError(f"rpp_labels doit être (B, N_st, N_obj), reçu {tuple(rpp_labels.shape)}")
    _, n_scene, n_objects = rpp_labels.shape
    return masked_cross_entropy(model.rpp_logits(encoder_states, n_scene, n_objects), rpp_labels)


def compute_stage_loss(
        model: SceneTextSeq2Seq,
        batch: MultimodalBatch,
        embeddings: torch.Tensor,
        stage: Stage,
        weights: LossWeights = LossWeights(),
        auxiliary: bool = False
) -> StageOutput:
    """
    Perte de l'étape à partir d'embeddings (propres ou perturbés)

    PRETRAIN: λ_gen·gen + λ_mlm·mlm + λ_rpp·rpp
    FINETUNE: λ_gen·gen (+ λ_rpp·rpp si auxiliary)
    """
    encoder_states = model.encode(batch, embeddings)
    logits = model.decode_logits(encoder_states, batch.decoder_input_ids(), batch.attention_mask)

    components = {"gen": generation_loss(logits, batch.decoder_target_ids)}
    total = weights.gen * components["gen"]
    if stage == Stage.PRETRAIN:
        components["mlm"] = mlm_loss(encoder_states, batch.mlm_labels, model)
        total = total + weights.mlm * components["mlm"]
    if stage == Stage.PRETRAIN or auxiliary:
        components["rpp"] = rpp_loss(encoder_states, batch.rpp_labels, model)
        total = total + weights.rpp * components["rpp"]
    return StageOutput(total=total, components=components, logits=logits)


def total_pretrain_loss(
        batch: MultimodalBatch,
        model: SceneTextSeq2Seq,
        weights: LossWeights = LossWeights()
) -> Tuple[torch.Tensor, Dict[str, float]]:
    """λ_gen·generation_loss + λ_mlm·mlm_loss + λ_rpp·rpp_loss, avec composantes"""
    output = compute_stage_loss(model, batch, model.embed(batch), Stage.PRETRAIN, weights)
    return output.total, output.component_values()
