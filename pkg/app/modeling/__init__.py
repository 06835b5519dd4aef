from .model import SceneTextSeq2Seq
from .losses import (
    LossWeights,
    StageOutput,
    masked_cross_entropy,
    generation_loss,
    mlm_loss,
    rpp_loss,
    compute_stage_loss,
    total_pretrain_loss,
)
from .checkpoint import LoadedCheckpoint, build_archive, save_checkpoint, load_checkpoint

__all__ = [
    "SceneTextSeq2Seq",
    "LossWeights",
    "StageOutput",
    "masked_cross_entropy",
    "generation_loss",
    "mlm_loss",
    "rpp_loss",
    "compute_stage_loss",
    "total_pretrain_loss",
    "LoadedCheckpoint",
    "build_archive",
    "save_checkpoint",
    "load_checkpoint",
]
