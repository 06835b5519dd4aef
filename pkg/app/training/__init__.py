from .adversarial import (
    select_modality,
    modality_mask,
    project_l2,
    initial_delta,
    perturb_embeddings,
    kl_consistency,
)
from .sinks import CheckpointSink, FileCheckpointSink, MetricsWriter
from .trainer import (
    build_optimizer,
    build_scheduler,
    train_step,
    BatchSource,
    iterate_batches,
    TrainingResult,
    run_training,
)

__all__ = [
    "select_modality",
    "modality_mask",
    "project_l2",
    "initial_delta",
    "perturb_embeddings",
    "kl_consistency",
    "CheckpointSink",
    "FileCheckpointSink",
    "MetricsWriter",
    "build_optimizer",
    "build_scheduler",
    "train_step",
    "BatchSource",
    "iterate_batches",
    "TrainingResult",
    "run_training",
]
