from .base import BaseService
from .dataset_service import DatasetService, dataset_service
from .training_service import TrainingService, training_service, RunConfig
from .evaluation_service import EvaluationService, evaluation_service

__all__ = [
    "BaseService",
    "DatasetService",
    "dataset_service",
    "TrainingService",
    "training_service",
    "RunConfig",
    "EvaluationService",
    "evaluation_service",
]
