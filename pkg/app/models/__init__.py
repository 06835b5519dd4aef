from .enums import Split, Stage, Modality, Segment, RelationClass, CandidateSource
from .sample import BoundingBox, Region, SceneSample, DatasetManifest, GeneratorConfig
from .training import ModelConfig, TrainConfig, AdvConfig, StepMetrics
from .results import DatasetStats, Candidate, CorrectionResult, EvalRecord, EvalSummary

__all__ = [
    "Split",
    "Stage",
    "Modality",
    "Segment",
    "RelationClass",
    "CandidateSource",
    "BoundingBox",
    "Region",
    "SceneSample",
    "DatasetManifest",
    "GeneratorConfig",
    "ModelConfig",
    "TrainConfig",
    "AdvConfig",
    "StepMetrics",
    "DatasetStats",
    "Candidate",
    "CorrectionResult",
    "EvalRecord",
    "EvalSummary",
]
