from .validation import validate_sample
from .synthetic import generate_synthetic_dataset, generate_sample, FeatureProjector
from .stats import dataset_stats, answer_in_ocr
from .io import DatasetBundle, write_dataset, read_dataset, read_manifest

__all__ = [
    "validate_sample",
    "generate_synthetic_dataset",
    "generate_sample",
    "FeatureProjector",
    "dataset_stats",
    "answer_in_ocr",
    "DatasetBundle",
    "write_dataset",
    "read_dataset",
    "read_manifest",
]
