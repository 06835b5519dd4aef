from .helpers import timeit, stable_hash, derive_seed
from .sanitizers import TextSanitizer, canonicalize
from .formatters import JsonlFormatter

__all__ = [
    "timeit",
    "stable_hash",
    "derive_seed",
    "TextSanitizer",
    "canonicalize",
    "JsonlFormatter",
]
