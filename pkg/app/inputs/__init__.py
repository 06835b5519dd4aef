from .tokenizer import Vocabulary, SPECIAL_TOKENS, PAD_ID, EOS_ID, MASK_ID, SENTINEL_ID, UNK_ID
from .relations import compute_rpp_label, rpp_label_matrix
from .masking import apply_mlm_corruption, IGNORE_INDEX
from .builder import EncodedSample, build_pretrain_sample, build_finetune_sample, majority_answer
from .collate import MultimodalBatch, collate

__all__ = [
    "Vocabulary",
    "SPECIAL_TOKENS",
    "PAD_ID",
    "EOS_ID",
    "MASK_ID",
    "SENTINEL_ID",
    "UNK_ID",
    "compute_rpp_label",
    "rpp_label_matrix",
    "apply_mlm_corruption",
    "IGNORE_INDEX",
    "EncodedSample",
    "build_pretrain_sample",
    "build_finetune_sample",
    "majority_answer",
    "MultimodalBatch",
    "collate",
]
