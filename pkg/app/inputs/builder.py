"""
Construction des lignes encodeur/décodeur pour le pré-entraînement et le fine-tuning
"""
from collections import Counter
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import MissingAnnotationError, TargetIndexError
from app.inputs.masking import IGNORE_INDEX, apply_mlm_corruption
from app.inputs.relations import rpp_label_matrix
from app.inputs.tokenizer import EOS, SENTINEL, Vocabulary
from app.models.enums import Segment
from app.models.sample import Region, SceneSample
from app.utils.sanitizers import canonicalize


@dataclass
class EncodedSample:
    """Une ligne de MultimodalBatch, non paddée"""

    token_ids: List[int]
    segment_ids: List[int]
    mlm_labels: List[int]
    obj_features: np.ndarray
    obj_boxes: np.ndarray
    scene_features: np.ndarray
    scene_boxes: np.ndarray
    rpp_labels: np.ndarray
    decoder_target_ids: List[int]
    vocab_size: int
    sample_id: str = ""
    target_index: Optional[int] = None

    @property
    def d_feat(self) -> int:
        return int(self.obj_features.shape[1])

    @property
    def text_length(self) -> int:
        return len(self.token_ids)

    @property
    def n_objects(self) -> int:
        return int(self.obj_features.shape[0])

    @property
    def n_scene(self) -> int:
        return int(self.scene_features.shape[0])

    def segment(self, segment: Segment) -> List[int]:
        """Ids du flux texte appartenant à un segment"""
        return [t for t, s in zip(self.token_ids, self.segment_ids) if s == segment]


def _region_arrays(regions: Sequence[Region], d_feat: int) -> Tuple[np.ndarray, np.ndarray]:
    if not regions:
        return np.zeros((0, d_feat), dtype=np.float32), np.zeros((0, 4), dtype=np.float32)
    features = np.asarray([r.feature for r in regions], dtype=np.float32)
    boxes = np.asarray([r.box.as_list() for r in regions], dtype=np.float32)
    return features, boxes


def _target_ids(text: str, vocab: Vocabulary, max_dec_len: Optional[int]) -> List[int]:
    ids = vocab.encode(text)
    if max_dec_len is not None:
        ids = ids[:max(max_dec_len - 1, 0)]
    return ids + [vocab.special_id(EOS)]


class _TextStream:
    """Accumulateur du flux texte (ids + segments)"""

    def __init__(self):
        self.token_ids: List[int] = []
        self.segment_ids: List[int] = []

    def extend(self, ids: Sequence[int], segment: Segment) -> None:
        self.token_ids.extend(ids)
        self.segment_ids.extend([int(segment)] * len(ids))


def majority_answer(answers: Sequence[str]) -> str:
    """Réponse la plus fréquente, égalités départagées par ordre lexicographique"""
    counts = Counter(canonicalize(a) for a in answers)
    return min(counts.items(), key=lambda item: (-item[1], item[0]))[0]


def build_pretrain_sample(
        sample: SceneSample,
        target_index: int,
        vocab: Vocabulary,
        rng: np.random.Generator,
        mlm_probability: float = 0.15,
        max_dec_len: Optional[int] = None
) -> EncodedSample:
    """
    Ligne de pré-entraînement: le texte du scene token cible est remplacé par
    SENTINEL dans le flux encodeur, sa feature et sa boîte restent en entrée,
    et le décodeur doit générer ce texte suivi d'EOS.

    Raises:
        TargetIndexError: target_index hors limites
        MissingAnnotationError: Aucun objet
    """
    if not 0 <= target_index < len(sample.scene_tokens):
        raise TargetIndexError(index=target_index, size=len(sample.scene_tokens))
    if not sample.objects:
        raise MissingAnnotationError(field="objects", image_id=sample.image_id)

    sentinel_id = vocab.special_id(SENTINEL)
    stream = _TextStream()
    if sample.image_text:
        stream.extend(vocab.encode(sample.image_text), Segment.QUESTION)
    for obj in sample.objects:
        stream.extend(vocab.encode(obj.text), Segment.OBJ_LABEL)
    for i, token in enumerate(sample.scene_tokens):
        ids = [sentinel_id] if i == target_index else vocab.encode(token.text)
        stream.extend(ids, Segment.SCENE_TEXT)

    eligible = [i for i, t in enumerate(stream.token_ids) if t != sentinel_id]
    target_text = sample.scene_tokens[target_index].text
    corrupted, labels = apply_mlm_corruption(
        [stream.token_ids[i] for i in eligible], rng, vocab, mlm_probability,
        exclude=vocab.encode(target_text)
    )
    token_ids = list(stream.token_ids)
    mlm_labels = [IGNORE_INDEX] * len(token_ids)
    for position, new_id, label in zip(eligible, corrupted, labels):
        token_ids[position] = new_id
        mlm_labels[position] = label

    d_feat = sample.d_feat
    obj_features, obj_boxes = _region_arrays(sample.objects, d_feat)
    scene_features, scene_boxes = _region_arrays(sample.scene_tokens, d_feat)

    return EncodedSample(
        token_ids=token_ids,
        segment_ids=stream.segment_ids,
        mlm_labels=mlm_labels,
        obj_features=obj_features,
        obj_boxes=obj_boxes,
        scene_features=scene_features,
        scene_boxes=scene_boxes,
        rpp_labels=rpp_label_matrix(
            [r.box for r in sample.scene_tokens], [r.box for r in sample.objects]
        ),
        decoder_target_ids=_target_ids(target_text, vocab, max_dec_len),
        vocab_size=len(vocab),
        sample_id=sample.image_id,
        target_index=target_index,
    )


def build_finetune_sample(
        sample: SceneSample,
        vocab: Vocabulary,
        max_dec_len: Optional[int] = None
) -> EncodedSample:
    """
    Ligne de fine-tuning: [question | labels d'objets | scene text], cible =
    réponse majoritaire + EOS, sans corruption MLM.

    Raises:
        MissingAnnotationError: Question ou réponses absentes
    """
    if sample.question is None:
        raise MissingAnnotationError(field="question", image_id=sample.image_id)
    if not sample.answers:
        raise MissingAnnotationError(field="answers", image_id=sample.image_id)

    stream = _TextStream()
    stream.extend(vocab.encode(sample.question), Segment.QUESTION)
    for obj in sample.objects:
        stream.extend(vocab.encode(obj.text), Segment.OBJ_LABEL)
    for token in sample.scene_tokens:
        stream.extend(vocab.encode(token.text), Segment.SCENE_TEXT)

    d_feat = sample.d_feat or 1
    obj_features, obj_boxes = _region_arrays(sample.objects, d_feat)
    scene_features, scene_boxes = _region_arrays(sample.scene_tokens, d_feat)
    target = _target_ids(majority_answer(sample.answers), vocab, max_dec_len)

    return EncodedSample(
        token_ids=stream.token_ids,
        segment_ids=stream.segment_ids,
        mlm_labels=[IGNORE_INDEX] * len(stream.token_ids),
        obj_features=obj_features,
        obj_boxes=obj_boxes,
        scene_features=scene_features,
        scene_boxes=scene_boxes,
        rpp_labels=rpp_label_matrix(
            [r.box for r in sample.scene_tokens], [r.box for r in sample.objects]
        ),
        decoder_target_ids=target,
        vocab_size=len(vocab),
        sample_id=sample.image_id,
    )
