"""
Générateur synthétique déterministe de SceneSamples au niveau des features
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import ConfigError
from app.core.logging import get_logger
from app.inputs.relations import compute_rpp_label
from app.models.enums import RelationClass
from app.models.sample import BoundingBox, GeneratorConfig, Region, SceneSample
from app.utils.helpers import stable_hash
from app.utils.sanitizers import canonicalize

logger = get_logger(__name__)


PROJECTION_STREAM = 0x5EED

# Position du scene token par rapport à l'objet (inverse de la classe RPP)
RELATION_PHRASES = {
    RelationClass.INSIDE: "on top of",
    RelationClass.CONTAINS: "over",
    RelationClass.OVERLAP: "near",
    RelationClass.RIGHT: "left of",
    RelationClass.LOWER_RIGHT: "to the upper left of",
    RelationClass.BELOW: "above",
    RelationClass.LOWER_LEFT: "to the upper right of",
    RelationClass.LEFT: "right of",
    RelationClass.UPPER_LEFT: "to the bottom right of",
    RelationClass.ABOVE: "below",
    RelationClass.UPPER_RIGHT: "to the bottom left of",
}

FIRST_WORD_QUESTION = "what is the first word written"


class FeatureProjector:
    """Projection aléatoire fixe (par dataset) de (embedding de texte ⊕ boîte)"""

    def __init__(self, seed: int, cfg: GeneratorConfig):
        self.embedding_dim = cfg.text_embedding_dim
        rng = np.random.default_rng([seed, PROJECTION_STREAM])
        in_dim = self.embedding_dim + 4
        self.matrix = rng.standard_normal((in_dim, cfg.d_feat)) / np.sqrt(in_dim)

    def text_embedding(self, text: str) -> np.ndarray:
        """Embedding pseudo-aléatoire stable d'un texte"""
        return np.random.default_rng(stable_hash(text)).standard_normal(self.embedding_dim)

    def __call__(self, text: str, box: BoundingBox) -> np.ndarray:
        inputs = np.concatenate([self.text_embedding(text), np.asarray(box.as_list())])
        return inputs @ self.matrix


def _random_box(rng: np.random.Generator, size_range: Tuple[float, float]) -> BoundingBox:
    low, high = size_range
    width, height = rng.uniform(low, high, size=2)
    x1 = rng.uniform(0.0, 1.0 - width)
    y1 = rng.uniform(0.0, 1.0 - height)
    coords = [round(float(v), 4) for v in (x1, y1, x1 + width, y1 + height)]
    coords = [min(max(v, 0.0), 1.0) for v in coords]
    return BoundingBox.from_list(coords)


def _feature_tuple(vector: np.ndarray) -> Tuple[float, ...]:
    return tuple(round(float(v), 6) for v in vector)


def _draw_count(rng: np.random.Generator, bounds: Tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


def _make_question(
        rng: np.random.Generator,
        objects: Sequence[Region],
        scene_tokens: Sequence[Region],
        reading_order: Sequence[Region],
        cfg: GeneratorConfig,
        answer_vocabulary: Sequence[str]
) -> Tuple[str, str]:
    from_ocr = rng.random() < cfg.answer_from_ocr_fraction
    spatial = rng.random() < cfg.spatial_question_fraction
    obj = objects[int(rng.integers(len(objects)))]

    if from_ocr:
        if spatial:
            token = scene_tokens[int(rng.integers(len(scene_tokens)))]
            phrase = RELATION_PHRASES[compute_rpp_label(token.box, obj.box)]
            return f"what is written {phrase} the {obj.text}", token.text
        return FIRST_WORD_QUESTION, reading_order[0].text

    answer = answer_vocabulary[int(rng.integers(len(answer_vocabulary)))]
    if spatial:
        return f"what color is the {obj.text} near the text", answer
    return f"what color is the {obj.text}", answer


def generate_sample(
        seed: int,
        index: int,
        cfg: GeneratorConfig,
        projector: Optional[FeatureProjector] = None
) -> SceneSample:
    """Générer l'échantillon d'index donné (flux RNG propre à (seed, index))"""
    projector = projector or FeatureProjector(seed, cfg)
    rng = np.random.default_rng([seed, index])

    scene_vocabulary = sorted({canonicalize(w) for w in cfg.scene_vocabulary})
    object_labels = [canonicalize(w) for w in cfg.object_labels]
    answer_vocabulary = [canonicalize(w) for w in cfg.answer_vocabulary]

    objects = []
    for _ in range(_draw_count(rng, cfg.objects_per_image)):
        label = object_labels[int(rng.integers(len(object_labels)))]
        box = _random_box(rng, cfg.box_size)
        noise = rng.normal(0.0, cfg.object_feature_noise, size=cfg.d_feat)
        objects.append(Region(text=label, box=box, feature=_feature_tuple(projector(label, box) + noise)))

    n_tokens = _draw_count(rng, cfg.tokens_per_image)
    texts = rng.choice(len(scene_vocabulary), size=n_tokens, replace=False)
    scene_tokens = []
    for text_index in texts:
        text = scene_vocabulary[int(text_index)]
        box = _random_box(rng, cfg.box_size)
        scene_tokens.append(Region(text=text, box=box, feature=_feature_tuple(projector(text, box))))

    image_text = None
    if rng.random() < cfg.image_text_fraction:
        image_text = f"a {objects[0].text} with some writing"

    question, answers = None, None
    if rng.random() < cfg.question_fraction:
        reading_order = sorted(scene_tokens, key=lambda r: (r.box.y1, r.box.x1))
        question, answer = _make_question(
            rng, objects, scene_tokens, reading_order, cfg, answer_vocabulary
        )
        answers = (answer,) * settings.answers_per_question

    return SceneSample(
        image_id=f"synth-{seed}-{index:06d}",
        image_text=image_text,
        objects=tuple(objects),
        scene_tokens=tuple(scene_tokens),
        question=question,
        answers=answers
    )


def generate_synthetic_dataset(
        seed: int,
        n: int,
        cfg: Optional[GeneratorConfig] = None
) -> List[SceneSample]:
    """
    Générer n échantillons synthétiques

    Fonction pure de (seed, n, cfg): chaque échantillon a son propre flux
    RNG, la projection des features ne dépend que de seed.

    Raises:
        ConfigError: Vocabulaire vide, intervalles impossibles, n < 1
    """
    cfg = cfg or GeneratorConfig()
    if n < 1:
        raise ConfigError(f"n doit être ≥ 1 (reçu {n})")
    cfg.check()

    projector = FeatureProjector(seed, cfg)
    samples = [generate_sample(seed, index, cfg, projector) for index in range(n)]
    logger.info(
        f"{n} échantillons synthétiques générés",
        extra={"seed": seed, "n_samples": n, "d_feat": cfg.d_feat}
    )
    return samples
