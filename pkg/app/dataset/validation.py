import math
from numbers import Real
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import DimensionError, GeometryError, SchemaError
from app.models.sample import BoundingBox, Region, SceneSample
from app.utils.sanitizers import canonicalize


REQUIRED_FIELDS = ("image_id", "objects", "scene_tokens")
OPTIONAL_FIELDS = ("image_text", "question", "answers")


def _require_list(value: Any, name: str) -> List[Any]:
    if not isinstance(value, list):
        raise SchemaError(f"'{name}' doit être une liste")
    return value


def _optional_text(value: Any, name: str) -> Optional[str]:
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaError(f"'{name}' doit être une chaîne ou null")
    return canonicalize(value) or None


def parse_box(raw: Any, where: str) -> BoundingBox:
    """Boîte [x1, y1, x2, y2] normalisée et non dégénérée"""
    if not isinstance(raw, list) or len(raw) != 4:
        raise SchemaError(f"{where}: 'box' doit contenir 4 nombres")
    if not all(isinstance(v, Real) and not isinstance(v, bool) for v in raw):
        raise SchemaError(f"{where}: 'box' doit contenir 4 nombres")
    x1, y1, x2, y2 = (float(v) for v in raw)
    if not all(math.isfinite(v) and 0.0 <= v <= 1.0 for v in (x1, y1, x2, y2)):
        raise GeometryError(f"{where}: coordonnées hors de [0,1]: {raw}")
    if not (x1 < x2 and y1 < y2):
        raise GeometryError(f"{where}: boîte dégénérée {raw}")
    return BoundingBox(x1=x1, y1=y1, x2=x2, y2=y2)


def _parse_feature(raw: Any, where: str) -> Tuple[float, ...]:
    if not isinstance(raw, list) or not raw:
        raise SchemaError(f"{where}: 'feature' doit être une liste non vide")
    if not all(isinstance(v, Real) and not isinstance(v, bool) for v in raw):
        raise SchemaError(f"{where}: 'feature' doit contenir des nombres")
    feature = tuple(float(v) for v in raw)
    if not all(math.isfinite(v) for v in feature):
        raise SchemaError(f"{where}: 'feature' contient des valeurs non finies")
    return feature


def _parse_region(raw: Any, text_key: str, where: str) -> Region:
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: un objet JSON est attendu")
    for key in (text_key, "box", "feature"):
        if key not in raw:
            raise SchemaError(f"{where}: champ manquant '{key}'")
    if not isinstance(raw[text_key], str):
        raise SchemaError(f"{where}: '{text_key}' doit être une chaîne")
    text = canonicalize(raw[text_key])
    if not text:
        raise SchemaError(f"{where}: '{text_key}' vide")
    return Region(
        text=text,
        box=parse_box(raw["box"], where),
        feature=_parse_feature(raw["feature"], where)
    )


def validate_sample(raw: Dict[str, Any], d_feat: Optional[int] = None) -> SceneSample:
    """
    Valider un enregistrement JSONL et construire un SceneSample canonique

    Args:
        raw: Enregistrement parsé
        d_feat: Dimension déclarée par le manifeste (sinon déduite de la première région)

    Returns:
        SceneSample dont les textes sont canonicalisés

    Raises:
        SchemaError, GeometryError, DimensionError
    """
    if not isinstance(raw, dict):
        raise SchemaError("Un objet JSON est attendu")

    for key in REQUIRED_FIELDS:
        if key not in raw:
            raise SchemaError(f"Champ manquant: '{key}'")

    image_id = raw["image_id"]
    if not isinstance(image_id, str) or not image_id.strip():
        raise SchemaError("'image_id' doit être une chaîne non vide")

    objects = [
        _parse_region(item, "label", f"{image_id}/objects[{i}]")
        for i, item in enumerate(_require_list(raw["objects"], "objects"))
    ]
    scene_tokens = [
        _parse_region(item, "text", f"{image_id}/scene_tokens[{i}]")
        for i, item in enumerate(_require_list(raw["scene_tokens"], "scene_tokens"))
    ]

    expected = d_feat
    for region in objects + scene_tokens:
        if expected is None:
            expected = region.d_feat
        elif region.d_feat != expected:
            raise DimensionError(expected=expected, actual=region.d_feat, extra={"image_id": image_id})

    answers = raw.get("answers")
    if answers is not None:
        answers = _require_list(answers, "answers")
        if len(answers) != settings.answers_per_question:
            raise SchemaError(
                f"{image_id}: {settings.answers_per_question} réponses attendues, reçu {len(answers)}"
            )
        if not all(isinstance(a, str) for a in answers):
            raise SchemaError(f"{image_id}: les réponses doivent être des chaînes")
        answers = tuple(canonicalize(a) for a in answers)

    try:
        return SceneSample(
            image_id=image_id,
            image_text=_optional_text(raw.get("image_text"), "image_text"),
            objects=tuple(objects),
            scene_tokens=tuple(scene_tokens),
            question=_optional_text(raw.get("question"), "question"),
            answers=answers
        )
    except ValidationError as e:
        raise SchemaError(f"{image_id}: {e.errors()[0]['msg']}")
