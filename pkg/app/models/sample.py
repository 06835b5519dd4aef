"""
Schéma du dataset: boîtes, régions, échantillons de scène et manifeste
"""
import math
from typing import Optional, Tuple, List, Dict, Any

from pydantic import Field, field_validator, model_validator

from app.core.exceptions import ConfigError
from app.models.base import DomainModel, RunConfigModel
from app.models.enums import Split


class BoundingBox(DomainModel):
    """Boîte alignée sur les axes, coordonnées normalisées (y vers le bas)"""

    x1: float = Field(..., ge=0.0, le=1.0)
    y1: float = Field(..., ge=0.0, le=1.0)
    x2: float = Field(..., ge=0.0, le=1.0)
    y2: float = Field(..., ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_extent(self) -> "BoundingBox":
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"Boîte dégénérée: {self.as_list()}")
        return self

    @classmethod
    def from_list(cls, values: List[float]) -> "BoundingBox":
        x1, y1, x2, y2 = values
        return cls(x1=x1, y1=y1, x2=x2, y2=y2)

    def as_list(self) -> List[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def contains(self, other: "BoundingBox") -> bool:
        """Inclusion (bords inclus) de other dans self"""
        return (
            self.x1 <= other.x1 and self.y1 <= other.y1
            and other.x2 <= self.x2 and other.y2 <= self.y2
        )

    def intersection_area(self, other: "BoundingBox") -> float:
        width = min(self.x2, other.x2) - max(self.x1, other.x1)
        height = min(self.y2, other.y2) - max(self.y1, other.y1)
        if width <= 0.0 or height <= 0.0:
            return 0.0
        return width * height


class Region(DomainModel):
    """Région détectée: label d'objet ou scene text, avec boîte et feature visuelle"""

    text: str = Field(..., min_length=1, description="Label d'objet ou texte OCR")
    box: BoundingBox
    feature: Tuple[float, ...] = Field(..., min_length=1, description="Feature visuelle")

    @field_validator("text")
    @classmethod
    def validate_text(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("Le texte d'une région ne peut pas être vide")
        return v

    @field_validator("feature")
    @classmethod
    def validate_feature(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not all(math.isfinite(x) for x in v):
            raise ValueError("La feature contient des valeurs non finies")
        return v

    @property
    def d_feat(self) -> int:
        return len(self.feature)


class SceneSample(DomainModel):
    """Annotation complète d'une image"""

    image_id: str = Field(..., min_length=1)
    image_text: Optional[str] = None
    objects: Tuple[Region, ...] = ()
    scene_tokens: Tuple[Region, ...] = ()
    question: Optional[str] = None
    answers: Optional[Tuple[str, ...]] = None

    @property
    def d_feat(self) -> Optional[int]:
        regions = self.objects + self.scene_tokens
        return regions[0].d_feat if regions else None

    @property
    def has_qa(self) -> bool:
        return self.question is not None and self.answers is not None

    def reading_order(self) -> List[Region]:
        """Scene tokens triés par (y1, x1)"""
        return sorted(self.scene_tokens, key=lambda r: (r.box.y1, r.box.x1))

    def to_record(self) -> Dict[str, Any]:
        """Sérialiser au format JSONL du dataset"""
        return {
            "image_id": self.image_id,
            "image_text": self.image_text,
            "objects": [
                {"label": r.text, "box": r.box.as_list(), "feature": list(r.feature)}
                for r in self.objects
            ],
            "scene_tokens": [
                {"text": r.text, "box": r.box.as_list(), "feature": list(r.feature)}
                for r in self.scene_tokens
            ],
            "question": self.question,
            "answers": list(self.answers) if self.answers is not None else None,
        }


class DatasetManifest(DomainModel):
    """Manifeste JSON accompagnant un fichier JSONL"""

    n_samples: int = Field(..., ge=1)
    d_feat: int = Field(..., ge=1)
    vocab_path: str
    split: Split


class GeneratorConfig(RunConfigModel):
    """Paramètres du générateur synthétique"""

    d_feat: int = Field(default=32, ge=1, description="Dimension des features visuelles")
    text_embedding_dim: int = Field(default=16, ge=1, description="Dimension du hachage de texte")
    scene_vocabulary: List[str] = Field(
        default_factory=lambda: [
            "stop", "exit", "open", "sale", "pizza", "taxi", "hotel", "bank", "cafe",
            "police", "coca", "cola", "pepsi", "sony", "nike", "adidas", "apple", "delta",
            "metro", "bus", "gate", "park", "market", "street", "avenue", "city", "bakery",
            "pharmacy", "museum", "station", "ticket", "menu", "coffee", "beer", "wine",
            "fresh", "free", "new", "one", "way",
        ],
        description="Mots possibles pour le scene text"
    )
    object_labels: List[str] = Field(
        default_factory=lambda: [
            "sign", "bottle", "car", "shirt", "building", "poster", "book", "phone",
            "screen", "board", "can", "truck",
        ],
        description="Labels d'objets"
    )
    answer_vocabulary: List[str] = Field(
        default_factory=lambda: [
            "yes", "no", "red", "blue", "green", "white", "black", "yellow",
        ],
        description="Réponses hors OCR (disjointes du scene text)"
    )
    objects_per_image: Tuple[int, int] = Field(default=(1, 3))
    tokens_per_image: Tuple[int, int] = Field(default=(1, 4))
    answer_from_ocr_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    question_fraction: float = Field(default=1.0, ge=0.0, le=1.0)
    spatial_question_fraction: float = Field(default=0.14, ge=0.0, le=1.0)
    image_text_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    object_feature_noise: float = Field(default=0.05, ge=0.0)
    box_size: Tuple[float, float] = Field(default=(0.05, 0.3))

    def check(self) -> None:
        """Vérifier la cohérence des paramètres (ConfigError)"""
        if not self.scene_vocabulary or not self.object_labels:
            raise ConfigError("Vocabulaire du générateur vide")
        if self.answer_from_ocr_fraction < 1.0 and not self.answer_vocabulary:
            raise ConfigError("answer_vocabulary vide alors que des réponses hors OCR sont requises")
        for name, (low, high) in (
                ("objects_per_image", self.objects_per_image),
                ("tokens_per_image", self.tokens_per_image),
        ):
            if low < 1 or low > high:
                raise ConfigError(f"Intervalle impossible pour {name}: [{low}, {high}]")
        if self.tokens_per_image[1] > len(set(self.scene_vocabulary)):
            raise ConfigError("tokens_per_image dépasse la taille du vocabulaire de scene text")
        low, high = self.box_size
        if not (0.0 < low <= high <= 1.0):
            raise ConfigError(f"Intervalle impossible pour box_size: [{low}, {high}]")
        scene_words = {w.lower() for w in self.scene_vocabulary}
        if scene_words & {w.lower() for w in self.answer_vocabulary}:
            raise ConfigError("answer_vocabulary doit être disjoint du scene text")
