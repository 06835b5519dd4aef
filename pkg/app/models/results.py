from typing import Optional, List, Dict, Any

from pydantic import Field, model_validator

from app.models.base import DomainModel
from app.models.enums import CandidateSource


class DatasetStats(DomainModel):
    """Statistiques d'un dataset (images, questions, réponses OCR, mots spatiaux)"""

    n_images: int = Field(..., ge=1)
    frac_images_with_text: float = Field(..., ge=0.0, le=1.0)
    n_questions: int = Field(..., ge=0)
    n_answer_in_ocr: int = Field(..., ge=0)
    frac_answer_in_ocr: float = Field(..., ge=0.0, le=1.0)
    frac_spatial_words: float = Field(..., ge=0.0, le=1.0)

    def report_lines(self) -> List[str]:
        """Lignes du rapport texte"""
        return [
            f"images: {self.n_images}",
            f"images_with_text: {100 * self.frac_images_with_text:.1f}%",
            f"questions: {self.n_questions}",
            f"answer_in_ocr: {100 * self.frac_answer_in_ocr:.1f}% ({self.n_answer_in_ocr})",
            f"spatial_words: {100 * self.frac_spatial_words:.1f}%",
        ]


class Candidate(DomainModel):
    """Entrée du pool de candidats"""

    text: str
    source: CandidateSource


class CorrectionResult(DomainModel):
    """Résultat de la correction floue d'une réponse"""

    original: str
    corrected: str
    best_candidate: Optional[str] = None
    score: int = Field(..., ge=0, le=100)
    applied: bool

    @model_validator(mode="after")
    def check_consistency(self) -> "CorrectionResult":
        if self.applied and self.corrected != self.best_candidate:
            raise ValueError("Correction appliquée mais corrected != best_candidate")
        if not self.applied and self.corrected != self.original:
            raise ValueError("Correction non appliquée mais corrected != original")
        return self


class EvalRecord(DomainModel):
    """Résultat d'évaluation d'un échantillon"""

    image_id: str
    question: str
    predicted: str
    corrected: str
    accuracy: float = Field(..., ge=0.0, le=1.0)
    accuracy_raw: float = Field(..., ge=0.0, le=1.0)

    def to_record(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class EvalSummary(DomainModel):
    """Résumé d'évaluation"""

    n: int = Field(..., ge=0)
    acc_raw: float = Field(..., ge=0.0, le=1.0)
    acc_corrected: float = Field(..., ge=0.0, le=1.0)
