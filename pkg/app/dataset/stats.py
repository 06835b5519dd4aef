from typing import Iterable, Optional, Sequence, Set

from app.core.config import settings
from app.core.exceptions import EmptyDatasetError
from app.models.results import DatasetStats
from app.models.sample import SceneSample
from app.utils.sanitizers import TextSanitizer, canonicalize


def ocr_answer_pool(sample: SceneSample, max_n: Optional[int] = None) -> Set[str]:
    """Textes de scene tokens et n-grammes contigus (ordre de lecture, n ≤ max_n)"""
    texts = [canonicalize(r.text) for r in sample.reading_order()]
    return set(TextSanitizer.ngrams(texts, 1, max_n or settings.max_ngram))


def answer_in_ocr(sample: SceneSample, max_n: Optional[int] = None) -> bool:
    """Au moins une réponse humaine figure dans le pool OCR"""
    if not sample.answers or not sample.scene_tokens:
        return False
    pool = ocr_answer_pool(sample, max_n)
    return any(canonicalize(a) in pool for a in sample.answers)


def has_spatial_word(question: str, spatial_words: Iterable[str]) -> bool:
    return not set(TextSanitizer.words(question)).isdisjoint(spatial_words)


def dataset_stats(
        samples: Sequence[SceneSample],
        spatial_words: Optional[Iterable[str]] = None,
        max_n: Optional[int] = None
) -> DatasetStats:
    """
    Statistiques du dataset

    Args:
        samples: Échantillons validés
        spatial_words: Liste de mots spatiaux (défaut: settings.spatial_words)
        max_n: Longueur maximale des n-grammes OCR (défaut: settings.max_ngram)

    Returns:
        DatasetStats

    Raises:
        EmptyDatasetError: Aucun échantillon
    """
    if not samples:
        raise EmptyDatasetError()

    words = {w.lower() for w in (spatial_words if spatial_words is not None else settings.spatial_words)}
    questions = [s for s in samples if s.question is not None]
    n_questions = len(questions)
    n_with_text = sum(1 for s in samples if s.scene_tokens)
    n_in_ocr = sum(1 for s in questions if answer_in_ocr(s, max_n))
    n_spatial = sum(1 for s in questions if has_spatial_word(s.question, words))

    return DatasetStats(
        n_images=len(samples),
        frac_images_with_text=n_with_text / len(samples),
        n_questions=n_questions,
        n_answer_in_ocr=n_in_ocr,
        frac_answer_in_ocr=n_in_ocr / n_questions if n_questions else 0.0,
        frac_spatial_words=n_spatial / n_questions if n_questions else 0.0
    )
