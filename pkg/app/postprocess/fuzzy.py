"""
Correction floue des réponses générées contre le pool de candidats OCR
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Iterable, List, Optional, Sequence, Union

from rapidfuzz.distance import Levenshtein

from app.core.config import settings
from app.core.exceptions import ConfigError
from app.models.enums import CandidateSource
from app.models.results import Candidate, CorrectionResult
from app.models.sample import Region
from app.utils.sanitizers import TextSanitizer, canonicalize


def levenshtein(a: str, b: str) -> int:
    """Distance d'édition (insertions, suppressions, substitutions) après canonicalisation"""
    return Levenshtein.distance(canonicalize(a), canonicalize(b))


def similarity(a: str, b: str) -> int:
    """
    Score 0-100: round_half_up(100 · (1 − d / max(|a|, |b|)))

    ("", "") vaut 100; tout couple distinct est plafonné à 99.
    """
    a, b = canonicalize(a), canonicalize(b)
    longest = max(len(a), len(b))
    if longest == 0:
        return 100
    distance = Levenshtein.distance(a, b)
    score = floor(Fraction(100 * (longest - distance), longest) + Fraction(1, 2))
    return min(score, 99) if distance > 0 else score


@dataclass
class CandidatePool:
    """Candidats d'une image, canoniques et sans doublon (première occurrence gardée)"""

    entries: List[Candidate] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, text: str) -> bool:
        return canonicalize(text) in self.texts

    @property
    def texts(self) -> List[str]:
        return [c.text for c in self.entries]

    @classmethod
    def from_texts(cls, tokens: Sequence[str], max_ngram: Optional[int] = None) -> "CandidatePool":
        """Pool à partir de textes déjà en ordre de lecture"""
        max_ngram = max_ngram or settings.max_ngram
        if max_ngram < 1:
            raise ConfigError(f"max_ngram doit être ≥ 1 (reçu {max_ngram})")
        texts = [canonicalize(t) for t in tokens if canonicalize(t)]

        seen = set()
        entries = []
        sources = [(CandidateSource.TOKEN, texts)]
        sources.append((CandidateSource.NGRAM, TextSanitizer.ngrams(texts, 2, max_ngram)))
        for source, candidates in sources:
            for text in candidates:
                if text not in seen:
                    seen.add(text)
                    entries.append(Candidate(text=text, source=source))
        return cls(entries=entries)

    @classmethod
    def from_regions(cls, regions: Iterable[Region], max_ngram: Optional[int] = None) -> "CandidatePool":
        """Pool à partir de scene tokens, triés par (y1, x1)"""
        ordered = sorted(regions, key=lambda r: (r.box.y1, r.box.x1))
        return cls.from_texts([r.text for r in ordered], max_ngram)


def build_candidate_pool(
        scene_tokens: Sequence[Union[str, Region]],
        max_ngram: Optional[int] = None
) -> CandidatePool:
    """Pool depuis des Regions (ordre de lecture recalculé) ou des textes (ordre donné)"""
    if scene_tokens and all(isinstance(t, Region) for t in scene_tokens):
        return CandidatePool.from_regions(scene_tokens, max_ngram)
    return CandidatePool.from_texts([str(t) for t in scene_tokens], max_ngram)


def correct_answer(
        answer: str,
        pool: CandidatePool,
        threshold: Optional[int] = None
) -> CorrectionResult:
    """
    Remplacer la réponse par le candidat le plus proche si son score ≥ threshold

    Meilleur candidat: score max, puis le plus court, puis ordre
    lexicographique. Une réponse déjà présente dans le pool est conservée
    (applied=False, score=100). Pool vide: réponse inchangée.
    """
    threshold = settings.correction_threshold if threshold is None else threshold
    if not 0 <= threshold <= 100:
        raise ConfigError(f"threshold doit être dans [0, 100] (reçu {threshold})")

    original = canonicalize(answer)
    if not pool.entries:
        return CorrectionResult(original=original, corrected=original, score=0, applied=False)
    if original in pool.texts:
        return CorrectionResult(
            original=original, corrected=original, best_candidate=original, score=100, applied=False
        )

    scored = [(similarity(original, c.text), c.text) for c in pool.entries]
    score, best = min(scored, key=lambda item: (-item[0], len(item[1]), item[1]))
    applied = score >= threshold
    return CorrectionResult(
        original=original,
        corrected=best if applied else original,
        best_candidate=best,
        score=score,
        applied=applied
    )
