from fractions import Fraction
from typing import Sequence

from app.core.config import settings
from app.core.exceptions import ArityError
from app.utils.sanitizers import canonicalize


def vqa_accuracy(prediction: str, human_answers: Sequence[str]) -> float:
    """
    Précision VQA: moyenne sur les 10 sous-ensembles de 9 réponses de
    min(#correspondances / 3, 1)

    Raises:
        ArityError: Nombre de réponses différent de 10
    """
    expected = settings.answers_per_question
    if len(human_answers) != expected:
        raise ArityError(expected=expected, actual=len(human_answers))

    prediction = canonicalize(prediction)
    matches = [canonicalize(a) == prediction for a in human_answers]
    total = sum(matches)
    per_subset = [min(Fraction(total - int(left_out), 3), Fraction(1)) for left_out in matches]
    return float(sum(per_subset) / len(per_subset))
