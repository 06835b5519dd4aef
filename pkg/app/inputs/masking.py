from typing import Iterable, List, Sequence, Tuple

import numpy as np

from app.core.exceptions import VocabError
from app.inputs.tokenizer import MASK, Vocabulary


IGNORE_INDEX = -100
MASK_FRACTION = 0.8
RANDOM_FRACTION = 0.1


def apply_mlm_corruption(
        token_ids: Sequence[int],
        rng: np.random.Generator,
        vocab: Vocabulary,
        probability: float = 0.15,
        exclude: Iterable[int] = ()
) -> Tuple[List[int], List[int]]:
    """
    Corruption MLM 80/10/10

    Chaque token est sélectionné avec la probabilité donnée; un token
    sélectionné devient MASK (80%), un id régulier aléatoire (10%) ou reste
    inchangé (10%). Les labels valent l'id original aux positions
    sélectionnées, IGNORE_INDEX ailleurs.

    Args:
        token_ids: Ids éligibles (ni spéciaux ni padding)
        rng: Générateur numpy (seul source d'aléa)
        vocab: Vocabulaire
        probability: Probabilité de sélection
        exclude: Ids jamais tirés par le remplacement aléatoire (cible du décodeur)

    Returns:
        Tuple (ids corrompus, labels)

    Raises:
        VocabError: MASK absent ou aucun token régulier
    """
    mask_id = vocab.special_id(MASK)
    if len(token_ids) == 0:
        return [], []

    regular_ids = np.asarray(vocab.regular_ids, dtype=np.int64)
    if regular_ids.size == 0:
        raise VocabError("Aucun token régulier pour le remplacement aléatoire")
    excluded = np.fromiter(exclude, dtype=np.int64)
    allowed = regular_ids[~np.isin(regular_ids, excluded)]

    ids = np.asarray(token_ids, dtype=np.int64)
    n = ids.shape[0]
    selected = rng.random(n) < probability
    branch = rng.random(n)
    draws = rng.integers(0, max(allowed.size, 1), size=n)
    # sans candidat autorisé, la branche aléatoire garde le token
    replacements = allowed[draws] if allowed.size else ids

    use_mask = selected & (branch < MASK_FRACTION)
    use_random = selected & (branch >= MASK_FRACTION) & (branch < MASK_FRACTION + RANDOM_FRACTION)

    corrupted = np.where(use_mask, mask_id, np.where(use_random, replacements, ids))
    labels = np.where(selected, ids, IGNORE_INDEX)
    return corrupted.tolist(), labels.tolist()
