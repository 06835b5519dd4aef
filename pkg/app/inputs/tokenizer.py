"""
Vocabulaire construit sur le dataset et tokenisation mot + sous-mots gloutons
"""
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

from app.core.exceptions import VocabError
from app.core.logging import get_logger
from app.models.sample import SceneSample
from app.utils.sanitizers import canonicalize

logger = get_logger(__name__)


PAD = "[PAD]"
EOS = "[EOS]"
MASK = "[MASK]"
SENTINEL = "[SENTINEL]"
UNK = "[UNK]"
SPECIAL_TOKENS = (PAD, EOS, MASK, SENTINEL, UNK)

PAD_ID, EOS_ID, MASK_ID, SENTINEL_ID, UNK_ID = range(len(SPECIAL_TOKENS))
CONTINUATION = "##"


class Vocabulary:
    """Table token ↔ id, les spéciaux occupent les ids 0 à 4"""

    def __init__(self, tokens: Sequence[str]):
        self._tokens: List[str] = list(tokens)
        self._index: Dict[str, int] = {}
        for i, token in enumerate(self._tokens):
            if not token or any(c.isspace() for c in token):
                raise VocabError(f"Token invalide à la ligne {i}: {token!r}")
            if token in self._index:
                raise VocabError(f"Token dupliqué: {token!r}")
            self._index[token] = i
        self._special_ids = frozenset(self._index[t] for t in SPECIAL_TOKENS if t in self._index)
        self._regular_ids = [i for i in range(len(self._tokens)) if i not in self._special_ids]

    # ============================================
    # CONSTRUCTION
    # ============================================

    @classmethod
    def build(cls, samples: Iterable[SceneSample], min_count: int = 1) -> "Vocabulary":
        """
        Construire le vocabulaire à partir de tous les champs texte

        Contient les spéciaux, les mots vus au moins min_count fois (fréquence
        décroissante puis ordre lexicographique), puis chaque caractère seul et
        en continuation ("##c") pour que tout mot reste encodable.
        """
        words: Counter = Counter()
        for sample in samples:
            texts = [r.text for r in sample.objects] + [r.text for r in sample.scene_tokens]
            texts += [t for t in (sample.image_text, sample.question) if t]
            texts += list(sample.answers or ())
            for text in texts:
                words.update(canonicalize(text).split())

        kept = sorted(
            (w for w, c in words.items() if c >= min_count),
            key=lambda w: (-words[w], w)
        )
        chars = sorted({c for w in words for c in w})

        tokens = list(SPECIAL_TOKENS)
        seen = set(tokens)
        for token in kept + chars + [CONTINUATION + c for c in chars]:
            if token not in seen:
                seen.add(token)
                tokens.append(token)

        logger.debug(f"Vocabulaire construit: {len(tokens)} tokens ({len(kept)} mots)")
        return cls(tokens)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        """Charger un fichier vocabulaire (un token par ligne, ligne = id)"""
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").split("\n")
        except OSError as e:
            raise VocabError(f"Vocabulaire illisible {path}: {e}")
        if lines and lines[-1] == "":
            lines.pop()
        if tuple(lines[:len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise VocabError(f"Les tokens spéciaux doivent occuper les ids 0 à 4: {path}")
        return cls(lines)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self._tokens) + "\n", encoding="utf-8")
        return path

    # ============================================
    # ACCÈS
    # ============================================

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    @property
    def tokens(self) -> List[str]:
        return list(self._tokens)

    @property
    def regular_ids(self) -> List[int]:
        """Ids hors tokens spéciaux"""
        return list(self._regular_ids)

    def is_special(self, token_id: int) -> bool:
        return token_id in self._special_ids

    def special_id(self, token: str) -> int:
        """Id d'un token spécial (VocabError s'il manque)"""
        if token not in self._index:
            raise VocabError(f"Token spécial absent du vocabulaire: {token}")
        return self._index[token]

    def token_to_id(self, token: str) -> int:
        return self._index.get(token, self._index.get(UNK, UNK_ID))

    def id_to_token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self._tokens):
            raise VocabError(f"Id hors vocabulaire: {token_id}")
        return self._tokens[token_id]

    # ============================================
    # ENCODAGE
    # ============================================

    def _encode_word(self, word: str) -> List[int]:
        if word in self._index:
            return [self._index[word]]

        pieces = []
        start = 0
        while start < len(word):
            end = len(word)
            piece_id = None
            while end > start:
                piece = word[start:end] if start == 0 else CONTINUATION + word[start:end]
                if piece in self._index:
                    piece_id = self._index[piece]
                    break
                end -= 1
            if piece_id is None:
                return [self.token_to_id(UNK)]
            pieces.append(piece_id)
            start = end
        return pieces

    def encode(self, text: str) -> List[int]:
        """Texte canonicalisé → ids (sans EOS)"""
        ids: List[int] = []
        for word in canonicalize(text).split():
            ids.extend(self._encode_word(word))
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        """Ids → texte; s'arrête au premier EOS et ignore PAD"""
        pad_id = self._index.get(PAD)
        eos_id = self._index.get(EOS)
        words: List[str] = []
        for token_id in ids:
            token_id = int(token_id)
            if token_id == eos_id:
                break
            if token_id == pad_id:
                continue
            token = self.id_to_token(token_id)
            if token.startswith(CONTINUATION) and words:
                words[-1] += token[len(CONTINUATION):]
            else:
                words.append(token)
        return " ".join(words)
