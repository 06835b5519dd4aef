import re
import unicodedata
from typing import List, Sequence


_WORD_EDGES = re.compile(r"^[^\w]+|[^\w]+$")


class TextSanitizer:
    """Canonicalisation des textes (réponses, scene text, questions)"""

    @staticmethod
    def canonicalize(text: str) -> str:
        """NFC + minuscules + espaces normalisés"""
        text = unicodedata.normalize("NFC", text)
        return " ".join(text.lower().split())

    @staticmethod
    def words(text: str) -> List[str]:
        """Mots d'un texte canonique, ponctuation de bord retirée"""
        words = []
        for raw in TextSanitizer.canonicalize(text).split():
            word = _WORD_EDGES.sub("", raw)
            if word:
                words.append(word)
        return words

    @staticmethod
    def ngrams(tokens: Sequence[str], min_n: int = 1, max_n: int = 4) -> List[str]:
        """N-grammes contigus joints par un espace, n croissant puis ordre de lecture"""
        result = []
        for n in range(min_n, max_n + 1):
            for start in range(0, len(tokens) - n + 1):
                result.append(" ".join(tokens[start:start + n]))
        return result


canonicalize = TextSanitizer.canonicalize
