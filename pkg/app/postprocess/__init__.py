from .fuzzy import levenshtein, similarity, CandidatePool, build_candidate_pool, correct_answer

__all__ = [
    "levenshtein",
    "similarity",
    "CandidatePool",
    "build_candidate_pool",
    "correct_answer",
]
