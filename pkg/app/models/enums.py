from enum import Enum, IntEnum


class Split(str, Enum):
    """Partition d'un dataset"""
    PRETRAIN = "pretrain"
    FINETUNE = "finetune"
    EVAL = "eval"


class Stage(str, Enum):
    """Étape d'entraînement"""
    PRETRAIN = "PRETRAIN"
    FINETUNE = "FINETUNE"


class Modality(str, Enum):
    """Modalité ciblée par la perturbation adversariale"""
    TEXT = "TEXT"
    OBJECT = "OBJECT"
    SCENE = "SCENE"
    ALL = "ALL"
    CYCLE = "CYCLE"


class Segment(IntEnum):
    """Segments du flux texte de l'encodeur"""
    QUESTION = 0
    OBJ_LABEL = 1
    SCENE_TEXT = 2


class RelationClass(IntEnum):
    """Position relative scene token → objet (encodage stable 0..10)"""
    INSIDE = 0
    CONTAINS = 1
    OVERLAP = 2
    RIGHT = 3
    LOWER_RIGHT = 4
    BELOW = 5
    LOWER_LEFT = 6
    LEFT = 7
    UPPER_LEFT = 8
    ABOVE = 9
    UPPER_RIGHT = 10


class CandidateSource(str, Enum):
    """Origine d'un candidat de correction"""
    TOKEN = "TOKEN"
    NGRAM = "NGRAM"
