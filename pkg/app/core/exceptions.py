from typing import Any, Optional, Dict


# Codes de sortie du CLI
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class BaseAppException(Exception):
    """
    Exception de base de l'application

    Toutes les exceptions custom doivent hériter de celle-ci
    """

    exit_code: int = EXIT_RUNTIME

    def __init__(
            self,
            detail: str,
            error_code: Optional[str] = None,
            extra: Optional[Dict[str, Any]] = None
    ):
        super().__init__(detail)
        self.detail = detail
        self.error_code = error_code or self.__class__.__name__
        self.extra = extra or {}

    def to_dict(self) -> Dict[str, Any]:
        """Convertir l'exception en dictionnaire"""
        return {
            "error_code": self.error_code,
            "message": self.detail,
            "exit_code": self.exit_code,
            "extra": self.extra
        }


# ============================================
# DATA EXCEPTIONS
# ============================================

class DataError(BaseAppException):
    """Erreur de données"""

    def __init__(self, detail: str = "Erreur de données", **kwargs):
        kwargs.setdefault("error_code", "DATA_ERROR")
        super().__init__(detail=detail, **kwargs)


class SchemaError(DataError):
    """Enregistrement non conforme au schéma JSONL"""

    def __init__(self, detail: str = "Enregistrement non conforme au schéma", **kwargs):
        super().__init__(detail=detail, **kwargs)
        self.error_code = "SCHEMA_ERROR"


class GeometryError(DataError):
    """Boîte englobante dégénérée ou hors de [0,1]"""

    def __init__(self, detail: str = "Boîte englobante invalide", **kwargs):
        super().__init__(detail=detail, **kwargs)
        self.error_code = "GEOMETRY_ERROR"


class DimensionError(DataError):
    """Dimension de feature incohérente"""

    def __init__(self, expected: int, actual: int, **kwargs):
        super().__init__(
            detail=f"Dimension de feature invalide: attendu {expected}, reçu {actual}",
            **kwargs
        )
        self.error_code = "DIMENSION_ERROR"


class EmptyDatasetError(DataError):
    """Dataset vide"""

    def __init__(self, detail: str = "Le dataset est vide", **kwargs):
        super().__init__(detail=detail, **kwargs)
        self.error_code = "EMPTY_DATASET"


class MissingAnnotationError(DataError):
    """Question ou réponses manquantes"""

    def __init__(self, field: str, image_id: str = "", **kwargs):
        super().__init__(
            detail=f"Annotation manquante: {field} (image {image_id or '?'})",
            **kwargs
        )
        self.error_code = "MISSING_ANNOTATION"


# ============================================
# CONFIGURATION EXCEPTIONS
# ============================================

class ConfigError(BaseAppException):
    """Erreur de configuration"""

    def __init__(self, detail: str = "Erreur de configuration", **kwargs):
        kwargs.setdefault("error_code", "CONFIG_ERROR")
        super().__init__(detail=detail, **kwargs)


# ============================================
# INPUT BUILDING EXCEPTIONS
# ============================================

class VocabError(BaseAppException):
    """Vocabulaire incomplet ou invalide"""

    def __init__(self, detail: str = "Vocabulaire invalide", **kwargs):
        kwargs.setdefault("error_code", "VOCAB_ERROR")
        super().__init__(detail=detail, **kwargs)


class HeterogeneityError(BaseAppException):
    """Lignes de batch incompatibles"""

    def __init__(self, detail: str = "Lignes de batch hétérogènes", **kwargs):
        kwargs.setdefault("error_code", "HETEROGENEITY_ERROR")
        super().__init__(detail=detail, **kwargs)


class TargetIndexError(BaseAppException, IndexError):
    """Index de scene token cible hors limites"""

    def __init__(self, index: int, size: int, **kwargs):
        kwargs.setdefault("error_code", "TARGET_INDEX_ERROR")
        super().__init__(
            detail=f"Index cible {index} hors limites (scene tokens: {size})",
            **kwargs
        )


# ============================================
# MODEL EXCEPTIONS
# ============================================

class ShapeError(BaseAppException):
    """Forme de tenseur incompatible"""

    def __init__(self, detail: str = "Forme de tenseur incompatible", **kwargs):
        kwargs.setdefault("error_code", "SHAPE_ERROR")
        super().__init__(detail=detail, **kwargs)


class CheckpointError(BaseAppException):
    """Checkpoint illisible ou incompatible"""

    def __init__(self, detail: str = "Checkpoint invalide", **kwargs):
        kwargs.setdefault("error_code", "CHECKPOINT_ERROR")
        super().__init__(detail=detail, **kwargs)


# ============================================
# TRAINING EXCEPTIONS
# ============================================

class NumericalError(BaseAppException):
    """Valeur non finie pendant l'entraînement"""

    def __init__(self, detail: str = "Valeur non finie détectée", **kwargs):
        kwargs.setdefault("error_code", "NUMERICAL_ERROR")
        super().__init__(detail=detail, **kwargs)


class CheckpointSinkError(BaseAppException, OSError):
    """Échec d'écriture d'un checkpoint"""

    def __init__(self, detail: str = "Impossible d'écrire le checkpoint", **kwargs):
        kwargs.setdefault("error_code", "CHECKPOINT_SINK_ERROR")
        super().__init__(detail=detail, **kwargs)


# ============================================
# EVALUATION EXCEPTIONS
# ============================================

class ArityError(BaseAppException):
    """Nombre de réponses humaines invalide"""

    def __init__(self, expected: int, actual: int, **kwargs):
        kwargs.setdefault("error_code", "ARITY_ERROR")
        super().__init__(
            detail=f"Nombre de réponses invalide: attendu {expected}, reçu {actual}",
            **kwargs
        )


# ============================================
# CLI EXCEPTIONS
# ============================================

class UsageError(BaseAppException):
    """Erreur d'utilisation du CLI"""

    exit_code = EXIT_USAGE

    def __init__(self, detail: str = "Utilisation invalide", **kwargs):
        kwargs.setdefault("error_code", "USAGE_ERROR")
        super().__init__(detail=detail, **kwargs)
