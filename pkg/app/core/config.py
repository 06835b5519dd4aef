from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator
from typing import List, Optional, Dict, Any, Literal
from functools import lru_cache
from pathlib import Path
import json


DEFAULT_SPATIAL_WORDS = [
    "left", "right", "top", "bottom", "above", "below", "under", "over",
    "behind", "front", "next", "near", "between", "corner",
]


class Settings(BaseSettings):
    """Configuration centralisée complète de l'application"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        validate_default=True
    )

    # ============================================
    # APPLICATION CORE
    # ============================================
    app_name: str = Field(
        default="scene-text-vqa",
        description="Nom de l'application"
    )
    app_version: str = Field(
        default="1.0.0",
        description="Version de l'application"
    )
    app_description: str = Field(
        default="Pré-entraînement multimodal et correction floue pour TextVQA",
        description="Description de l'application"
    )
    app_debug: bool = Field(
        default=False,
        description="Mode debug"
    )

    # ============================================
    # LOGGING CONFIGURATION
    # ============================================
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO",
        description="Niveau de log"
    )
    log_format: Literal["json", "text", "color"] = Field(
        default="json",
        description="Format des logs"
    )
    log_file: str = Field(
        default="logs/app.log",
        description="Fichier de log"
    )
    log_max_bytes: int = Field(
        default=50_000_000,
        ge=1_000,
        description="Taille max d'un fichier de log avant rotation"
    )
    log_backup_count: int = Field(
        default=5,
        ge=0,
        description="Nombre de fichiers de log conservés"
    )
    log_console: bool = Field(
        default=True,
        description="Logger dans la console (stderr)"
    )
    log_file_enabled: bool = Field(
        default=False,
        description="Logger dans un fichier"
    )

    # ============================================
    # DATA
    # ============================================
    spatial_words: List[str] = Field(
        default_factory=lambda: list(DEFAULT_SPATIAL_WORDS),
        description="Mots spatiaux comptés par les statistiques du dataset"
    )
    answers_per_question: int = Field(
        default=10,
        ge=1,
        description="Nombre de réponses humaines par question (convention TextVQA)"
    )
    max_ngram: int = Field(
        default=4,
        ge=1,
        le=8,
        description="Longueur max des n-grammes de scene text"
    )

    # ============================================
    # TRAINING RUNTIME
    # ============================================
    checkpoint_dir: Path = Field(
        default=Path("checkpoints"),
        description="Répertoire des checkpoints"
    )
    metrics_file: Path = Field(
        default=Path("metrics.jsonl"),
        description="Fichier JSONL des métriques par step"
    )
    checkpoint_save_retries: int = Field(
        default=3,
        ge=1,
        le=10,
        description="Tentatives max d'écriture d'un checkpoint"
    )
    torch_num_threads: Optional[int] = Field(
        default=None,
        ge=1,
        description="Nombre de threads torch (None = défaut torch)"
    )
    log_every: int = Field(
        default=50,
        ge=1,
        description="Fréquence des logs d'entraînement (steps)"
    )

    # ============================================
    # POST-PROCESSING
    # ============================================
    correction_threshold: int = Field(
        default=80,
        ge=0,
        le=100,
        description="Seuil de similarité pour appliquer une correction"
    )
    decode_max_len: int = Field(
        default=8,
        ge=1,
        description="Longueur max du décodage glouton en évaluation"
    )
    eval_batch_size: int = Field(
        default=32,
        ge=1,
        description="Taille de batch en évaluation"
    )

    # ============================================
    # VALIDATORS
    # ============================================
    @field_validator("spatial_words", mode="before")
    @classmethod
    def parse_spatial_words(cls, v):
        """Parser la liste des mots spatiaux depuis différents formats"""
        if isinstance(v, str):
            try:
                v = json.loads(v)
            except json.JSONDecodeError:
                v = [w.strip() for w in v.split(",") if w.strip()]
        return [w.lower() for w in (v or DEFAULT_SPATIAL_WORDS)]

    # ============================================
    # EXPORT
    # ============================================
    def get_config_dict(self) -> Dict[str, Any]:
        """Obtenir la configuration en dictionnaire sérialisable"""
        return self.model_dump(mode="json")


@lru_cache()
def get_settings() -> Settings:
    """Récupérer les settings (cached)"""
    return Settings()


# Instance globale
settings = get_settings()
