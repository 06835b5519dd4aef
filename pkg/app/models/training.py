"""
Hyperparamètres du modèle, de l'entraînement et de l'adversaire
"""
from typing import Optional, Dict, Any

from pydantic import Field, model_validator

from app.models.base import RunConfigModel
from app.models.enums import Stage, Modality


N_RPP_CLASSES = 11
N_SEGMENTS = 3


class ModelConfig(RunConfigModel):
    """Hyperparamètres de l'encodeur-décodeur jouet"""

    vocab_size: int = Field(..., ge=6, description="Taille du vocabulaire (spéciaux inclus)")
    d_model: int = Field(default=64, ge=1)
    n_layers_enc: int = Field(default=2, ge=1)
    n_layers_dec: int = Field(default=2, ge=1)
    n_heads: int = Field(default=4, ge=1)
    d_ff: int = Field(default=128, ge=1)
    d_feat: int = Field(default=32, ge=1)
    n_rpp_classes: int = Field(default=N_RPP_CLASSES, ge=N_RPP_CLASSES, le=N_RPP_CLASSES)
    rpp_rank: int = Field(default=8, ge=1, description="Rang du scoreur bilinéaire RPP")
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    max_text_len: int = Field(default=64, ge=1)
    max_dec_len: int = Field(default=16, ge=1)
    layer_norm_eps: float = Field(default=1e-6, gt=0.0)

    @model_validator(mode="after")
    def check_heads(self) -> "ModelConfig":
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model ({self.d_model}) doit être divisible par n_heads ({self.n_heads})"
            )
        return self

    def parameter_count(self) -> int:
        """
        Nombre de paramètres entraînables

        Embeddings: V·d (table partagée avec la tête LM/MLM) + positions texte et décodeur
        + 3 segments. Projections de régions: 2·((D_feat+4)·d + d).
        Couche encodeur: 2 LayerNorm, attention (4 linéaires d→d), FFN.
        Couche décodeur: 3 LayerNorm, 2 attentions, FFN. Normes finales: mémoire + décodeur.
        Tête MLM: dense d→d + LayerNorm. Tête RPP: LayerNorm, 2 projections d→C·r,
        terme linéaire scène (avec biais) et objet (sans biais).
        """
        d, ff, c, r = self.d_model, self.d_ff, self.n_rpp_classes, self.rpp_rank
        layer_norm = 2 * d
        attention = 4 * (d * d + d)
        ffn = d * ff + ff + ff * d + d

        embeddings = (
            self.vocab_size * d
            + self.max_text_len * d
            + self.max_dec_len * d
            + N_SEGMENTS * d
        )
        projections = 2 * ((self.d_feat + 4) * d + d)
        encoder = self.n_layers_enc * (2 * layer_norm + attention + ffn)
        decoder = self.n_layers_dec * (3 * layer_norm + 2 * attention + ffn) + 2 * layer_norm
        mlm_head = d * d + d + layer_norm
        rpp_head = layer_norm + 2 * (d * c * r + c * r) + (d * c + c) + d * c
        return embeddings + projections + encoder + decoder + mlm_head + rpp_head


class TrainConfig(RunConfigModel):
    """Hyperparamètres d'entraînement"""

    stage: Stage = Field(default=Stage.PRETRAIN)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    weight_decay: float = Field(default=0.01, ge=0.0)
    warmup_steps: int = Field(default=20, ge=0)
    clip_norm: float = Field(default=1.0, gt=0.0)
    batch_size: int = Field(default=16, ge=1)
    total_steps: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0)
    lambda_gen: float = Field(default=1.0, ge=0.0)
    lambda_mlm: float = Field(default=1.0, ge=0.0)
    lambda_rpp: float = Field(default=1.0, ge=0.0)
    mlm_probability: float = Field(default=0.15, ge=0.0, le=1.0)
    finetune_auxiliary: bool = Field(
        default=False,
        description="Ajouter la perte RPP pendant le fine-tuning"
    )
    checkpoint_every: int = Field(default=100, ge=0, description="0 = checkpoint final seulement")
    num_workers: int = Field(default=0, ge=0, description="Threads de construction des batches")


class AdvConfig(RunConfigModel):
    """Hyperparamètres de l'entraînement adversarial dans l'espace d'embedding"""

    epsilon: float = Field(default=1e-2, ge=0.0, description="Rayon L2 par échantillon (0 = désactivé)")
    alpha: float = Field(default=1e-2, gt=0.0, description="Pas d'ascension")
    k_steps: int = Field(default=1, ge=1)
    lambda_kl: float = Field(default=1.0, ge=0.0)
    target_modality: Modality = Field(default=Modality.CYCLE)

    @property
    def enabled(self) -> bool:
        return self.epsilon > 0.0


class StepMetrics(RunConfigModel):
    """Métriques d'un step (une ligne du JSONL)"""

    step: int
    stage: Stage
    gen: float
    mlm: Optional[float] = None
    rpp: Optional[float] = None
    adv: float = 0.0
    kl: float = 0.0
    total: float
    grad_norm: float = 0.0
    skipped: int = 0
    lr: float = 0.0
    modality: Optional[Modality] = None

    def to_record(self) -> Dict[str, Any]:
        """Ligne JSONL: les composantes absentes de l'étape sont omises"""
        return self.model_dump(mode="json", exclude_none=True)
