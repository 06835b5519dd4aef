"""
Boucles de pré-entraînement et de fine-tuning avec entraînement adversarial
"""
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import torch

from app.core.config import settings
from app.core.exceptions import ConfigError, EmptyDatasetError, NumericalError, ShapeError
from app.core.logging import get_logger
from app.inputs.builder import build_finetune_sample, build_pretrain_sample
from app.inputs.collate import MultimodalBatch, collate
from app.inputs.tokenizer import Vocabulary
from app.models.enums import Split, Stage
from app.models.sample import SceneSample
from app.models.training import AdvConfig, ModelConfig, StepMetrics, TrainConfig
from app.modeling.checkpoint import LoadedCheckpoint, build_archive
from app.modeling.losses import LossWeights, compute_stage_loss
from app.modeling.model import SceneTextSeq2Seq
from app.training.adversarial import kl_consistency, perturb_embeddings, select_modality
from app.training.sinks import CheckpointSink, MetricsWriter
from app.utils.helpers import derive_seed, stable_hash

logger = get_logger(__name__)

STAGE_SPLITS = {Stage.PRETRAIN: Split.PRETRAIN, Stage.FINETUNE: Split.FINETUNE}


# ============================================
# OPTIMISEUR
# ============================================

def build_optimizer(model: SceneTextSeq2Seq, cfg: TrainConfig) -> torch.optim.AdamW:
    """AdamW, sans weight decay sur les biais et les LayerNorm"""
    decay, no_decay = [], []
    for param in model.parameters():
        if not param.requires_grad:
            continue
        (no_decay if param.dim() < 2 else decay).append(param)
    return torch.optim.AdamW(
        [
            {"params": decay, "weight_decay": cfg.weight_decay},
            {"params": no_decay, "weight_decay": 0.0},
        ],
        lr=cfg.learning_rate
    )


def build_scheduler(optimizer: torch.optim.Optimizer, cfg: TrainConfig) -> torch.optim.lr_scheduler.LambdaLR:
    """Warmup linéaire puis décroissance linéaire jusqu'à total_steps"""
    warmup, total = cfg.warmup_steps, cfg.total_steps

    def lr_lambda(step: int) -> float:
        if step < warmup:
            return float(step + 1) / float(warmup + 1)
        return max(0.0, float(total - step) / float(max(1, total - warmup)))

    return torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)


def loss_weights(cfg: TrainConfig) -> LossWeights:
    return LossWeights(gen=cfg.lambda_gen, mlm=cfg.lambda_mlm, rpp=cfg.lambda_rpp)


# ============================================
# STEP
# ============================================

def train_step(
        batch: MultimodalBatch,
        model: SceneTextSeq2Seq,
        optimizer: torch.optim.Optimizer,
        scheduler: torch.optim.lr_scheduler.LRScheduler,
        cfg: TrainConfig,
        adv: AdvConfig,
        step: int = 0,
        skipped: int = 0
) -> StepMetrics:
    """
    Un step: L_clean + L_adv + λ_kl·KL_sym, clipping puis mise à jour

    Avec epsilon = 0 la branche adversariale est absente et le step est
    exactement un step standard.

    Raises:
        NumericalError: Perte ou gradient non fini (paramètres inchangés)
    """
    model.train()
    optimizer.zero_grad(set_to_none=True)
    weights = loss_weights(cfg)
    auxiliary = cfg.finetune_auxiliary

    embeddings = model.embed(batch)
    clean = compute_stage_loss(model, batch, embeddings, cfg.stage, weights, auxiliary)
    if not torch.isfinite(clean.total):
        raise NumericalError(f"Perte non finie au step {step + 1}")

    total = clean.total
    adv_value, kl_value, modality = 0.0, 0.0, None
    if adv.enabled:
        modality = select_modality(adv, step)

        def stage_loss(perturbed: torch.Tensor) -> torch.Tensor:
            return compute_stage_loss(model, batch, perturbed, cfg.stage, weights, auxiliary).total

        delta = perturb_embeddings(batch, embeddings, adv, stage_loss, modality)
        perturbed = compute_stage_loss(model, batch, embeddings + delta, cfg.stage, weights, auxiliary)
        kl = kl_consistency(clean.logits, perturbed.logits, batch.decoder_target_ids)
        total = total + perturbed.total + adv.lambda_kl * kl
        adv_value, kl_value = float(perturbed.total.detach()), float(kl.detach())

    if not torch.isfinite(total):
        raise NumericalError(f"Objectif adversarial non fini au step {step + 1}")

    total.backward()
    grad_norm = torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.clip_norm)
    if not torch.isfinite(grad_norm):
        optimizer.zero_grad(set_to_none=True)
        raise NumericalError(f"Norme de gradient non finie au step {step + 1}")

    lr = scheduler.get_last_lr()[0]
    optimizer.step()
    scheduler.step()

    components = clean.component_values()
    return StepMetrics(
        step=step + 1,
        stage=cfg.stage,
        gen=components["gen"],
        mlm=components.get("mlm"),
        rpp=components.get("rpp"),
        adv=adv_value,
        kl=kl_value,
        total=float(total.detach()),
        grad_norm=float(grad_norm),
        skipped=skipped,
        lr=lr,
        modality=modality
    )


# ============================================
# DONNÉES
# ============================================

class BatchSource:
    """
    Batch du step s: fonction pure de (seed, s)

    Les unités (échantillon, scene token cible) sont parcourues selon une
    permutation par époque; chaque ligne a son flux RNG
    (seed, échantillon, cible, époque).
    """

    def __init__(
            self,
            samples: Sequence[SceneSample],
            vocab: Vocabulary,
            cfg: TrainConfig,
            max_dec_len: Optional[int] = None,
            max_text_len: Optional[int] = None
    ):
        self.samples = list(samples)
        self.vocab = vocab
        self.cfg = cfg
        self.max_dec_len = max_dec_len
        self.units = self._units()
        self._permutations: Dict[int, np.ndarray] = {}

        dropped = len(self.samples) - len({i for i, _ in self.units})
        if dropped:
            logger.warning(f"{dropped} échantillons inutilisables pour {cfg.stage.value}")
        if not self.units:
            raise EmptyDatasetError(f"Aucun échantillon utilisable pour {cfg.stage.value}")
        if max_text_len is not None:
            self._check_text_lengths(max_text_len)

    def _units(self) -> List[Tuple[int, Optional[int]]]:
        units = []
        for i, sample in enumerate(self.samples):
            if self.cfg.stage == Stage.PRETRAIN:
                if sample.objects:
                    units.extend((i, t) for t in range(len(sample.scene_tokens)))
            elif sample.question is not None and sample.answers:
                units.append((i, None))
        return units

    def _check_text_lengths(self, max_text_len: int) -> None:
        """Refuser dès le départ les lignes dont le flux texte dépasse max_text_len"""
        too_long: Dict[str, int] = {}
        for unit in self.units:
            length = self.build_row(unit, 0).text_length
            if length > max_text_len:
                image_id = self.samples[unit[0]].image_id
                too_long[image_id] = max(length, too_long.get(image_id, 0))
        if too_long:
            image_ids = sorted(too_long)
            raise ShapeError(
                f"{len(image_ids)} échantillon(s) au texte plus long que max_text_len={max_text_len}: "
                f"{', '.join(image_ids[:5])}",
                extra={"image_ids": image_ids, "lengths": too_long}
            )

    def _permutation(self, epoch: int) -> np.ndarray:
        if epoch not in self._permutations:
            rng = np.random.default_rng([self.cfg.seed, epoch])
            self._permutations[epoch] = rng.permutation(len(self.units))
        return self._permutations[epoch]

    def build_row(self, unit: Tuple[int, Optional[int]], epoch: int):
        index, target = unit
        sample = self.samples[index]
        if target is None:
            return build_finetune_sample(sample, self.vocab, self.max_dec_len)
        rng = np.random.default_rng([self.cfg.seed, stable_hash(sample.image_id), target, epoch])
        return build_pretrain_sample(
            sample, target, self.vocab, rng, self.cfg.mlm_probability, self.max_dec_len
        )

    def batch_for_step(self, step: int) -> MultimodalBatch:
        n_units = len(self.units)
        rows = []
        for position in range(step * self.cfg.batch_size, (step + 1) * self.cfg.batch_size):
            epoch = position // n_units
            unit = self.units[int(self._permutation(epoch)[position % n_units])]
            rows.append(self.build_row(unit, epoch))
        return collate(rows)


def iterate_batches(source: BatchSource, start: int, stop: int, num_workers: int = 0) -> Iterator[MultimodalBatch]:
    """Batches des steps [start, stop); producteur threadé si num_workers > 0"""
    if num_workers <= 0:
        for step in range(start, stop):
            yield source.batch_for_step(step)
        return

    with ThreadPoolExecutor(max_workers=num_workers, thread_name_prefix="batch") as executor:
        pending = deque()
        next_step = start
        while next_step < stop or pending:
            while next_step < stop and len(pending) < 2 * num_workers:
                pending.append(executor.submit(source.batch_for_step, next_step))
                next_step += 1
            yield pending.popleft().result()


# ============================================
# BOUCLE
# ============================================

@dataclass
class TrainingResult:
    model: SceneTextSeq2Seq
    history: List[StepMetrics] = field(default_factory=list)
    step: int = 0
    skipped: int = 0
    optimizer: Optional[torch.optim.Optimizer] = None
    scheduler: Optional[torch.optim.lr_scheduler.LRScheduler] = None


def run_training(
        samples: Sequence[SceneSample],
        vocab: Vocabulary,
        cfg: TrainConfig,
        adv: AdvConfig,
        model_config: Optional[ModelConfig] = None,
        sink: Optional[CheckpointSink] = None,
        metrics_writer: Optional[MetricsWriter] = None,
        resume: Optional[LoadedCheckpoint] = None,
        init_model: Optional[SceneTextSeq2Seq] = None,
        split: Optional[Split] = None
) -> TrainingResult:
    """
    Entraîner jusqu'à cfg.total_steps

    Args:
        samples: Dataset de l'étape
        vocab: Vocabulaire
        cfg: Configuration d'entraînement (stage inclus)
        adv: Configuration adversariale
        model_config: Architecture (ignorée si resume ou init_model)
        sink: Destination des checkpoints
        metrics_writer: Destination des métriques JSONL
        resume: Checkpoint complet dont on reprend l'état
        init_model: Modèle initial (fine-tuning depuis un pré-entraînement)
        split: Partition déclarée du dataset

    Returns:
        TrainingResult

    Raises:
        ConfigError: Partition ou vocabulaire incompatibles
        CheckpointSinkError: Échec d'écriture d'un checkpoint
    """
    if split is not None and split != STAGE_SPLITS[cfg.stage]:
        raise ConfigError(f"Partition '{split.value}' incompatible avec l'étape {cfg.stage.value}")
    if settings.torch_num_threads:
        torch.set_num_threads(settings.torch_num_threads)

    start_step, skipped = 0, 0
    if resume is not None:
        model = resume.model
        start_step, skipped = resume.step, resume.skipped
    elif init_model is not None:
        model = init_model
    else:
        if model_config is None:
            raise ConfigError("model_config requis sans checkpoint de départ")
        torch.manual_seed(cfg.seed)
        model = SceneTextSeq2Seq(model_config)

    if model.config.vocab_size != len(vocab):
        raise ConfigError(f"vocab_size du modèle ({model.config.vocab_size}) ≠ vocabulaire ({len(vocab)})")

    optimizer = build_optimizer(model, cfg)
    scheduler = build_scheduler(optimizer, cfg)
    if resume is not None and resume.optimizer_state is not None:
        optimizer.load_state_dict(resume.optimizer_state)
        if resume.scheduler_state is not None:
            scheduler.load_state_dict(resume.scheduler_state)

    source = BatchSource(samples, vocab, cfg, model.config.max_dec_len, model.config.max_text_len)
    logger.info(
        f"Entraînement {cfg.stage.value}: steps {start_step + 1}..{cfg.total_steps}",
        extra={
            "stage": cfg.stage.value,
            "n_units": len(source.units),
            "parameters": model.parameter_count(),
            "adversarial": adv.enabled,
        }
    )

    history: List[StepMetrics] = []
    batches = iterate_batches(source, start_step, cfg.total_steps, cfg.num_workers)
    for step, batch in enumerate(batches, start=start_step):
        torch.manual_seed(derive_seed(cfg.seed, step))
        try:
            metrics = train_step(batch, model, optimizer, scheduler, cfg, adv, step, skipped)
        except NumericalError as e:
            skipped += 1
            logger.warning(f"Step {step + 1} ignoré: {e.detail}", extra={"step": step + 1, "skipped": skipped})
            continue

        history.append(metrics)
        if metrics_writer is not None:
            metrics_writer.write(metrics)
        if settings.log_every and (step + 1) % settings.log_every == 0:
            logger.info(f"Step {step + 1}/{cfg.total_steps}", extra=metrics.to_record())
        if sink is not None and cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0:
            sink.save(step + 1, build_archive(
                model, vocab, step + 1, skipped, optimizer, scheduler, cfg, adv
            ))

    final_step = max(start_step, cfg.total_steps)
    if sink is not None:
        sink.save(final_step, build_archive(
            model, vocab, final_step, skipped, optimizer, scheduler, cfg, adv
        ), final=True)

    return TrainingResult(
        model=model,
        history=history,
        step=final_step,
        skipped=skipped,
        optimizer=optimizer,
        scheduler=scheduler
    )
