from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import CheckpointError, ConfigError
from app.dataset.io import DatasetBundle
from app.inputs.tokenizer import Vocabulary
from app.models.enums import Stage
from app.models.training import AdvConfig, ModelConfig, TrainConfig
from app.modeling.checkpoint import LoadedCheckpoint, load_checkpoint
from app.services.base import BaseService
from app.services.dataset_service import dataset_service
from app.training.sinks import FileCheckpointSink, MetricsWriter
from app.training.trainer import TrainingResult, run_training
from app.utils.helpers import timeit

RUN_CONFIG_SECTIONS = ("model", "train", "adv")


@dataclass
class RunConfig:
    """Sections d'un fichier de run; model reste brut tant que le dataset n'est pas lu"""
    model: Dict[str, Any]
    train: TrainConfig
    adv: AdvConfig


class TrainingService(BaseService):
    """Service pour le pré-entraînement et le fine-tuning"""

    def load_run_config(self, path: Optional[Union[str, Path]], stage: Stage) -> RunConfig:
        """
        Lire un fichier de run JSON/TOML (tables model, train, adv)

        Raises:
            ConfigError: Table inconnue ou champ invalide
        """
        data = self.read_config_file(path)
        unknown = sorted(set(data) - set(RUN_CONFIG_SECTIONS))
        if unknown:
            raise ConfigError(f"Tables inconnues dans la configuration: {unknown}")
        for section in RUN_CONFIG_SECTIONS:
            if not isinstance(data.get(section, {}), dict):
                raise ConfigError(f"La section '{section}' doit être une table")

        try:
            train = TrainConfig.model_validate({**data.get("train", {}), "stage": stage})
            adv = AdvConfig.model_validate(data.get("adv", {}))
        except ValidationError as e:
            raise ConfigError(f"Configuration de run invalide: {e}")
        return RunConfig(model=dict(data.get("model", {})), train=train, adv=adv)

    def resolve_model_config(self, raw: Dict[str, Any], vocab: Vocabulary, d_feat: Optional[int]) -> ModelConfig:
        """
        Compléter vocab_size et d_feat depuis le dataset

        Raises:
            ConfigError: Valeur explicite incompatible avec le dataset
        """
        resolved = dict(raw)
        for key, actual in (("vocab_size", len(vocab)), ("d_feat", d_feat)):
            if actual is None:
                continue
            if key in resolved and resolved[key] != actual:
                raise ConfigError(f"{key}={resolved[key]} incompatible avec le dataset ({actual})")
            resolved[key] = actual
        try:
            return ModelConfig.model_validate(resolved)
        except ValidationError as e:
            raise ConfigError(f"Configuration du modèle invalide: {e}")

    @staticmethod
    def _checkpoint_vocab(checkpoint: LoadedCheckpoint, path: Union[str, Path]) -> Vocabulary:
        if checkpoint.vocab is None:
            raise CheckpointError(f"Le checkpoint {path} ne contient pas de vocabulaire")
        return checkpoint.vocab

    @timeit
    def train(
            self,
            stage: Stage,
            data_path: Union[str, Path],
            out_dir: Union[str, Path],
            config_path: Optional[Union[str, Path]] = None,
            init_path: Optional[Union[str, Path]] = None,
            resume_path: Optional[Union[str, Path]] = None,
            metrics_path: Optional[Union[str, Path]] = None
    ) -> TrainingResult:
        """
        Lancer une étape d'entraînement

        Args:
            stage: PRETRAIN ou FINETUNE
            data_path: Dataset JSONL de l'étape
            out_dir: Répertoire des checkpoints
            config_path: Fichier de run (tables model, train, adv)
            init_path: Checkpoint d'initialisation (fine-tuning après pré-entraînement)
            resume_path: Checkpoint dont on reprend l'état complet
            metrics_path: JSONL des métriques (défaut: out_dir/settings.metrics_file)

        Returns:
            TrainingResult
        """
        if init_path is not None and resume_path is not None:
            raise ConfigError("--init et --resume sont exclusifs")

        run = self.load_run_config(config_path, stage)
        bundle: DatasetBundle = dataset_service.load(data_path)

        resume = init = None
        if resume_path is not None:
            resume = load_checkpoint(resume_path)
            vocab = self._checkpoint_vocab(resume, resume_path)
        elif init_path is not None:
            init = load_checkpoint(init_path)
            vocab = self._checkpoint_vocab(init, init_path)
        else:
            vocab = bundle.vocab or Vocabulary.build(bundle.samples)

        if bundle.vocab is not None and bundle.vocab != vocab:
            self.logger.warning("Le vocabulaire du dataset diffère de celui du checkpoint")

        if resume is not None or init is not None:
            model_config = (resume or init).model.config
            if bundle.d_feat is not None and bundle.d_feat != model_config.d_feat:
                raise ConfigError(f"d_feat du dataset ({bundle.d_feat}) ≠ modèle ({model_config.d_feat})")
        else:
            model_config = self.resolve_model_config(run.model, vocab, bundle.d_feat)

        out_dir = Path(out_dir)
        metrics_path = Path(metrics_path) if metrics_path else out_dir / settings.metrics_file
        self.logger.info(
            f"Configuration résolue ({stage.value})",
            extra={"config": {
                "model": model_config.model_dump(mode="json"),
                "train": run.train.model_dump(mode="json"),
                "adv": run.adv.model_dump(mode="json"),
                "data": str(data_path),
                "out_dir": str(out_dir),
                "metrics": str(metrics_path),
            }}
        )

        result = run_training(
            bundle.samples,
            vocab,
            run.train,
            run.adv,
            model_config=model_config,
            sink=FileCheckpointSink(out_dir),
            metrics_writer=MetricsWriter(metrics_path),
            resume=resume,
            init_model=init.model if init is not None else None,
            split=bundle.manifest.split if bundle.manifest is not None else None
        )
        self.logger.info(
            f"Entraînement terminé: {len(result.history)} steps",
            extra={"step": result.step, "skipped": result.skipped}
        )
        return result


training_service = TrainingService()
