"""
Archive de checkpoint: un seul fichier torch

Clés stables:
    format_version, model_config, parameters (nom → tenseur float32),
    shapes (nom → liste), vocab (liste de tokens), step, skipped,
    optimizer, scheduler, train_config, adv_config

Les noms de paramètres sont ceux de state_dict() (ex. "encoder_layers.0.self_attn.query.weight").
"""
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import torch
from pydantic import ValidationError

from app.core.exceptions import CheckpointError, VocabError
from app.core.logging import get_logger
from app.inputs.tokenizer import Vocabulary
from app.models.training import AdvConfig, ModelConfig, TrainConfig
from app.modeling.model import SceneTextSeq2Seq

logger = get_logger(__name__)

FORMAT_VERSION = 1


@dataclass
class LoadedCheckpoint:
    model: SceneTextSeq2Seq
    vocab: Optional[Vocabulary]
    step: int = 0
    skipped: int = 0
    optimizer_state: Optional[Dict[str, Any]] = None
    scheduler_state: Optional[Dict[str, Any]] = None
    train_config: Optional[TrainConfig] = None
    adv_config: Optional[AdvConfig] = None


def build_archive(
        model: SceneTextSeq2Seq,
        vocab: Optional[Vocabulary] = None,
        step: int = 0,
        skipped: int = 0,
        optimizer: Optional[torch.optim.Optimizer] = None,
        scheduler: Optional[Any] = None,
        train_config: Optional[TrainConfig] = None,
        adv_config: Optional[AdvConfig] = None
) -> Dict[str, Any]:
    """Construire le dictionnaire sérialisable d'un checkpoint"""
    parameters = {
        name: tensor.detach().to(device="cpu", dtype=torch.float32).clone()
        for name, tensor in model.state_dict().items()
    }
    return {
        "format_version": FORMAT_VERSION,
        "model_config": model.config.model_dump(mode="json"),
        "parameters": parameters,
        "shapes": {name: list(tensor.shape) for name, tensor in parameters.items()},
        "vocab": vocab.tokens if vocab is not None else None,
        "step": step,
        "skipped": skipped,
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "scheduler": scheduler.state_dict() if scheduler is not None else None,
        "train_config": train_config.model_dump(mode="json") if train_config else None,
        "adv_config": adv_config.model_dump(mode="json") if adv_config else None,
    }


def save_checkpoint(path: Union[str, Path], archive: Dict[str, Any]) -> Path:
    """Écriture atomique (fichier temporaire puis renommage)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    torch.save(archive, tmp_path)
    os.replace(tmp_path, path)
    return path


def load_archive(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint introuvable: {path}")
    try:
        archive = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"Checkpoint illisible {path}: {e}")
    if not isinstance(archive, dict) or archive.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"Format de checkpoint non reconnu: {path}")
    return archive


def load_parameters(model: SceneTextSeq2Seq, archive: Dict[str, Any]) -> None:
    """Copier les paramètres de l'archive dans le modèle (noms et formes identiques)"""
    parameters = archive["parameters"]
    expected = model.state_dict()
    missing = sorted(set(expected) - set(parameters))
    unexpected = sorted(set(parameters) - set(expected))
    if missing or unexpected:
        raise CheckpointError(
            "Paramètres incompatibles",
            extra={"missing": missing[:5], "unexpected": unexpected[:5]}
        )
    for name, tensor in parameters.items():
        if tuple(tensor.shape) != tuple(expected[name].shape):
            raise CheckpointError(
                f"Forme incompatible pour {name}: {tuple(tensor.shape)} ≠ {tuple(expected[name].shape)}"
            )
    model.load_state_dict(parameters)


def load_checkpoint(path: Union[str, Path]) -> LoadedCheckpoint:
    """
    Charger un checkpoint complet

    Raises:
        CheckpointError: Fichier absent, illisible ou incohérent
    """
    archive = load_archive(path)
    try:
        config = ModelConfig.model_validate(archive["model_config"])
        train_config = (
            TrainConfig.model_validate(archive["train_config"]) if archive.get("train_config") else None
        )
        adv_config = (
            AdvConfig.model_validate(archive["adv_config"]) if archive.get("adv_config") else None
        )
        vocab = Vocabulary(archive["vocab"]) if archive.get("vocab") else None
    except (KeyError, ValidationError, VocabError) as e:
        raise CheckpointError(f"Métadonnées de checkpoint invalides: {e}")

    if vocab is not None and len(vocab) != config.vocab_size:
        raise CheckpointError(f"Vocabulaire ({len(vocab)}) ≠ vocab_size ({config.vocab_size})")

    model = SceneTextSeq2Seq(config)
    load_parameters(model, archive)
    logger.info(f"Checkpoint chargé: {path}", extra={"step": archive.get("step", 0)})
    return LoadedCheckpoint(
        model=model,
        vocab=vocab,
        step=int(archive.get("step", 0)),
        skipped=int(archive.get("skipped", 0)),
        optimizer_state=archive.get("optimizer"),
        scheduler_state=archive.get("scheduler"),
        train_config=train_config,
        adv_config=adv_config
    )
