"""
Fichiers dataset: JSONL + manifeste JSON + vocabulaire, en fichiers voisins
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

from pydantic import ValidationError

from app.core.exceptions import DataError, EmptyDatasetError, SchemaError
from app.core.logging import get_logger
from app.dataset.validation import validate_sample
from app.inputs.tokenizer import Vocabulary
from app.models.enums import Split
from app.models.sample import DatasetManifest, SceneSample
from app.utils.formatters import JsonlFormatter

logger = get_logger(__name__)


@dataclass
class DatasetBundle:
    """Échantillons chargés avec leur manifeste et vocabulaire éventuels"""

    samples: List[SceneSample]
    manifest: Optional[DatasetManifest] = None
    vocab: Optional[Vocabulary] = None

    @property
    def d_feat(self) -> Optional[int]:
        if self.manifest is not None:
            return self.manifest.d_feat
        for sample in self.samples:
            if sample.d_feat is not None:
                return sample.d_feat
        return None


def manifest_path_for(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.manifest.json")


def vocab_path_for(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.vocab.txt")


def write_dataset(
        path: Union[str, Path],
        samples: Sequence[SceneSample],
        split: Split,
        vocab: Optional[Vocabulary] = None
) -> DatasetManifest:
    """
    Écrire le JSONL, le vocabulaire et le manifeste

    Args:
        path: Fichier JSONL de sortie
        samples: Échantillons
        split: Partition déclarée dans le manifeste
        vocab: Vocabulaire (construit à partir des échantillons si absent)

    Returns:
        Le manifeste écrit
    """
    if not samples:
        raise EmptyDatasetError()

    path = Path(path)
    d_feat = next((s.d_feat for s in samples if s.d_feat is not None), None)
    if d_feat is None:
        raise SchemaError("Aucune région: impossible de déduire d_feat")

    vocab = vocab or Vocabulary.build(samples)
    vocab_path = vocab.save(vocab_path_for(path))
    JsonlFormatter.write_jsonl(path, (s.to_record() for s in samples))

    manifest = DatasetManifest(
        n_samples=len(samples),
        d_feat=d_feat,
        vocab_path=vocab_path.name,
        split=split
    )
    manifest_path_for(path).write_text(
        JsonlFormatter.to_json(manifest.model_dump(mode="json"), indent=2) + "\n",
        encoding="utf-8"
    )
    logger.info(
        f"Dataset écrit: {path}",
        extra={"n_samples": len(samples), "split": split.value, "vocab_size": len(vocab)}
    )
    return manifest


def read_manifest(path: Union[str, Path]) -> Optional[DatasetManifest]:
    manifest_path = manifest_path_for(path)
    if not manifest_path.exists():
        return None
    try:
        return DatasetManifest.model_validate(json.loads(manifest_path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as e:
        raise SchemaError(f"Manifeste invalide {manifest_path}: {e}")


def read_dataset(path: Union[str, Path]) -> DatasetBundle:
    """
    Lire et valider un dataset JSONL

    Le manifeste voisin (s'il existe) fixe d_feat et le vocabulaire.
    Les erreurs de validation portent le numéro d'enregistrement dans extra.
    """
    path = Path(path)
    manifest = read_manifest(path)
    d_feat = manifest.d_feat if manifest else None

    samples = []
    for index, record in enumerate(JsonlFormatter.iter_jsonl(path)):
        try:
            sample = validate_sample(record, d_feat=d_feat)
        except DataError as e:
            e.extra.setdefault("record", index)
            raise
        if d_feat is None:
            d_feat = sample.d_feat
        samples.append(sample)

    if not samples:
        raise EmptyDatasetError(f"Aucun enregistrement dans {path}")
    if manifest is not None and manifest.n_samples != len(samples):
        raise SchemaError(
            f"Le manifeste annonce {manifest.n_samples} échantillons, {len(samples)} lus"
        )

    vocab = None
    if manifest is not None:
        vocab_file = path.parent / manifest.vocab_path
        if vocab_file.exists():
            vocab = Vocabulary.load(vocab_file)

    logger.info(f"Dataset chargé: {path}", extra={"n_samples": len(samples)})
    return DatasetBundle(samples=samples, manifest=manifest, vocab=vocab)
