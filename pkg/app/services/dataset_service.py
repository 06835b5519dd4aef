from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.dataset.io import DatasetBundle, read_dataset, write_dataset
from app.dataset.stats import dataset_stats
from app.dataset.synthetic import generate_synthetic_dataset
from app.models.enums import Split
from app.models.results import DatasetStats
from app.models.sample import DatasetManifest, GeneratorConfig
from app.services.base import BaseService
from app.utils.helpers import timeit


class DatasetService(BaseService):
    """Service pour la génération et l'inspection des datasets"""

    def load_generator_config(self, path: Optional[Union[str, Path]] = None) -> GeneratorConfig:
        """Configuration du générateur (défauts si aucun fichier)"""
        try:
            return GeneratorConfig.model_validate(self.read_config_file(path))
        except ValidationError as e:
            raise ConfigError(f"Configuration du générateur invalide: {e}")

    @timeit
    def synthesize(
            self,
            seed: int,
            n: int,
            out: Union[str, Path],
            split: Split = Split.PRETRAIN,
            config_path: Optional[Union[str, Path]] = None
    ) -> DatasetManifest:
        """
        Générer et écrire un dataset synthétique

        Args:
            seed: Graine
            n: Nombre d'échantillons
            out: Fichier JSONL de sortie
            split: Partition déclarée
            config_path: Configuration JSON/TOML du générateur

        Returns:
            Le manifeste écrit
        """
        cfg = self.load_generator_config(config_path)
        samples = generate_synthetic_dataset(seed, n, cfg)
        manifest = write_dataset(out, samples, split)
        self.logger.info(
            f"Dataset synthétique écrit: {out}",
            extra={"seed": seed, "n_samples": n, "split": split.value}
        )
        return manifest

    def load(self, path: Union[str, Path]) -> DatasetBundle:
        """Lire un dataset validé"""
        return read_dataset(path)

    @timeit
    def stats(self, path: Union[str, Path]) -> DatasetStats:
        """Statistiques d'un dataset JSONL"""
        bundle = self.load(path)
        stats = dataset_stats(bundle.samples)
        self.logger.info(f"Statistiques calculées: {path}", extra=stats.model_dump(mode="json"))
        return stats


dataset_service = DatasetService()
