import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional, Union

from app.core.exceptions import ConfigError
from app.core.logging import get_logger


class BaseService:
    """Service de base"""

    def __init__(self):
        self.logger = get_logger(self.__class__.__name__)

    def read_config_file(self, path: Optional[Union[str, Path]]) -> Dict[str, Any]:
        """
        Lire un fichier de configuration JSON ou TOML

        Returns:
            Dictionnaire (vide si path est None)

        Raises:
            ConfigError: Fichier absent, illisible ou dont la racine n'est pas une table
        """
        if path is None:
            return {}
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Fichier de configuration introuvable: {path}")

        text = path.read_text(encoding="utf-8")
        try:
            data = tomllib.loads(text) if path.suffix == ".toml" else json.loads(text)
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
            raise ConfigError(f"Configuration illisible {path}: {e}")

        if not isinstance(data, dict):
            raise ConfigError(f"La racine de {path} doit être une table")
        self.logger.debug(f"Configuration lue: {path}", extra={"keys": sorted(data)})
        return data
