from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Union
import json

from app.core.exceptions import SchemaError


class JsonlFormatter:
    """Lecture/écriture JSON et JSON Lines (UTF-8)"""

    @staticmethod
    def to_json(data: Any, indent: int = None) -> str:
        """Convertir en JSON"""
        return json.dumps(
            data,
            ensure_ascii=False,
            default=str,
            indent=indent
        )

    @staticmethod
    def write_jsonl(path: Union[str, Path], records: Iterable[Dict[str, Any]]) -> int:
        """Écrire un fichier JSONL, retourne le nombre de lignes"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with path.open("w", encoding="utf-8") as handle:
            for record in records:
                handle.write(JsonlFormatter.to_json(record) + "\n")
                count += 1
        return count

    @staticmethod
    def append_jsonl(path: Union[str, Path], record: Dict[str, Any]) -> None:
        """Ajouter une ligne à un fichier JSONL"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as handle:
            handle.write(JsonlFormatter.to_json(record) + "\n")

    @staticmethod
    def iter_jsonl(path: Union[str, Path]) -> Iterator[Dict[str, Any]]:
        """Itérer sur les lignes non vides d'un fichier JSONL"""
        with Path(path).open("r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise SchemaError(f"JSON invalide ligne {line_number}: {e}")
                if not isinstance(record, dict):
                    raise SchemaError(f"Ligne {line_number}: un objet JSON est attendu")
                yield record

    @staticmethod
    def read_jsonl(path: Union[str, Path]) -> List[Dict[str, Any]]:
        return list(JsonlFormatter.iter_jsonl(path))
