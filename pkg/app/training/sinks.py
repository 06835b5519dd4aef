from pathlib import Path
from typing import Any, Dict, Optional, Protocol, Union

from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from app.core.config import settings
from app.core.exceptions import CheckpointSinkError
from app.core.logging import get_logger
from app.modeling.checkpoint import save_checkpoint
from app.models.training import StepMetrics
from app.utils.formatters import JsonlFormatter

logger = get_logger(__name__)

FINAL_CHECKPOINT = "final.pt"


class CheckpointSink(Protocol):

    def save(self, step: int, archive: Dict[str, Any], final: bool = False) -> Optional[Path]:
        ...


class FileCheckpointSink:
    """Écrit step-XXXXXX.pt (et final.pt en fin de run) dans un répertoire"""

    def __init__(self, directory: Union[str, Path], retries: Optional[int] = None):
        self.directory = Path(directory)
        self.retries = retries or settings.checkpoint_save_retries

    def _write(self, path: Path, archive: Dict[str, Any]) -> Path:
        try:
            for attempt in Retrying(
                    stop=stop_after_attempt(self.retries),
                    wait=wait_exponential(multiplier=0.1, max=2),
                    retry=retry_if_exception_type(OSError),
                    reraise=True
            ):
                with attempt:
                    return save_checkpoint(path, archive)
        except OSError as e:
            logger.error(f"Échec d'écriture du checkpoint {path}: {e}")
            raise CheckpointSinkError(f"Impossible d'écrire {path}: {e}")

    def save(self, step: int, archive: Dict[str, Any], final: bool = False) -> Path:
        path = self._write(self.directory / f"step-{step:06d}.pt", archive)
        if final:
            path = self._write(self.directory / FINAL_CHECKPOINT, archive)
        logger.info(f"Checkpoint écrit: {path}", extra={"step": step})
        return path


class MetricsWriter:
    """Métriques par step en JSONL (append-only)"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def write(self, metrics: StepMetrics) -> None:
        JsonlFormatter.append_jsonl(self.path, metrics.to_record())
