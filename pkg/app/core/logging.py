import logging
import math
import sys
import json
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Optional
from pathlib import Path
from logging.handlers import RotatingFileHandler

from app.core.config import settings


# Attributs standards d'un LogRecord, exclus des extras
_RESERVED_ATTRS = set(vars(logging.makeLogRecord({}))) | {"message", "asctime", "taskName", "context"}

# Champs de contexte d'entraînement, placés en tête des logs
_CONTEXT_KEYS = ("stage", "step", "modality")


def _jsonable(value: Any) -> Any:
    """
    Convertir un extra en valeur JSON

    Les scalaires torch/numpy deviennent des float, les valeurs non finies
    des chaînes ("nan", "inf") pour rester du JSON valide.
    """
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, Enum):
        return value.value
    if hasattr(value, "item") and callable(value.item) and getattr(value, "ndim", 0) == 0:
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _context_suffix(record: logging.LogRecord) -> str:
    """Contexte `[PRETRAIN step=12 modality=TEXT]` si présent"""
    parts = []
    for key in _CONTEXT_KEYS:
        value = getattr(record, key, None)
        if value is None:
            continue
        value = getattr(value, "value", value)
        parts.append(str(value) if key == "stage" else f"{key}={value}")
    return f" [{' '.join(parts)}]" if parts else ""


class JSONFormatter(logging.Formatter):
    """Formatter JSON pour logs structurés"""

    def format(self, record: logging.LogRecord) -> str:
        """Formater un log record en JSON"""
        log_data: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        for key in _CONTEXT_KEYS:
            if hasattr(record, key):
                log_data[key] = _jsonable(getattr(record, key))

        if record.exc_info:
            log_data["exception"] = {
                "type": record.exc_info[0].__name__,
                "message": str(record.exc_info[1]),
                "traceback": self.formatException(record.exc_info)
            }

        # Extras: pertes, config résolue, chemins...
        for key, value in record.__dict__.items():
            if key in _RESERVED_ATTRS or key in log_data:
                continue
            log_data[key] = _jsonable(value)

        return json.dumps(log_data, ensure_ascii=False, default=str)


class ColoredFormatter(logging.Formatter):
    """Formatter avec couleurs pour la console"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
        'RESET': '\033[0m'
    }

    def format(self, record: logging.LogRecord) -> str:
        """Formater avec couleurs"""
        color = self.COLORS.get(record.levelname, self.COLORS['RESET'])
        reset = self.COLORS['RESET']
        timestamp = datetime.fromtimestamp(record.created).strftime('%H:%M:%S')

        formatted = f"{color}{record.levelname:<7}{reset} {timestamp} {record.name}"
        formatted += f"{_context_suffix(record)} {record.getMessage()}"

        if record.exc_info:
            formatted += f"\n{self.formatException(record.exc_info)}"

        return formatted


class StandardFormatter(logging.Formatter):
    """Formatter texte, avec le contexte d'entraînement"""

    def __init__(self):
        super().__init__(
            fmt="%(asctime)s - %(name)s - %(levelname)s -%(context)s %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )

    def format(self, record: logging.LogRecord) -> str:
        record.context = _context_suffix(record)
        return super().format(record)


class LoggerManager:
    """Gestionnaire de logging centralisé"""

    _configured = False

    @classmethod
    def setup(cls, level: Optional[str] = None) -> None:
        """
        Configurer le système de logging

        Un second appel ne réinstalle pas les handlers mais applique le niveau
        demandé (`--log-level` d'un nouvel appel du CLI).
        """
        root_logger = logging.getLogger()
        resolved = getattr(logging, (level or settings.log_level).upper())

        if cls._configured:
            root_logger.setLevel(resolved)
            for handler in root_logger.handlers:
                if isinstance(handler, logging.StreamHandler) and not isinstance(handler, RotatingFileHandler):
                    handler.setLevel(resolved)
            return

        root_logger.setLevel(resolved)
        root_logger.handlers.clear()

        # Console sur stderr: stdout est réservé aux rapports du CLI
        if settings.log_console:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(logging.DEBUG if settings.app_debug else resolved)
            console_handler.setFormatter(cls._console_formatter())
            root_logger.addHandler(console_handler)

        if settings.log_file_enabled:
            log_path = Path(settings.log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)
            file_handler = RotatingFileHandler(
                log_path,
                maxBytes=settings.log_max_bytes,
                backupCount=settings.log_backup_count,
                encoding="utf-8"
            )
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(JSONFormatter())
            root_logger.addHandler(file_handler)

        cls._configure_third_party_loggers()
        cls._configured = True

        logging.getLogger(__name__).debug(
            "Logging configuré",
            extra={
                "log_level": level or settings.log_level,
                "format": settings.log_format,
                "file": settings.log_file if settings.log_file_enabled else None,
            }
        )

    @staticmethod
    def _console_formatter() -> logging.Formatter:
        if settings.log_format == "json":
            return JSONFormatter()
        if settings.log_format == "color":
            return ColoredFormatter()
        return StandardFormatter()

    @staticmethod
    def _configure_third_party_loggers():
        """Réduire le bruit de torch"""
        for name in ("torch", "torch._dynamo", "filelock"):
            logging.getLogger(name).setLevel(logging.WARNING)


def setup_logging(level: Optional[str] = None) -> None:
    """Setup public du logging"""
    LoggerManager.setup(level)


def get_logger(name: str) -> logging.Logger:
    """
    Obtenir un logger

    Args:
        name: Nom du logger (généralement __name__)

    Returns:
        Logger configuré
    """
    return logging.getLogger(name)
