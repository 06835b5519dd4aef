import time
import zlib
from functools import wraps

from app.core.logging import get_logger

logger = get_logger(__name__)


def timeit(func):
    """Décorateur pour mesurer le temps d'exécution"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        start = time.time()
        result = func(*args, **kwargs)
        duration = (time.time() - start) * 1000
        logger.info(
            f"{func.__name__} executed in {duration:.2f}ms",
            extra={"execution_time_ms": round(duration, 2)}
        )
        return result
    return wrapper


def stable_hash(text: str) -> int:
    """Hash 32 bits stable entre processus (contrairement à hash())"""
    return zlib.crc32(text.encode("utf-8"))


def derive_seed(*parts: int) -> int:
    """Dériver une graine torch 63 bits à partir de plusieurs entiers"""
    seed = 0x9E3779B97F4A7C15
    for part in parts:
        seed = (seed * 6364136223846793005 + int(part) + 1442695040888963407) % (1 << 63)
    return seed
