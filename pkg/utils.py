"""
Utility functions for the unitary design toolkit
"""

import logging
import zlib
from datetime import datetime
from typing import Any, Dict, List, Mapping, Union

import numpy as np

logger = logging.getLogger(__name__)

StreamKey = Union[int, str]


def _key_to_int(key: StreamKey) -> int:
    """Stable integer for a stream key; strings hash with crc32"""
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"Stream keys must be non-negative, got {key}")
    return int(key)


def stream_rng(seed: int, *keys: StreamKey) -> np.random.Generator:
    """Independent generator for (seed, keys...)

    Streams are addressed by key rather than drawn in sequence, so adding a
    chunk or a trial never shifts the draws of the ones before it.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_to_int(key) for key in keys))
    return np.random.default_rng(sequence)


def chunk_sizes(total: int, chunk: int) -> List[int]:
    """Split total work items into chunks of at most chunk items"""
    if total < 0 or chunk <= 0:
        raise ValueError(f"Cannot split {total} items into chunks of {chunk}")
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def round_floats(value: Any, digits: int = 12) -> Any:
    """Round every float inside nested dicts/lists so reports print identically"""
    if isinstance(value, (float, np.floating)):
        return round(float(value), digits)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, Mapping):
        return {key: round_floats(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(item, digits) for item in value]
    return value


def format_distribution(weights: Mapping[str, float], title: str = "Pauli distribution") -> str:
    """Format a sparse Pauli distribution for display"""
    if not weights:
        return f"{title}: empty"

    message = f"{title} ({len(weights)} labels)\n"
    for label, weight in sorted(weights.items(), key=lambda item: (-item[1], item[0])):
        message += f"  {label}  {weight:.12g}\n"
    return message


def format_error_message(error: Exception, context: str = "") -> Dict[str, str]:
    """Machine-readable failure document for the command line"""
    document = {
        "status": "error",
        "error": type(error).__name__,
        "message": str(error),
    }
    if context:
        document["context"] = context
    return document


def log_performance(func_name: str, start_time: datetime, end_time: datetime):
    """Log function performance"""
    duration = (end_time - start_time).total_seconds()
    logger.debug(f"Function {func_name} took {duration:.3f}s")
