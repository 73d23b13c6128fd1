import hashlib
from datetime import datetime, timezone
from typing import Union

import numpy as np

from config import ROOT_SEED


def utcnow():
    """Get the current UTC time."""
    return datetime.now(timezone.utc)


def job_key(name: str) -> int:
    """Stable 64-bit key for a job name (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int = ROOT_SEED, job: Union[str, int] = 0) -> np.random.Generator:
    """
    Counter-based generator for one job.

    Streams for different jobs are independent and do not depend on the order
    in which jobs are scheduled.

    Args:
        seed: Root seed of the run
        job: Job name or integer counter

    Returns:
        numpy Generator backed by Philox
    """
    counter = job_key(job) if isinstance(job, str) else int(job)
    key = ((int(seed) & 0xFFFFFFFFFFFFFFFF) << 64) | (counter & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def sha256_file(path: str) -> str:
    """Get the hex sha256 of a file's content."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
