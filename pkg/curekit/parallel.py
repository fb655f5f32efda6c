"""Worker pools and reproducible random streams for the resampling procedures.

Every resample draws from its own generator keyed by (seed, stream, index), so
the outcome does not depend on how tasks are scheduled across threads.
"""

import logging
import multiprocessing
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, Optional, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")

RNG_NAME = "Philox/SeedSequence"

# stream identifiers, one per resampling procedure
STREAM_WEIGHTED_BOOTSTRAP = 1
STREAM_CONFIDENCE = 2
STREAM_COVARIATE_TEST = 3
STREAM_SIMULATION = 4


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count: explicit value, else ``CUREKIT_WORKERS``, else min(cpu, 4)."""
    if workers is not None:
        return max(1, int(workers))
    raw = os.getenv("CUREKIT_WORKERS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning(f"Ignoring non-integer CUREKIT_WORKERS={raw!r}")
    return min(multiprocessing.cpu_count(), 4)


def resolve_seed(seed: Optional[int] = None) -> int:
    """Return the seed to use, drawing fresh entropy when none was given."""
    if seed is not None:
        return int(seed)
    raw = os.getenv("CUREKIT_SEED")
    if raw:
        try:
            return int(raw)
        except ValueError:
            logger.warning(f"Ignoring non-integer CUREKIT_SEED={raw!r}")
    drawn = int(np.random.SeedSequence().entropy % (2**63))
    logger.warning(f"No seed given; drawn seed {drawn} (pass --seed {drawn} to replay)")
    return drawn


def stream_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for one resample of one procedure."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def ordered_map(fn: Callable[[int], T], count: int, workers: Optional[int] = None) -> Iterator[T]:
    """Apply ``fn`` to 0..count-1, yielding results in index order."""
    n_workers = resolve_workers(workers)
    if n_workers == 1 or count <= 1:
        for index in range(count):
            yield fn(index)
        return
    with ThreadPoolExecutor(max_workers=n_workers) as executor:
        yield from executor.map(fn, range(count))
