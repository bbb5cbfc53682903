"""Process-pool fan-out and seed trees for multistart, selection and study runs."""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def spawn_seeds(seed: Optional[int], count: int, *path: int) -> List[int]:
    """Independent integer seeds for ``count`` child streams of ``seed``.

    ``path`` selects a sub-tree (e.g. one study replication) so sibling
    stages never share a stream.
    """
    root = np.random.SeedSequence(seed if seed is None else [int(seed), *path])
    return [int(child.generate_state(1)[0]) for child in root.spawn(count)]


def run_parallel(fn: Callable[[T], R], tasks: Sequence[T], threads: int = 1) -> List[R]:
    """Map a module-level worker over tasks, keeping task order.

    ``threads <= 1`` runs serially in-process, which also keeps stack traces
    and mocks intact in tests.
    """
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    workers = min(int(threads), len(tasks))
    logger.debug(f"🔄 Dispatching {len(tasks)} tasks over {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))
