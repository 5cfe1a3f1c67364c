"""
Replicate engine for Monte Carlo and bootstrap runs
"""

import logging
import pickle
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from typing import Any, Callable, List, Sequence, Tuple

import numpy as np

from ..utils.helpers import chunk_list
from ..utils.rng import replicate_rng

logger = logging.getLogger(__name__)

Task = Callable[[np.random.Generator], Any]


def _run_chunk(task: Task, seed: int, stream: Tuple[int, ...], indices: Sequence[int]) -> List[Any]:
    return [task(replicate_rng(seed, r, *stream)) for r in indices]


class MonteCarloEngine:
    """
    Runs a replicate task for replicate indices 0..R-1.

    Replicate r always draws from the stream of (seed, r, *stream), and the
    results come back in replicate order, so the output does not depend on
    the number of workers.
    """

    def __init__(self, workers: int = 1, chunk_size: int = 64):
        self.workers = max(1, int(workers))
        self.chunk_size = max(1, int(chunk_size))

    def run(self, task: Task, reps: int, seed: int, stream: Tuple[int, ...] = ()) -> np.ndarray:
        """
        Run reps replicates of task.

        Args:
            task: picklable callable taking a numpy Generator
            reps: number of replicates
            seed: run seed
            stream: extra stream tags separating independent uses of one seed

        Returns:
            Array of replicate results (one row per replicate for vector results)
        """
        chunks = chunk_list(list(range(reps)), self.chunk_size)
        logger.debug(f"Running {reps} replicates in {len(chunks)} chunks on {self.workers} worker(s)")

        if self.workers > 1 and len(chunks) > 1:
            try:
                pickle.dumps(task)
            except (pickle.PicklingError, AttributeError, TypeError) as e:
                logger.warning(f"Task cannot be sent to worker processes ({e}); running serially")
            else:
                try:
                    with ProcessPoolExecutor(max_workers=self.workers) as executor:
                        futures = [executor.submit(_run_chunk, task, seed, stream, chunk) for chunk in chunks]
                        results = [value for future in futures for value in future.result()]
                    return np.asarray(results)
                except BrokenProcessPool as e:
                    logger.warning(f"Worker pool failed ({e}); running serially")

        results = [value for chunk in chunks for value in _run_chunk(task, seed, stream, chunk)]
        return np.asarray(results)
