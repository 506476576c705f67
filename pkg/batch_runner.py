"""
Concurrent execution of independent, seeded work chunks
"""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import Any, Callable, Iterable, List, Sequence

from utils import log_performance

logger = logging.getLogger(__name__)


class BatchRunner:
    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ValueError("Worker count must be positive")
        self.workers = workers

    async def _run_chunk(self, loop, pool, func: Callable[..., Any], args: Sequence[Any]):
        """Run a single chunk on the executor"""
        return await loop.run_in_executor(pool, func, *args)

    async def run_all(self, func: Callable[..., Any], tasks: List[Sequence[Any]]) -> List[Any]:
        """Run every chunk concurrently and return results in submission order"""
        if not tasks:
            logger.debug("No chunks to run")
            return []

        loop = asyncio.get_running_loop()
        start_time = datetime.now()

        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            chunk_tasks = [self._run_chunk(loop, pool, func, args) for args in tasks]
            # Execute all chunks concurrently
            results = await asyncio.gather(*chunk_tasks, return_exceptions=True)

        failures = [result for result in results if isinstance(result, Exception)]
        for failure in failures:
            logger.error(f"Chunk of {getattr(func, '__name__', 'task')} failed: {failure}")
        if failures:
            # aggregates need every chunk
            raise failures[0]

        log_performance(getattr(func, "__name__", "task"), start_time, datetime.now())
        logger.info(f"Completed {len(results)} chunks with {self.workers} worker(s)")
        return results

    def run(self, func: Callable[..., Any], tasks: Iterable[Sequence[Any]]) -> List[Any]:
        """Blocking entry point for library code"""
        return asyncio.run(self.run_all(func, list(tasks)))
