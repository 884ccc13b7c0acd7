"""
Fan-out helper for independent simulations.
"""

from multiprocessing import Pool
from typing import Callable, List, Sequence, TypeVar

from tqdm import tqdm

from es_unicycle.utils.logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    workers: int = 1,
    show_progress: bool = False,
    desc: str = "",
) -> List[R]:
    """
    Apply ``fn`` to every item, in order.

    With ``workers > 1`` the items go to a process pool; ``fn`` must be a module-level
    function and items must pickle. Results come back in input order, so the output
    does not depend on the worker count.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in tqdm(items, desc=desc, disable=not show_progress)]
    processes = min(workers, len(items))
    logger.debug(f"Dispatching {len(items)} task(s) to {processes} worker(s)")
    with Pool(processes=processes) as pool:
        return list(tqdm(pool.imap(fn, items), total=len(items), desc=desc, disable=not show_progress))
