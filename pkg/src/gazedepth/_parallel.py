import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "GAZEDEPTH_THREADS"


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """``list(map(fn, items))``, threaded up to ``$GAZEDEPTH_THREADS`` workers."""
    items = list(items)
    n = min(max_threads(), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
