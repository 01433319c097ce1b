import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    try:
        return max(1, int(os.environ.get("JSPEC_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(func, items):
    """Map ``func`` over ``items`` keeping input order.

    Uses a thread pool when ``JSPEC_THREADS`` > 1; results are identical
    either way because the output order never depends on scheduling.
    """
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
