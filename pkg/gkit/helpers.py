"""Various helper functions implemented by gkit."""
import logging
import re
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Tuple, TypeVar, Union

import numpy as np

from gkit.exceptions import ParseError

logger = logging.getLogger(__name__)

# Patterns per enumeration block; bounds the size of each sign matrix.
SIGN_BLOCK = 1 << 14

T = TypeVar("T")


def regex_search(pattern: str, string: str, group: int) -> str:
    """Shortcut method to search a string for a given pattern.

    :param str pattern:
        A regular expression pattern.
    :param str string:
        A target string to search.
    :param int group:
        Index of group to return.
    :rtype:
        str
    :returns:
        Substring pattern matches.
    """
    regex = re.compile(pattern)
    results = regex.search(string)
    if not results:
        raise ParseError(f"regex_search: could not find match for {pattern}")

    logger.debug("matched regex search: %s", pattern)

    return results.group(group)


def setup_logger(level: int = logging.ERROR, log_filename: Optional[str] = None) -> None:
    """Create a configured instance of logger.

    :param int level:
        Describe the severity level of the logs to handle.
    :param str log_filename:
        (Optional) Also write records to this file.
    """
    fmt = "[%(asctime)s] %(levelname)s in %(module)s: %(message)s"
    date_fmt = "%H:%M:%S"
    formatter = logging.Formatter(fmt, datefmt=date_fmt)

    logger = logging.getLogger("gkit")
    logger.setLevel(level)

    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)

    if log_filename is not None:
        file_handler = logging.FileHandler(log_filename)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)


def _stream_key(name: Union[str, int]) -> int:
    if isinstance(name, str):
        return zlib.crc32(name.encode("utf-8"))
    return int(name)


def substream(seed: int, *names: Union[str, int]) -> np.random.Generator:
    """Random generator for a named sub-stream of ``seed``.

    Sub-streams are keyed by their names only, so drawing from one stream
    (or adding restarts) never perturbs another.

    >>> substream(0, "sdp", 3)  # restart 3 of the sdp stream
    """
    key = tuple(_stream_key(n) for n in names)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def sign_patterns(dim: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the sign enumeration of ``{±1}^dim``.

    The first coordinate is pinned to +1 (global sign symmetry), so there
    are ``2**(dim-1)`` patterns; pattern ``p`` carries the bits of ``p`` on
    coordinates ``1..dim-1``.
    """
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    shifts = np.arange(dim - 1, dtype=np.int64)[None, :]
    bits = (idx >> shifts) & 1
    signs = np.ones((stop - start, dim))
    signs[:, 1:] = 1.0 - 2.0 * bits
    return signs


def pattern_count(dim: int) -> int:
    return 1 << max(dim - 1, 0)


def blocks(total: int, size: int = SIGN_BLOCK) -> List[Tuple[int, int]]:
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def parallel_map(fn: Callable[..., T], items: Iterable, threads: int = 1) -> List[T]:
    """Map ``fn`` over ``items`` keeping input order.

    Runs inline when ``threads`` is 1; otherwise on a thread pool. Results
    never depend on the worker count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def best_of(results: Iterable[Tuple[float, int, T]]) -> Tuple[float, int, T]:
    """Max-reduction on value with ties broken by the lowest index."""
    best = None
    for value, index, payload in results:
        if best is None or value > best[0] or (value == best[0] and index < best[1]):
            best = (value, index, payload)
    if best is None:
        raise ValueError("best_of() arg is an empty sequence")
    return best


def sign_enumerate(
    score: Callable[[np.ndarray], np.ndarray],
    dim: int,
    threads: int = 1,
    block: int = SIGN_BLOCK,
) -> Tuple[float, np.ndarray]:
    """Maximize ``score`` over all sign vectors in ``{±1}^dim``.

    ``score`` maps a block of sign rows to one value per row and must be
    even in the sign vector. Blocks are scored independently and reduced
    with :func:`best_of`, so the supremum and its witness do not depend on
    how the blocks are spread over workers.

    :returns:
        The maximum and the lexicographically first maximizing pattern.
    """
    total = pattern_count(dim)
    logger.debug("enumerating %d sign patterns of length %d", total, dim)

    def run(span):
        lo, hi = span
        values = score(sign_patterns(dim, lo, hi))
        k = int(np.argmax(values))
        return float(values[k]), lo + k, None

    value, index, _ = best_of(parallel_map(run, blocks(total, block), threads))
    return value, sign_patterns(dim, index, index + 1)[0]


def sign(v: np.ndarray) -> np.ndarray:
    """Elementwise sign with zeros mapped to +1."""
    return np.where(v >= 0, 1.0, -1.0)


def random_sign_matrix(rows: int, cols: int, seed: int, *names) -> np.ndarray:
    """i.i.d. ±1 matrix drawn from the ``names`` sub-stream of ``seed``."""
    rng = substream(seed, *names) if names else np.random.default_rng(seed)
    return rng.choice([-1.0, 1.0], size=(rows, cols))


def relative_spread(values: Iterable[float], magnitude: float) -> float:
    """Max pairwise gap of ``values`` relative to ``magnitude``.

    ``magnitude`` is the condition scale of the sum (the same contraction
    taken over absolute values); a zero scale means every value is zero.
    """
    values = list(values)
    if not values:
        return 0.0
    gap = max(values) - min(values)
    return gap / magnitude if magnitude > 0 else gap
