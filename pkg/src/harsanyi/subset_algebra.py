"""Bit-mask coalition arithmetic and the subset-lattice transforms.

A coalition S of the players {0, ..., n-1} is a plain ``int`` whose bit i is set
when player i belongs to S. Dense tables over all 2**n coalitions are float64
numpy arrays indexed directly by that integer.
"""
from __future__ import annotations

import math
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError, RangeError

MAX_N = 24
_UINT64_MAX = 2**64 - 1


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient C(n, k), zero when k > n."""
    if k < 0 or n < 0:
        raise PreconditionError(f"binomial requires n, k >= 0, got ({n}, {k})")
    if n > 64:
        raise RangeError(f"binomial supports n <= 64, got {n}")
    value = math.comb(n, k)
    if value > _UINT64_MAX:
        raise RangeError(f"C({n}, {k}) exceeds the 64-bit exact range")
    return value


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def check_n(n: int, limit: int = MAX_N) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise PreconditionError(f"player count must be an integer, got {n!r}")
    n = int(n)
    if not 1 <= n <= limit:
        raise RangeError(f"player count must satisfy 1 <= n <= {limit}, got {n}")
    return n


def check_mask(mask: int, n: int) -> int:
    mask = int(mask)
    if mask < 0 or mask >> n:
        raise PreconditionError(f"mask {mask} is not a subset of {n} players")
    return mask


def mask_from_indices(indices: Iterable[int], n: int | None = None) -> int:
    mask = 0
    for i in indices:
        i = int(i)
        if i < 0 or (n is not None and i >= n):
            raise PreconditionError(f"player index {i} out of range for n={n}")
        mask |= 1 << i
    return mask


def indices_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def as_lattice(data: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate a dense lattice table and return it as a read-only float64 array.

    The length must be a power of two 2**n with 1 <= n <= 24 and every entry
    finite.
    """
    arr = np.asarray(data)
    if arr.ndim != 1:
        raise PreconditionError("lattice data must be one-dimensional")
    size = arr.shape[0]
    n = size.bit_length() - 1
    if size < 2 or size != 1 << n:
        raise PreconditionError(f"lattice length must be 2**n with n >= 1, got {size}")
    check_n(n)
    arr = np.array(arr, dtype=np.float64, copy=True)
    if not np.all(np.isfinite(arr)):
        raise PreconditionError("lattice entries must be finite")
    arr.setflags(write=False)
    return arr


def lattice_n(data: np.ndarray) -> int:
    return int(data.shape[0]).bit_length() - 1


def all_masks(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def popcounts(n: int) -> np.ndarray:
    """Popcount of every mask 0 .. 2**n - 1."""
    return np.bitwise_count(all_masks(n)).astype(np.int64)


def _sweep(table, sign: float) -> np.ndarray:
    out = np.array(as_lattice(table), copy=True)
    n = lattice_n(out)
    for i in range(n):
        # View as (high bits, bit i, low bits); bit-i-set slab gets the bit-i-clear slab.
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] += sign * view[:, 0, :]
    out.setflags(write=False)
    return out


def mobius_transform(table) -> np.ndarray:
    """Möbius inversion over the subset lattice.

    Returns ``out[S] = sum over T subset of S of (-1)**(|S|-|T|) * table[T]`` for
    every S at once, in O(n * 2**n).
    """
    return _sweep(table, -1.0)


def zeta_transform(interactions) -> np.ndarray:
    """Subset-sum (zeta) transform, ``out[S] = sum over T subset of S of table[T]``."""
    return _sweep(interactions, 1.0)


def subsets_of_size(n: int, k: int) -> list[int]:
    """All masks of exactly k players out of n, in increasing integer order."""
    if not 0 <= k <= n:
        raise PreconditionError(f"subsets_of_size requires 0 <= k <= n, got ({n}, {k})")
    masks = [sum(1 << i for i in combo) for combo in combinations(range(n), k)]
    masks.sort()
    return masks


def submasks(mask: int):
    """Yield every submask of ``mask`` (including ``mask`` and 0), descending."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask
