"""Shapley values and interaction indices, each computed two independent ways.

The ``*_definitional`` / ``*_index`` functions evaluate the classical
definitions from raw utilities. The ``*_from_harsanyi`` functions aggregate
Harsanyi dividends instead. Agreement between the two is what the test suite
checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .game_oracle import ValueTable
from .interaction_core import InteractionTable, marginal_benefits
from .subset_algebra import all_masks, binomial, check_mask, popcount


@dataclass
class AttributionVector:
    phi: np.ndarray

    @property
    def n(self) -> int:
        return int(self.phi.shape[0])


def _nonempty(T: int, n: int) -> int:
    T = check_mask(T, n)
    if T == 0:
        raise PreconditionError("interaction index needs a nonempty T")
    return T


def shapley_values_definitional(table: ValueTable) -> AttributionVector:
    """Average marginal contribution, stratified by the size of the preceding coalition.

    φ(i) = Σ_{S ⊆ N∖{i}} [u(S∪{i}) − u(S)] / (n · C(n−1, |S|)).
    """
    n = table.n
    u = table.utilities()
    masks = all_masks(n)
    sizes = np.bitwise_count(masks)
    weight_by_size = np.array([1.0 / (n * binomial(n - 1, s)) for s in range(n)])
    phi = np.empty(n)
    for i in range(n):
        S = masks[(masks >> i) & 1 == 0]
        marginal = u[S | (1 << i)] - u[S]
        phi[i] = np.dot(weight_by_size[sizes[S]], marginal)
    return AttributionVector(phi)


def shapley_values_from_harsanyi(interactions: InteractionTable) -> AttributionVector:
    """Each dividend I(S) is split evenly among the members of S."""
    n = interactions.n
    masks = all_masks(n)
    sizes = np.bitwise_count(masks)
    share = np.zeros_like(interactions.effects)
    share[1:] = interactions.effects[1:] / sizes[1:]
    phi = np.array([share[(masks >> i) & 1 == 1].sum() for i in range(n)])
    return AttributionVector(phi)


def shapley_interaction_index(table: ValueTable, T: int) -> float:
    n = table.n
    T = _nonempty(T, n)
    t = popcount(T)
    masks = all_masks(n)
    S = masks[(masks & T) == 0]
    sizes = np.bitwise_count(S)
    weights = np.array([1.0 / ((n - t + 1) * binomial(n - t, s)) for s in range(n - t + 1)])
    return float(np.dot(weights[sizes], marginal_benefits(table.utilities(), T, S)))


def shapley_interaction_from_harsanyi(interactions: InteractionTable, T: int) -> float:
    n = interactions.n
    T = _nonempty(T, n)
    masks = all_masks(n)
    S = masks[(masks & T) == 0]
    return float(np.sum(interactions.effects[S | T] / (np.bitwise_count(S) + 1)))


def _check_order(k: int, n: int) -> int:
    if not 1 <= k <= n:
        raise PreconditionError(f"Shapley-Taylor order must satisfy 1 <= k <= n={n}, got {k}")
    return int(k)


def shapley_taylor_index(table: ValueTable, T: int, k: int) -> float:
    n = table.n
    T = _nonempty(T, n)
    k = _check_order(k, n)
    t = popcount(T)
    u = table.utilities()
    if t > k:
        return 0.0
    if t < k:
        return float(marginal_benefits(u, T, np.array([0]))[0])
    masks = all_masks(n)
    S = masks[(masks & T) == 0]
    weights = np.array([k / (n * binomial(n - 1, s)) for s in range(n)])
    return float(np.dot(weights[np.bitwise_count(S)], marginal_benefits(u, T, S)))


def shapley_taylor_from_harsanyi(interactions: InteractionTable, T: int, k: int) -> float:
    n = interactions.n
    T = _nonempty(T, n)
    k = _check_order(k, n)
    t = popcount(T)
    if t > k:
        return 0.0
    if t < k:
        return float(interactions.effects[T])
    masks = all_masks(n)
    S = masks[(masks & T) == 0]
    weights = np.array([1.0 / binomial(s + k, k) for s in range(n - k + 1)])
    return float(np.dot(weights[np.bitwise_count(S)], interactions.effects[S | T]))
