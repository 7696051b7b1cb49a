"""Harsanyi dividends and the identities that hold for them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import serialization
from .errors import FormatError, PreconditionError
from .game_oracle import ValueTable
from .subset_algebra import (
    MAX_N,
    all_masks,
    as_lattice,
    check_mask,
    lattice_n,
    mobius_transform,
    popcount,
    submasks,
    zeta_transform,
)

INTERACTION_TABLE_FORMAT = "harsanyi-it/1"
DEFAULT_TOL = 1e-9


class InteractionTable:
    """Harsanyi dividends I(S) for every mask, plus the baseline output v(x_empty)."""

    __slots__ = ("effects", "baseline")

    def __init__(self, effects, baseline: float = 0.0):
        self.effects = as_lattice(effects)
        self.baseline = float(baseline)

    @property
    def n(self) -> int:
        return lattice_n(self.effects)

    def __eq__(self, other):
        if not isinstance(other, InteractionTable):
            return NotImplemented
        return self.baseline == other.baseline and np.array_equal(self.effects, other.effects)

    def __repr__(self):
        return f"InteractionTable(n={self.n}, baseline={self.baseline!r})"


def save_interaction_table(table: InteractionTable, path) -> None:
    serialization.write_json(path, interaction_document(table))


def interaction_document(table: InteractionTable) -> dict:
    return {
        "format": INTERACTION_TABLE_FORMAT,
        "n": table.n,
        "baseline": table.baseline,
        "effects": table.effects,
    }


def load_interaction_table(path) -> InteractionTable:
    source = str(path)
    doc = serialization.read_json(path)
    serialization.check_format(doc, INTERACTION_TABLE_FORMAT, source)
    n = serialization.require(doc, "n", source)
    if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= MAX_N:
        raise FormatError(f"{source}: key 'n' must be an integer in [1, {MAX_N}], got {n!r}")
    baseline = serialization.require(doc, "baseline", source)
    if isinstance(baseline, bool) or not isinstance(baseline, (int, float)):
        raise FormatError(f"{source}: key 'baseline' must be a number")
    effects = serialization.number_array(serialization.require(doc, "effects", source), "effects", source)
    if effects.shape[0] != 1 << n:
        raise FormatError(f"{source}: key 'effects' has {effects.shape[0]} entries, expected {1 << n}")
    return InteractionTable(effects, baseline)


def harsanyi_dividends(table: ValueTable) -> InteractionTable:
    effects = np.array(mobius_transform(table.utilities()))
    effects[0] = 0.0
    return InteractionTable(effects, table.baseline)


def harsanyi_single_naive(table: ValueTable, S: int) -> float:
    """Direct alternating sum over the submasks of S, without the fast transform."""
    S = check_mask(S, table.n)
    u = table.utilities()
    size = popcount(S)
    total = 0.0
    for T in submasks(S):
        if (size - popcount(T)) % 2:
            total -= u[T]
        else:
            total += u[T]
    return float(total)


def harsanyi_naive_all(table: ValueTable) -> np.ndarray:
    """All dividends by per-mask direct summation, O(4**n); a reference for tests."""
    u = table.utilities()
    masks = all_masks(table.n)
    counts = np.bitwise_count(masks)
    out = np.empty_like(u)
    for S in range(1 << table.n):
        inside = (masks & ~S) == 0
        signs = np.where((counts[S] - counts[inside]) % 2 == 0, 1.0, -1.0)
        out[S] = np.dot(signs, u[inside])
    return out


def reconstruct_output(interactions: InteractionTable, baseline: float, S: int) -> float:
    """v(x_S) from dividends: sum of I(T) over T subset of S, plus the baseline."""
    S = check_mask(S, interactions.n)
    masks = all_masks(interactions.n)
    return float(np.sum(interactions.effects[(masks & ~S) == 0]) + baseline)


@dataclass
class MatchingReport:
    max_residual: float
    worst_mask: int
    scale: float
    tolerance: float
    passed: bool


def verify_universal_matching(
    table: ValueTable,
    rel_tol: float = DEFAULT_TOL,
    interactions: InteractionTable | None = None,
) -> MatchingReport:
    """Check that the table is reproduced by summing dividends over each coalition.

    If ``interactions`` is omitted they are computed from the table; passing a
    stored interaction table checks that file against the outputs instead.
    """
    if rel_tol <= 0:
        raise PreconditionError("rel_tol must be positive")
    if interactions is None:
        interactions = harsanyi_dividends(table)
    if interactions.n != table.n:
        raise PreconditionError(f"interaction table has n={interactions.n}, value table n={table.n}")
    rebuilt = zeta_transform(interactions.effects) + interactions.baseline
    residual = np.abs(table.values - rebuilt)
    worst = int(np.argmax(residual))
    scale = table.scale()
    max_res = float(residual[worst])
    return MatchingReport(max_res, worst, scale, rel_tol, max_res <= rel_tol * scale)


def _disjoint_masks(n: int, T: int) -> np.ndarray:
    masks = all_masks(n)
    return masks[(masks & T) == 0]


def marginal_benefits(u: np.ndarray, T: int, S: np.ndarray) -> np.ndarray:
    """Vectorized Δu_T(S) = Σ_{L⊆T} (-1)^{|T|-|L|} u(L ∪ S) for an array of masks S disjoint from T."""
    size = popcount(T)
    out = np.zeros(S.shape, dtype=np.float64)
    for L in submasks(T):
        if (size - popcount(L)) % 2:
            out -= u[S | L]
        else:
            out += u[S | L]
    return out


def marginal_benefit(table: ValueTable, T: int, S: int) -> float:
    T, S = check_mask(T, table.n), check_mask(S, table.n)
    if T & S:
        raise PreconditionError(f"marginal benefit needs disjoint T={T} and S={S}")
    return float(marginal_benefits(table.utilities(), T, np.array([S]))[0])


def conditional_interaction(table: ValueTable, S: int, i: int) -> float:
    """Dividend of S computed with player i held present."""
    S = check_mask(S, table.n)
    if not 0 <= i < table.n:
        raise PreconditionError(f"player {i} out of range for n={table.n}")
    if S >> i & 1:
        raise PreconditionError(f"player {i} already belongs to S={S}")
    u = table.utilities()
    size = popcount(S)
    total = 0.0
    for L in submasks(S):
        term = u[L | (1 << i)]
        total += -term if (size - popcount(L)) % 2 else term
    return float(total)
