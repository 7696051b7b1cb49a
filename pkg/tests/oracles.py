"""Brute-force reference computations, written without the package's fast paths."""
from fractions import Fraction
from itertools import combinations, permutations
from math import factorial


def pascal(n, k):
    row = [1]
    for _ in range(n):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row[k] if 0 <= k < len(row) else 0


def players(mask, n):
    return frozenset(i for i in range(n) if mask >> i & 1)


def to_mask(s):
    return sum(1 << i for i in s)


def subsets(s):
    s = sorted(s)
    for r in range(len(s) + 1):
        for c in combinations(s, r):
            yield frozenset(c)


def dividend(u, S, n):
    """Alternating sum over subsets of S, u given as a list indexed by mask."""
    S = players(S, n)
    return sum((-1) ** (len(S) - len(T)) * u[to_mask(T)] for T in subsets(S))


def shapley_by_permutations(u, n):
    """Average marginal contribution over all n! join orders, in exact arithmetic."""
    phi = [Fraction(0)] * n
    for order in permutations(range(n)):
        mask = 0
        for i in order:
            phi[i] += Fraction(u[mask | 1 << i]) - Fraction(u[mask])
            mask |= 1 << i
    return [float(p / factorial(n)) for p in phi]


def det_fraction(rows):
    """Laplace expansion; fine for the tiny matrices used in tests."""
    if len(rows) == 1:
        return rows[0][0]
    total = Fraction(0)
    for j, a in enumerate(rows[0]):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        total += (-1) ** j * a * det_fraction(minor)
    return total
