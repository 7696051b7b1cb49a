"""Synthetic games with known ground truth.

* planted: sums of pure AND games ``c * [S contains T]``
* polynomial: a finite Taylor expansion around a baseline point, masked by
  replacing absent coordinates with their baseline value
* noisy: another game plus i.i.d. Gaussian noise fixed per mask by a seed
* parity: ``u(S) = +1`` for odd |S|, ``-1`` for even nonempty S, ``u(empty) = 0``
* or_game: ``u(S) = c`` whenever S meets a member set
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import serialization
from .errors import FormatError, PreconditionError
from .game_oracle import FunctionOracle
from .subset_algebra import MAX_N, all_masks, check_mask, check_n

GAME_SPEC_FORMAT = "harsanyi-gs/1"
_CHUNK = 1 << 16
_TWO_POW_53 = float(2**53)


@dataclass(frozen=True)
class PlantedSpec:
    n: int
    concepts: tuple  # ((mask, coefficient), ...)
    baseline_output: float = 0.0
    kind = "planted"


@dataclass(frozen=True)
class PolynomialSpec:
    """Terms are ``(kappa, coefficient)`` where coefficient is the derivative already divided by kappa!."""

    n: int
    b: tuple
    x: tuple
    terms: tuple
    max_degree: int | None = None
    baseline_output: float = 0.0
    kind = "polynomial"


@dataclass(frozen=True)
class NoisySpec:
    inner: "GameSpec"
    sigma: float
    seed: int
    kind = "noisy"

    @property
    def n(self) -> int:
        return self.inner.n


@dataclass(frozen=True)
class ParitySpec:
    n: int
    baseline_output: float = 0.0
    kind = "parity"


@dataclass(frozen=True)
class OrSpec:
    n: int
    members: int
    payoff: float
    baseline_output: float = 0.0
    kind = "or_game"


GameSpec = Union[PlantedSpec, PolynomialSpec, NoisySpec, ParitySpec, OrSpec]


def _finite(value, what):
    value = float(value)
    if not math.isfinite(value):
        raise PreconditionError(f"{what} must be finite, got {value}")
    return value


def planted_game(spec: PlantedSpec) -> FunctionOracle:
    n = check_n(spec.n)
    concepts = []
    for mask, c in spec.concepts:
        mask = check_mask(mask, n)
        if mask == 0:
            raise PreconditionError("planted concepts must have a nonempty mask")
        concepts.append((mask, _finite(c, "planted coefficient")))
    base = float(spec.baseline_output)

    def value(S):
        return base + sum(c for T, c in concepts if S & T == T)

    def vectorized(masks):
        out = np.full(masks.shape, base)
        for T, c in concepts:
            out[(masks & T) == T] += c
        return out

    return FunctionOracle(n, value, vectorized, spec=spec)


def _check_polynomial(spec: PolynomialSpec):
    n = check_n(spec.n)
    b = np.asarray(spec.b, dtype=np.float64)
    x = np.asarray(spec.x, dtype=np.float64)
    if b.shape != (n,) or x.shape != (n,):
        raise PreconditionError(f"polynomial game needs b and x of length {n}")
    terms = []
    for kappa, coeff in spec.terms:
        kappa = np.asarray(kappa, dtype=np.int64)
        if kappa.shape != (n,) or np.any(kappa < 0):
            raise PreconditionError(f"multi-index {kappa.tolist()} must be {n} non-negative integers")
        if spec.max_degree is not None and kappa.sum() > spec.max_degree:
            raise PreconditionError(f"term degree {int(kappa.sum())} exceeds declared M={spec.max_degree}")
        terms.append((kappa, _finite(coeff, "polynomial coefficient")))
    return n, x - b, terms


def polynomial_game(spec: PolynomialSpec) -> FunctionOracle:
    """Masked Taylor polynomial: coordinate i contributes (x_i - b_i) when present, 0 when masked."""
    n, shift, terms = _check_polynomial(spec)
    base = float(spec.baseline_output)

    def vectorized(masks):
        out = np.full(masks.shape, base)
        bits = np.arange(n)
        for start in range(0, masks.shape[0], _CHUNK):
            chunk = masks[start:start + _CHUNK]
            present = ((chunk[:, None] >> bits) & 1).astype(bool)
            d = np.where(present, shift, 0.0)
            acc = np.zeros(chunk.shape[0])
            for kappa, coeff in terms:
                acc += coeff * np.prod(d ** kappa, axis=1)
            out[start:start + _CHUNK] += acc
        return out

    def value(S):
        return float(vectorized(np.array([S], dtype=np.int64))[0])

    return FunctionOracle(n, value, vectorized, spec=spec)


def analytic_harsanyi(spec: PolynomialSpec, S: int) -> float:
    """Dividend of S read off the expansion: terms whose support is exactly S."""
    n, shift, terms = _check_polynomial(spec)
    S = check_mask(S, n)
    if S == 0:
        return 0.0
    total = 0.0
    for kappa, coeff in terms:
        support = sum(1 << i for i in range(n) if kappa[i] > 0)
        if support == S:
            total += coeff * float(np.prod(shift ** kappa))
    return total


def _gaussians(seed: int, words: np.ndarray) -> np.ndarray:
    """Box-Muller on consecutive pairs of raw 64-bit words."""
    w = words.reshape(-1, 2)
    u1 = ((w[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO_POW_53
    u2 = (w[:, 1] >> np.uint64(11)).astype(np.float64) / _TWO_POW_53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def mask_noise(seed: int, masks: np.ndarray) -> np.ndarray:
    """Standard normal draw attached to each mask, a pure function of (seed, mask).

    Mask m owns raw words 2m and 2m+1 of the Philox stream keyed by ``seed``.
    """
    masks = np.asarray(masks, dtype=np.int64)
    if masks.size == 0:
        return np.empty(0)
    top = int(masks.max())
    if masks.size > 1 and masks.size == top + 1 and np.array_equal(masks, np.arange(top + 1)):
        count = 2 * (top + 1)
        words = np.random.Philox(key=seed).random_raw(count + (-count) % 4)[:count]
        return _gaussians(seed, words)
    out = np.empty(masks.shape)
    for j, m in enumerate(masks.tolist()):
        block = np.random.Philox(key=seed, counter=m // 2).random_raw(4)
        off = 2 * (m % 2)
        out[j] = _gaussians(seed, block[off:off + 2])[0]
    return out


def noisy_game(inner: GameSpec, sigma: float, seed: int) -> FunctionOracle:
    sigma = _finite(sigma, "sigma")
    if sigma < 0:
        raise PreconditionError(f"sigma must be non-negative, got {sigma}")
    if int(seed) < 0:
        raise PreconditionError("seed must be a non-negative integer")
    seed = int(seed)
    base = game_from_spec(inner)
    spec = NoisySpec(inner, sigma, seed)
    if sigma == 0:
        return FunctionOracle(base.n, base.evaluate, lambda m: base._evaluate_all(), spec=spec)

    def value(S):
        return base.evaluate(S) + sigma * float(mask_noise(seed, np.array([S]))[0])

    def vectorized(masks):
        return base._evaluate_all() + sigma * mask_noise(seed, masks)

    return FunctionOracle(base.n, value, vectorized, spec=spec)


def parity_game(n: int, baseline_output: float = 0.0) -> FunctionOracle:
    n = check_n(n)
    base = float(baseline_output)

    def vectorized(masks):
        sizes = np.bitwise_count(masks)
        u = np.where(sizes % 2 == 1, 1.0, -1.0)
        u[sizes == 0] = 0.0
        return base + u

    def value(S):
        if S == 0:
            return base
        return base + (1.0 if S.bit_count() % 2 else -1.0)

    return FunctionOracle(n, value, vectorized, spec=ParitySpec(n, base))


def or_game(n: int, members: int, c: float, baseline_output: float = 0.0) -> FunctionOracle:
    n = check_n(n)
    members = check_mask(members, n)
    if members == 0:
        raise PreconditionError("OR game needs a nonempty member set")
    c = _finite(c, "payoff")
    base = float(baseline_output)

    def value(S):
        return base + (c if S & members else 0.0)

    def vectorized(masks):
        return base + np.where((masks & members) != 0, c, 0.0)

    return FunctionOracle(n, value, vectorized, spec=OrSpec(n, members, c, base))


def game_from_spec(spec: GameSpec) -> FunctionOracle:
    if isinstance(spec, PlantedSpec):
        return planted_game(spec)
    if isinstance(spec, PolynomialSpec):
        return polynomial_game(spec)
    if isinstance(spec, NoisySpec):
        return noisy_game(spec.inner, spec.sigma, spec.seed)
    if isinstance(spec, ParitySpec):
        return parity_game(spec.n, spec.baseline_output)
    if isinstance(spec, OrSpec):
        return or_game(spec.n, spec.members, spec.payoff, spec.baseline_output)
    raise PreconditionError(f"unknown game spec {spec!r}")


# ---------------------------------------------------------------------------
# random constructions


def random_planted_spec(
    n: int,
    count: int,
    rng: np.random.Generator,
    orders=(1, 4),
    magnitude=(0.5, 2.0),
    positive: bool = False,
    require_singleton: bool = False,
) -> PlantedSpec:
    """``count`` distinct concepts with orders drawn uniformly from ``orders`` (inclusive)."""
    lo, hi = orders
    hi = min(hi, n)
    seen: set[int] = set()
    concepts = []
    while len(concepts) < count:
        if require_singleton and not concepts:
            k = 1
        else:
            k = int(rng.integers(lo, hi + 1))
        members = rng.choice(n, size=k, replace=False)
        mask = int(sum(1 << int(i) for i in members))
        if mask in seen:
            continue
        seen.add(mask)
        c = float(rng.uniform(*magnitude))
        if not positive and rng.random() < 0.5:
            c = -c
        concepts.append((mask, c))
    return PlantedSpec(n, tuple(concepts))


def random_polynomial_spec(
    n: int,
    max_degree: int,
    n_terms: int,
    rng: np.random.Generator,
    coefficient_range=(-2.0, 2.0),
) -> PolynomialSpec:
    terms = []
    for _ in range(n_terms):
        degree = int(rng.integers(1, max_degree + 1))
        kappa = np.zeros(n, dtype=np.int64)
        for i in rng.integers(0, n, size=degree):
            kappa[i] += 1
        terms.append((tuple(int(k) for k in kappa), float(rng.uniform(*coefficient_range))))
    b = tuple(float(v) for v in rng.uniform(-1, 1, size=n))
    x = tuple(float(v) for v in rng.uniform(-1, 1, size=n))
    return PolynomialSpec(n, b, x, tuple(terms), max_degree, float(rng.uniform(-1, 1)))


# ---------------------------------------------------------------------------
# file format


def spec_to_document(spec: GameSpec) -> dict:
    doc = {"format": GAME_SPEC_FORMAT, "kind": spec.kind, "n": spec.n}
    if isinstance(spec, NoisySpec):
        inner = spec_to_document(spec.inner)
        del inner["format"]
        doc.update(inner=inner, sigma=spec.sigma, seed=spec.seed)
        return doc
    doc["baseline_output"] = float(spec.baseline_output)
    if isinstance(spec, PlantedSpec):
        doc["planted"] = [{"mask": int(m), "coefficient": float(c)} for m, c in spec.concepts]
    elif isinstance(spec, PolynomialSpec):
        doc.update(
            b=list(spec.b),
            x=list(spec.x),
            max_degree=spec.max_degree,
            terms=[{"kappa": [int(k) for k in kappa], "coefficient": float(c)} for kappa, c in spec.terms],
        )
    elif isinstance(spec, OrSpec):
        doc.update(members=int(spec.members), payoff=float(spec.payoff))
    return doc


def _int(doc, key, source, minimum=None):
    value = serialization.require(doc, key, source)
    if isinstance(value, bool) or not isinstance(value, int) or (minimum is not None and value < minimum):
        raise FormatError(f"{source}: key {key!r} must be an integer" + (f" >= {minimum}" if minimum is not None else ""))
    return value


def _num(doc, key, source, default=None):
    if key not in doc and default is not None:
        return default
    value = serialization.require(doc, key, source)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise FormatError(f"{source}: key {key!r} must be a finite number")
    return float(value)


def spec_from_document(doc: dict, source: str = "game spec", nested: bool = False) -> GameSpec:
    if not nested:
        serialization.check_format(doc, GAME_SPEC_FORMAT, source)
    kind = serialization.require(doc, "kind", source)
    n = _int(doc, "n", source, minimum=1)
    if n > MAX_N:
        raise FormatError(f"{source}: key 'n' must be at most {MAX_N}")
    base = _num(doc, "baseline_output", source, default=0.0)
    try:
        if kind == "planted":
            items = serialization.require(doc, "planted", source)
            if not isinstance(items, list):
                raise FormatError(f"{source}: key 'planted' must be an array")
            concepts = tuple((_int(it, "mask", source, 1), _num(it, "coefficient", source)) for it in items)
            spec: GameSpec = PlantedSpec(n, concepts, base)
            planted_game(spec)
        elif kind == "polynomial":
            terms = serialization.require(doc, "terms", source)
            if not isinstance(terms, list):
                raise FormatError(f"{source}: key 'terms' must be an array")
            parsed = []
            for t in terms:
                kappa = serialization.require(t, "kappa", source)
                if not isinstance(kappa, list) or not all(isinstance(k, int) and not isinstance(k, bool) for k in kappa):
                    raise FormatError(f"{source}: key 'kappa' must be an array of integers")
                parsed.append((tuple(kappa), _num(t, "coefficient", source)))
            b = serialization.number_array(serialization.require(doc, "b", source), "b", source)
            x = serialization.number_array(serialization.require(doc, "x", source), "x", source)
            max_degree = doc.get("max_degree")
            if max_degree is not None and (isinstance(max_degree, bool) or not isinstance(max_degree, int)):
                raise FormatError(f"{source}: key 'max_degree' must be an integer or null")
            spec = PolynomialSpec(n, tuple(b.tolist()), tuple(x.tolist()), tuple(parsed), max_degree, base)
            _check_polynomial(spec)
        elif kind == "noisy":
            inner_doc = serialization.require(doc, "inner", source)
            if not isinstance(inner_doc, dict):
                raise FormatError(f"{source}: key 'inner' must be an object")
            inner = spec_from_document(inner_doc, source, nested=True)
            if inner.n != n:
                raise FormatError(f"{source}: key 'inner' has n={inner.n}, outer n={n}")
            sigma = _num(doc, "sigma", source)
            if sigma < 0:
                raise FormatError(f"{source}: key 'sigma' must be non-negative")
            spec = NoisySpec(inner, sigma, _int(doc, "seed", source, minimum=0))
        elif kind == "parity":
            spec = ParitySpec(n, base)
        elif kind == "or_game":
            members = _int(doc, "members", source, minimum=1)
            spec = OrSpec(n, members, _num(doc, "payoff", source), base)
            or_game(n, members, spec.payoff, base)
        else:
            raise FormatError(f"{source}: key 'kind' has unknown value {kind!r}")
    except PreconditionError as exc:
        raise FormatError(f"{source}: {exc}") from exc
    return spec


def save_game_spec(spec: GameSpec, path) -> None:
    serialization.write_json(path, spec_to_document(spec))


def load_game_spec(path) -> GameSpec:
    return spec_from_document(serialization.read_json(path), str(path))
