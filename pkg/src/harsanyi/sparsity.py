"""Concept-sparsity diagnostics.

Order-average utilities and the monotonicity / polynomial-lower-bound checks
on them, per-order sums and cancellation ratios of dividends, valid-concept
counts at a threshold, the normalized strength curve, the base-n
decomposition of order sums with its bound on the exponent slack δ, and the
resulting per-order bound on the number of valid concepts.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .errors import AssumptionViolation, DegenerateGameError, PreconditionError
from .game_oracle import ValueTable
from .interaction_core import InteractionTable, harsanyi_dividends
from .subset_algebra import all_masks, binomial

REPORT_FORMAT = "harsanyi-sr/1"
CURVE_CSV_HEADER = "rank,strength,mask,order,effect"
DEFAULT_TAU_FRACTION = 0.05
P_MAX = 64.0
P_RESOLUTION = 1e-6
LAMBDA_EPS = 1e-12
DELTA_SLACK = 1e-9
AUTO_M_REL = 1e-12


# ---------------------------------------------------------------------------
# order-average outputs and assumption checks


@dataclass
class OrderProfile:
    u_bar: np.ndarray

    @property
    def n(self) -> int:
        return int(self.u_bar.shape[0]) - 1

    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.u_bar))))


def order_average_outputs(table: ValueTable) -> OrderProfile:
    n = table.n
    sizes = np.bitwise_count(all_masks(n))
    totals = np.bincount(sizes, weights=table.utilities(), minlength=n + 1)
    u_bar = np.array([totals[m] / binomial(n, m) for m in range(n + 1)])
    u_bar[0] = 0.0
    return OrderProfile(u_bar)


@dataclass
class Verdict:
    passed: bool
    violations: list = field(default_factory=list)


def check_weak_monotonicity(profile: OrderProfile) -> Verdict:
    """u_bar must be non-decreasing; violations are the pairs (m', m), m' < m, with u_bar[m'] > u_bar[m]."""
    u = profile.u_bar
    slack = 1e-12 * profile.scale()
    violations = [
        (mp, m)
        for m in range(1, profile.n + 1)
        for mp in range(m)
        if u[mp] > u[m] + slack
    ]
    return Verdict(not violations, violations)


def _lower_bound_violations(profile: OrderProfile, p: float) -> list:
    u = profile.u_bar
    out = []
    for m in range(1, profile.n + 1):
        if u[m] <= 0:
            continue
        for mp in range(1, m + 1):
            # Relative slack only: a hard zero at m' must stay infeasible for every p.
            rhs = (mp / m) ** p * u[m]
            if u[mp] < rhs * (1 - 1e-12):
                out.append((mp, m))
    return out


def check_polynomial_lower_bound(profile: OrderProfile, p: float) -> Verdict:
    """Check u_bar[m'] >= (m'/m)**p * u_bar[m] for every 1 <= m' <= m <= n."""
    if not p > 1:
        raise PreconditionError(f"polynomial degree p must exceed 1, got {p}")
    violations = _lower_bound_violations(profile, p)
    return Verdict(not violations, violations)


def fit_min_p(profile: OrderProfile) -> Optional[float]:
    """Smallest p > 1 (to within 1e-6) passing the lower-bound check, or None if none below 64."""
    def ok(p):
        return not _lower_bound_violations(profile, p)

    lo, hi = 1.0, P_MAX
    if not ok(hi):
        return None
    if ok(lo + P_RESOLUTION):
        return lo + P_RESOLUTION
    while hi - lo > P_RESOLUTION:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# order sums, the order-average identity, counts and curves


@dataclass
class OrderSums:
    A: np.ndarray
    abs_A: np.ndarray
    eta: np.ndarray
    fully_cancelled: np.ndarray

    @property
    def n(self) -> int:
        return int(self.A.shape[0]) - 1


def order_sums(interactions: InteractionTable) -> OrderSums:
    n = interactions.n
    sizes = np.bitwise_count(all_masks(n))
    effects = interactions.effects
    A = np.bincount(sizes, weights=effects, minlength=n + 1)
    abs_A = np.bincount(sizes, weights=np.abs(effects), minlength=n + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = np.where(abs_A > 0, A / np.where(abs_A > 0, abs_A, 1.0), 0.0)
    # A fully cancelled order has nonzero magnitude but a zero sum.
    fully_cancelled = (abs_A > 0) & (A == 0)
    return OrderSums(A, abs_A, eta, fully_cancelled)


@dataclass
class Lemma2Report:
    order_cap: int
    predicted: np.ndarray
    residuals: np.ndarray
    max_residual: float
    scale: float
    passed: bool


def verify_lemma2(profile: OrderProfile, sums: OrderSums, M: Optional[int] = None, rel_tol: float = 1e-9) -> Lemma2Report:
    """Compare u_bar[m] with Σ_{k=1..M} C(m,k)/C(n,k)·A[k] for every m.

    If some A[k] with k > M is nonzero the cap is raised to n.
    """
    n = profile.n
    A = sums.A
    M = n if M is None else int(M)
    scale_a = max(1.0, float(np.max(np.abs(A))))
    if np.any(np.abs(A[M + 1:]) > rel_tol * scale_a):
        M = n
    predicted = np.array([
        sum(binomial(m, k) / binomial(n, k) * A[k] for k in range(1, M + 1))
        for m in range(n + 1)
    ])
    residuals = np.abs(profile.u_bar - predicted)
    scale = max(profile.scale(), scale_a)
    worst = float(residuals.max())
    return Lemma2Report(M, predicted, residuals, worst, scale, worst <= rel_tol * scale)


def lemma3_matrix(n: int, M: int) -> list:
    """Rows m = n-1 .. n-M, columns j = 1 .. M, entries C(m, j-1)/C(n, j), as exact fractions."""
    return [[Fraction(binomial(m, j - 1), binomial(n, j)) for j in range(1, M + 1)]
            for m in range(n - 1, n - M - 1, -1)]


def _exact_det(rows: list) -> Fraction:
    a = [list(r) for r in rows]
    size = len(a)
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, size):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, size):
                    a[r][c] -= f * a[col][c]
    return det


@dataclass
class DeterminantCheck:
    """Determinant of the order-sum coefficient matrix against 1/Π_{k<=M} C(n,k).

    ``passed`` is the literal comparison with the positive value. Listing the
    rows from m = n-1 downwards puts the sign (-1)**(M(M-1)/2) on the
    determinant, so ``corrected_passed`` compares against that signed value.
    """

    n: int
    M: int
    computed: float
    computed_lu: float
    expected: float
    passed: bool
    signed_expected: float
    corrected_passed: bool


def verify_lemma3_determinant(n: int, M: int, rel_tol: float = 1e-9) -> DeterminantCheck:
    if not 1 <= M < n <= 16:
        raise PreconditionError(f"determinant check needs 1 <= M < n <= 16, got n={n}, M={M}")
    rows = lemma3_matrix(n, M)
    computed = float(_exact_det(rows))
    lu = float(np.linalg.det(np.array([[float(x) for x in r] for r in rows])))
    expected = float(Fraction(1, math.prod(binomial(n, k) for k in range(1, M + 1))))
    signed = expected if (M * (M - 1) // 2) % 2 == 0 else -expected

    def close(a, b):
        return abs(a - b) <= rel_tol * abs(b)

    return DeterminantCheck(n, M, computed, lu, expected, close(computed, expected), signed, close(computed, signed))


@dataclass
class CurvePoint:
    rank: int
    strength: float
    mask: int
    order: int
    effect: float


def normalized_strength_curve(interactions: InteractionTable) -> list[CurvePoint]:
    """Nonzero dividends ranked by |I(S)| / max|I|, descending; ties by ascending mask."""
    effects = interactions.effects
    nz = np.flatnonzero(effects != 0)
    if nz.size == 0:
        return []
    mags = np.abs(effects[nz])
    order = np.lexsort((nz, -mags))
    top = float(mags.max())
    return [
        CurvePoint(rank + 1, float(mags[j] / top), int(nz[j]), int(nz[j]).bit_count(), float(effects[nz[j]]))
        for rank, j in enumerate(order)
    ]


def curve_csv(curve: list[CurvePoint]) -> str:
    lines = [CURVE_CSV_HEADER]
    lines += [f"{c.rank},{c.strength!r},{c.mask},{c.order},{c.effect!r}" for c in curve]
    return "\n".join(lines) + "\n"


def count_valid_concepts(interactions: InteractionTable, tau: float) -> np.ndarray:
    """R[k] = number of order-k coalitions with |I(S)| >= tau."""
    if not tau > 0:
        raise PreconditionError(f"threshold tau must be positive, got {tau}")
    n = interactions.n
    sizes = np.bitwise_count(all_masks(n))
    valid = np.abs(interactions.effects) >= tau
    return np.bincount(sizes[valid], minlength=n + 1).astype(np.int64)


def select_tau(interactions: InteractionTable, table: ValueTable, fraction: float = DEFAULT_TAU_FRACTION) -> float:
    mean_abs = float(np.mean(np.abs(table.utilities()[1:])))
    if mean_abs == 0.0:
        raise DegenerateGameError("all utilities are zero; no threshold can be derived")
    return fraction * mean_abs


# ---------------------------------------------------------------------------
# decomposition of order sums and the bound on valid concepts


@dataclass
class OrderDecomposition:
    k: int
    ratio: float
    case: int
    lambda_tilde: float
    delta_k: Optional[float]
    lambda_k: float
    digits: list
    high_part: float
    reconstructed: float
    residual: float


@dataclass
class Theorem5Decomposition:
    n: int
    p: float
    floor_p: int
    order_cap: int
    u_bar_1: float
    orders: list
    status: str
    delta: Optional[float] = None
    m0: Optional[int] = None
    lambda_: Optional[float] = None
    a: list = field(default_factory=list)
    delta_upper_bound: Optional[float] = None
    bound_satisfied: Optional[bool] = None
    digit_ranges_ok: bool = True
    max_relative_residual: float = 0.0

    def order(self, k: int) -> Optional[OrderDecomposition]:
        return next((o for o in self.orders if o.k == k), None)

    def leading_term(self, k: int) -> float:
        """λ^(k)·n^{p+δ} + Σ_i a_i^(k)·n^i, i.e. A^(k)/ū^(1) rebuilt from the stored parts."""
        o = self.order(k)
        if o is None:
            return 0.0
        total = sum(a * float(self.n) ** i for i, a in enumerate(o.digits))
        if o.lambda_k != 0.0 and self.delta is not None:
            total += o.lambda_k * float(self.n) ** (self.p + self.delta)
        return total


def _base_n_digits(value: float, n: int) -> list:
    """Base-n digits of floor(value), least significant first; at least one digit."""
    integer = int(math.floor(value))
    digits = []
    while integer:
        integer, d = divmod(integer, n)
        digits.append(d)
    return digits or [0]


def theorem5_decompose(sums: OrderSums, profile: OrderProfile, p: float, M: int) -> Theorem5Decomposition:
    """Write each A^(k) as (λ^(k) n^{p+δ} + Σ_{i<⌊p⌋} a_i^(k) n^i)·ū^(1) and bound δ.

    A^(k)/ū^(1) is expanded in base n on its magnitude, the fractional part
    folded into the lowest digit and the sign applied to every digit. Digits of
    degree >= ⌊p⌋ are merged into ±n^{p+δ^(k)}; δ is the largest δ^(k) and
    λ^(k) = ±n^{δ^(k)-δ}. The bound on δ is evaluated at the first
    m0 = n, n-1, ..., n-M where λ = Σ_k C(m0,k)/C(n,k)·λ^(k) is nonzero.
    """
    n = profile.n
    if not p > 1:
        raise PreconditionError(f"polynomial degree p must exceed 1, got {p}")
    M = int(M)
    if not 0 <= M <= n:
        raise PreconditionError(f"order cap must satisfy 0 <= M <= n, got {M}")
    u1 = float(profile.u_bar[1])
    if not u1 > 0:
        raise AssumptionViolation(f"average first-order utility must be positive, got {u1}")
    A = sums.A
    scale_a = max(1.0, float(np.max(np.abs(A))))
    beyond = np.abs(A[M + 1:])
    if beyond.size and beyond.max() > 1e-9 * scale_a:
        raise PreconditionError(f"order sums beyond the cap M={M} are nonzero")

    fp = int(math.floor(p))
    nf = float(n)
    orders = []
    for k in range(1, M + 1):
        ratio = float(A[k]) / u1
        sign = -1.0 if ratio < 0 else 1.0
        mag = abs(ratio)
        raw = _base_n_digits(mag, n)
        frac = mag - math.floor(mag)
        low = [float(raw[i]) if i < len(raw) else 0.0 for i in range(fp)]
        low[0] += frac
        high = sum(d * n**i for i, d in enumerate(raw) if i >= fp)
        digits = [sign * d for d in low]
        if high:
            case, lam_t, delta_k = 2, sign, math.log(high) / math.log(n) - p
        else:
            case, lam_t, delta_k = 1, 0.0, None
        orders.append(OrderDecomposition(k, ratio, case, lam_t, delta_k, 0.0, digits, float(high), 0.0, 0.0))

    case2 = [o for o in orders if o.case == 2]
    decomp = Theorem5Decomposition(n, float(p), fp, M, u1, orders, status="case1_only")
    if case2:
        delta = max(o.delta_k for o in case2)
        decomp.delta = delta
        decomp.status = "ok"
        for o in case2:
            o.lambda_k = o.lambda_tilde * nf ** (o.delta_k - delta)

    ok = True
    worst = 0.0
    for o in orders:
        ok &= abs(o.digits[0]) < n
        ok &= all(float(d).is_integer() and 0 <= abs(d) <= n - 1 for d in o.digits[1:])
        ok &= abs(o.lambda_k) <= 1.0 + 1e-12
        o.reconstructed = decomp.leading_term(o.k) * u1
        A_k = float(A[o.k])
        o.residual = abs(o.reconstructed - A_k)
        if A_k != 0:
            worst = max(worst, o.residual / abs(A_k))
        elif o.residual:
            worst = math.inf
    decomp.digit_ranges_ok = bool(ok)
    decomp.max_relative_residual = worst

    if decomp.delta is None:
        return decomp

    for m0 in range(n, n - M - 1, -1):
        weights = [binomial(m0, o.k) / binomial(n, o.k) for o in orders]
        lam = sum(w * o.lambda_k for w, o in zip(weights, orders))
        if abs(lam) > LAMBDA_EPS:
            break
    else:
        decomp.status = "lambda_zero"
        return decomp
    decomp.m0 = m0
    decomp.lambda_ = lam
    decomp.a = [sum(w * o.digits[i] for w, o in zip(weights, orders)) for i in range(fp)]
    tail = sum(a_i * nf ** (i - p) for i, a_i in enumerate(decomp.a))
    arg = (1.0 - tail) / lam if lam > 0 else tail / (-lam)
    bound = math.log(arg) / math.log(n) if arg > 0 else -math.inf
    decomp.delta_upper_bound = bound
    decomp.bound_satisfied = bool(decomp.delta <= bound + DELTA_SLACK)
    return decomp


@dataclass
class Theorem6Result:
    k: int
    R_k: int
    eta_k: float
    bound: Optional[float]
    satisfied: Optional[bool]
    status: str


def theorem6_bound(
    decomp: Theorem5Decomposition,
    sums: OrderSums,
    profile: OrderProfile,
    tau: float,
    k: int,
    valid_counts: np.ndarray,
) -> Theorem6Result:
    """R^(k) <= ū^(1)/(τ|η^(k)|) · |λ^(k) n^{p+δ} + Σ_i a_i^(k) n^i|.

    ``valid_counts`` is the output of ``count_valid_concepts`` at the same τ.
    """
    if not tau > 0:
        raise PreconditionError(f"threshold tau must be positive, got {tau}")
    R_k = int(valid_counts[k])
    eta = float(sums.eta[k])
    if eta == 0.0:
        status = "undefined_full_cancellation" if sums.abs_A[k] > 0 else "undefined_no_concepts"
        return Theorem6Result(k, R_k, eta, None, None, status)
    bound = profile.u_bar[1] / (tau * abs(eta)) * abs(decomp.leading_term(k))
    status = "case2_regime" if abs(eta) <= 1.0 / profile.n else "ok"
    return Theorem6Result(k, R_k, eta, float(bound), bool(R_k <= bound * (1 + 1e-12)), status)


# ---------------------------------------------------------------------------
# orchestration


@dataclass
class SparsityReport:
    n: int
    profile: OrderProfile
    sums: OrderSums
    tau: float
    tau_source: str
    R: np.ndarray
    curve: list
    monotonicity: Verdict
    min_feasible_p: Optional[float]
    p: Optional[float]
    p_source: str
    lower_bound: Optional[Verdict]
    order_cap: int
    order_cap_source: str
    theorem5: Optional[Theorem5Decomposition]
    theorem5_status: str
    theorem6: list

    def to_dict(self) -> dict:
        n = self.n
        t5 = None
        if self.theorem5 is not None:
            t5 = asdict(self.theorem5)
            t5["lambda"] = t5.pop("lambda_")
        return {
            "format": REPORT_FORMAT,
            "n": n,
            "profile": {"u_bar": self.profile.u_bar},
            "order_sums": {
                "A": self.sums.A,
                "abs_A": self.sums.abs_A,
                "eta": self.sums.eta,
                "eta_times_n": self.sums.eta * n,
                "fully_cancelled": self.sums.fully_cancelled,
                "case2_regime": [bool(abs(e) <= 1.0 / n) for e in self.sums.eta],
            },
            "tau": self.tau,
            "tau_source": self.tau_source,
            "R": self.R,
            "R_total": int(self.R.sum()),
            "assumptions": {
                "weak_monotonicity": asdict(self.monotonicity),
                "min_feasible_p": self.min_feasible_p if self.min_feasible_p is not None else "infeasible",
                "polynomial_lower_bound": None if self.lower_bound is None else asdict(self.lower_bound),
            },
            "p": self.p,
            "p_source": self.p_source,
            "order_cap": self.order_cap,
            "order_cap_source": self.order_cap_source,
            "theorem5": t5,
            "theorem5_status": self.theorem5_status,
            "theorem6": [asdict(r) for r in self.theorem6],
            "curve": [asdict(c) for c in self.curve],
        }


Auto = Union[float, int, str, None]


def _is_auto(x) -> bool:
    return x is None or x == "auto"


def full_report(table: ValueTable, p: Auto = "auto", tau: Auto = "auto", M: Auto = "auto") -> SparsityReport:
    interactions = harsanyi_dividends(table)
    profile = order_average_outputs(table)
    sums = order_sums(interactions)
    n = table.n

    if _is_auto(tau):
        tau_value, tau_source = select_tau(interactions, table), "auto"
    else:
        tau_value, tau_source = float(tau), "user"
    R = count_valid_concepts(interactions, tau_value)

    monotonicity = check_weak_monotonicity(profile)
    min_p = fit_min_p(profile)
    if _is_auto(p):
        p_value, p_source = min_p, "auto"
    else:
        p_value, p_source = float(p), "user"
    lower_bound = check_polynomial_lower_bound(profile, p_value) if p_value is not None else None

    if _is_auto(M):
        scale = table.scale()
        nonzero = [k for k in range(1, n + 1) if sums.abs_A[k] > AUTO_M_REL * scale]
        M_value, M_source = (max(nonzero) if nonzero else 0), "auto"
    else:
        M_value, M_source = int(M), "user"

    decomp = None
    if p_value is None:
        status = "skipped: no feasible p"
    elif M_value == 0:
        status = "skipped: no nonzero interactions"
    else:
        try:
            decomp = theorem5_decompose(sums, profile, p_value, M_value)
            status = decomp.status
        except (AssumptionViolation, PreconditionError) as exc:
            status = f"skipped: {exc}"

    theorem6 = []
    if decomp is not None:
        theorem6 = [theorem6_bound(decomp, sums, profile, tau_value, k, R) for k in range(1, n + 1)]

    return SparsityReport(
        n=n,
        profile=profile,
        sums=sums,
        tau=tau_value,
        tau_source=tau_source,
        R=R,
        curve=normalized_strength_curve(interactions),
        monotonicity=monotonicity,
        min_feasible_p=min_p,
        p=p_value,
        p_source=p_source,
        lower_bound=lower_bound,
        order_cap=M_value,
        order_cap_source=M_source,
        theorem5=decomp,
        theorem5_status=status,
        theorem6=theorem6,
    )
