"""Randomized identity suites behind ``harsanyi verify``.

Each check runs over a seeded corpus and records its worst residual relative
to the tolerance, so a failing run says which identity broke and by how much.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import attribution as attr
from .game_oracle import ValueTable, tabulate
from .interaction_core import (
    conditional_interaction,
    harsanyi_dividends,
    harsanyi_naive_all,
    marginal_benefit,
    verify_universal_matching,
)
from .sparsity import (
    count_valid_concepts,
    fit_min_p,
    order_average_outputs,
    order_sums,
    select_tau,
    theorem5_decompose,
    theorem6_bound,
    verify_lemma2,
    verify_lemma3_determinant,
)
from .subset_algebra import all_masks, mobius_transform, popcount, submasks
from .synthetic import (
    PlantedSpec,
    analytic_harsanyi,
    planted_game,
    random_planted_spec,
    random_polynomial_spec,
    polynomial_game,
)

SUITES = ("axioms", "matching", "theorems", "lemmas")


@dataclass
class Check:
    suite: str
    name: str
    cases: int = 0
    worst: float = 0.0
    failures: int = 0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, residual: float, ok: bool, detail: str = ""):
        self.cases += 1
        self.worst = max(self.worst, float(residual))
        if not ok:
            self.failures += 1
            if not self.detail:
                self.detail = detail

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.suite}/{self.name}: cases={self.cases} worst={self.worst:.3e}"
        if self.failures:
            text += f" failures={self.failures}"
        if self.detail:
            text += f" ({self.detail})"
        return text


def random_table(n: int, rng: np.random.Generator) -> ValueTable:
    return ValueTable(rng.uniform(-1.0, 1.0, size=1 << n))


def _residual_check(check: Check, a, b, scale: float, tol: float, detail=""):
    diff = float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))
    check.record(diff / scale, diff <= tol * scale, detail)


def suite_matching(n: int, trials: int, rng, tol: float) -> list[Check]:
    matching = Check("matching", "universal matching")
    fast_naive = Check("matching", "fast vs naive transform")
    for _ in range(trials):
        table = random_table(n, rng)
        rep = verify_universal_matching(table, tol)
        matching.record(rep.max_residual / rep.scale, rep.passed, f"worst mask {rep.worst_mask}")
        if n <= 10:
            fast = mobius_transform(table.utilities())
            _residual_check(fast_naive, fast, harsanyi_naive_all(table), table.scale(), 1e-12)
    return [matching, fast_naive] if fast_naive.cases else [matching]


def _permute_mask(mask: int, perm) -> int:
    return sum(1 << perm[i] for i in range(len(perm)) if mask >> i & 1)


def suite_axioms(n: int, trials: int, rng, tol: float) -> list[Check]:
    names = ["efficiency", "linearity", "dummy", "symmetry", "anonymity", "recursive", "interaction distribution"]
    checks = {name: Check("axioms", name) for name in names}
    masks = all_masks(n)
    for _ in range(trials):
        table = random_table(n, rng)
        u = table.utilities()
        scale = table.scale()
        I = harsanyi_dividends(table).effects

        _residual_check(checks["efficiency"], I.sum(), u[-1], scale, tol)

        other = random_table(n, rng)
        alpha, beta = rng.uniform(-2, 2, size=2)
        mixed = ValueTable(alpha * table.values + beta * other.values)
        expected = alpha * I + beta * harsanyi_dividends(other).effects
        _residual_check(checks["linearity"], harsanyi_dividends(mixed).effects, expected,
                        max(scale, mixed.scale()) * 3, tol)

        # Player i made a dummy: u(S ∪ {i}) = u(S) + w for every S without i.
        i = int(rng.integers(n))
        w = float(rng.uniform(-1, 1))
        bit = 1 << i
        dummy_u = u.copy()
        without = masks[(masks & bit) == 0]
        dummy_u[without | bit] = dummy_u[without] + w
        d_table = ValueTable(dummy_u)
        dI = harsanyi_dividends(d_table).effects
        touched = (masks & bit) != 0
        touched[bit] = False
        _residual_check(checks["dummy"], dI[touched], 0.0, d_table.scale(), tol)

        # Players i, j made symmetric by copying u(S ∪ {i}) onto u(S ∪ {j}).
        i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
        sym_u = u.copy()
        rest = masks[(masks & ((1 << i) | (1 << j))) == 0]
        sym_u[rest | (1 << j)] = sym_u[rest | (1 << i)]
        sI = harsanyi_dividends(ValueTable(sym_u)).effects
        _residual_check(checks["symmetry"], sI[rest | (1 << i)], sI[rest | (1 << j)], scale, tol)

        perm = rng.permutation(n)
        images = np.array([_permute_mask(int(m), perm) for m in masks])
        perm_u = np.empty_like(u)
        perm_u[images] = u
        pI = harsanyi_dividends(ValueTable(perm_u)).effects
        _residual_check(checks["anonymity"], pI[images], I, scale, tol)

        i = int(rng.integers(n))
        bit = 1 << i
        worst = 0.0
        for S in range(1 << n):
            if S & bit:
                continue
            worst = max(worst, abs(I[S | bit] - (conditional_interaction(table, S, i) - I[S])))
        checks["recursive"].record(worst / scale, worst <= tol * scale)

        T = int(rng.integers(1, 1 << n))
        c = float(rng.uniform(-2, 2))
        and_table = tabulate(planted_game(PlantedSpec(n, ((T, c),))))
        aI = harsanyi_dividends(and_table).effects
        target = np.zeros_like(aI)
        target[T] = c
        err = float(np.max(np.abs(aI - target)))
        checks["interaction distribution"].record(err, err <= 1e-12 * abs(c))
    return list(checks.values())


def suite_theorems(n: int, trials: int, rng, tol: float) -> list[Check]:
    shap = Check("theorems", "Shapley value from dividends")
    sii = Check("theorems", "Shapley interaction index from dividends")
    sti = Check("theorems", "Shapley-Taylor index from dividends")
    t5 = Check("theorems", "order-sum decomposition")
    t6 = Check("theorems", "valid-concept count bound")
    nonempty = [T for T in range(1, 1 << n) if popcount(T) <= 4]
    for _ in range(trials):
        table = random_table(n, rng)
        it = harsanyi_dividends(table)
        scale = table.scale()
        _residual_check(shap, attr.shapley_values_definitional(table).phi,
                        attr.shapley_values_from_harsanyi(it).phi, scale, tol)
        for T in nonempty:
            a = attr.shapley_interaction_index(table, T)
            b = attr.shapley_interaction_from_harsanyi(it, T)
            sii.record(abs(a - b) / scale, abs(a - b) <= tol * scale, f"T={T}")
            for k in range(1, min(n, 4) + 1):
                a = attr.shapley_taylor_index(table, T, k)
                b = attr.shapley_taylor_from_harsanyi(it, T, k)
                sti.record(abs(a - b) / scale, abs(a - b) <= tol * scale, f"T={T}, k={k}")

        spec = random_planted_spec(n, int(rng.integers(2, 8)), rng, positive=True, require_singleton=True)
        game = tabulate(planted_game(spec))
        pit = harsanyi_dividends(game)
        profile = order_average_outputs(game)
        sums = order_sums(pit)
        p = fit_min_p(profile)
        M = max(popcount(m) for m, _ in spec.concepts)
        decomp = theorem5_decompose(sums, profile, p, M)
        ok = decomp.max_relative_residual <= 1e-9 and decomp.digit_ranges_ok
        ok &= decomp.bound_satisfied in (None, True)
        t5.record(decomp.max_relative_residual, ok, f"status={decomp.status}")
        tau = select_tau(pit, game)
        R = count_valid_concepts(pit, tau)
        for k in range(1, n + 1):
            res = theorem6_bound(decomp, sums, profile, tau, k, R)
            if res.bound is not None and abs(res.eta_k) > 1.0 / n:
                t6.record(0.0, bool(res.satisfied), f"k={k}, R={res.R_k}, bound={res.bound:.3g}")
    return [shap, sii, sti, t5, t6]


def suite_lemmas(n: int, trials: int, rng, tol: float) -> tuple[list[Check], list[str]]:
    lemma1 = Check("lemmas", "analytic dividends of polynomial games")
    cor1 = Check("lemmas", "no dividends above the degree cap")
    lemma2 = Check("lemmas", "order averages from order sums")
    marginal = Check("lemmas", "marginal benefit as sum of dividends")
    lemma3 = Check("lemmas", "coefficient determinant (sign-corrected)")
    detail_lines = []
    masks = all_masks(n)
    sizes = np.bitwise_count(masks)
    for _ in range(trials):
        M = int(rng.integers(1, 5))
        spec = random_polynomial_spec(n, M, int(rng.integers(3, 12)), rng)
        game = tabulate(polynomial_game(spec))
        I = harsanyi_dividends(game).effects
        scale = game.scale()
        analytic = np.array([analytic_harsanyi(spec, S) for S in range(1 << n)])
        _residual_check(lemma1, analytic, I, scale, 1e-10)
        above = np.abs(I[sizes >= M + 1])
        worst = float(above.max()) if above.size else 0.0
        cor1.record(worst / scale, worst <= 1e-10 * scale, f"M={M}")

        table = random_table(n, rng)
        it = harsanyi_dividends(table)
        rep = verify_lemma2(order_average_outputs(table), order_sums(it), n, tol)
        lemma2.record(rep.max_residual / rep.scale, rep.passed)

        u = table.utilities()
        T = int(rng.integers(1, 1 << n))
        S = int(rng.integers(0, 1 << n)) & ~T
        lhs = marginal_benefit(table, T, S)
        rhs = sum(it.effects[T | s] for s in submasks(S))
        marginal.record(abs(lhs - rhs) / table.scale(), abs(lhs - rhs) <= tol * table.scale())

    for dn in range(4, 15):
        for dM in range(1, min(6, dn - 1) + 1):
            d = verify_lemma3_determinant(dn, dM)
            rel = abs(d.computed - d.signed_expected) / abs(d.signed_expected)
            lemma3.record(rel, d.corrected_passed, f"n={dn}, M={dM}")
            detail_lines.append(
                f"  n={dn:2d} M={dM} D={d.computed:.6e} 1/prod={d.expected:.6e} "
                f"literal={'match' if d.passed else 'sign differs'}"
            )
    return [lemma1, cor1, lemma2, marginal, lemma3], detail_lines


def run_suites(suite: str, n: int, trials: int, seed: int, tol: float = 1e-9):
    """Run one suite or ``all``; returns (checks, extra report lines)."""
    chosen = SUITES if suite == "all" else (suite,)
    checks: list[Check] = []
    extra: list[str] = []
    for name in chosen:
        rng = np.random.default_rng([seed, SUITES.index(name)])
        if name == "matching":
            checks += suite_matching(n, trials, rng, tol)
        elif name == "axioms":
            checks += suite_axioms(n, trials, rng, tol)
        elif name == "theorems":
            checks += suite_theorems(n, trials, rng, tol)
        elif name == "lemmas":
            found, lines = suite_lemmas(n, trials, rng, tol)
            checks += found
            extra += lines
    return checks, extra
