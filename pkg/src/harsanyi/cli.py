"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 oracle
protocol or process error, 4 degenerate game.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import attribution as attr
from . import serialization
from .errors import (
    AssumptionViolation,
    DegenerateGameError,
    FormatError,
    OracleError,
    PreconditionError,
    RangeError,
)
from .game_oracle import (
    VALUE_TABLE_FORMAT,
    ExternalOracle,
    ValueTable,
    save_value_table,
    tabulate,
    value_table_from_document,
)
from .interaction_core import (
    INTERACTION_TABLE_FORMAT,
    harsanyi_dividends,
    interaction_document,
    load_interaction_table,
    verify_universal_matching,
)
from .sparsity import curve_csv, full_report
from .subset_algebra import MAX_N, mask_from_indices, zeta_transform
from .synthetic import (
    GAME_SPEC_FORMAT,
    NoisySpec,
    OrSpec,
    ParitySpec,
    PlantedSpec,
    game_from_spec,
    load_game_spec,
    random_planted_spec,
    random_polynomial_spec,
    save_game_spec,
    spec_from_document,
)
from .verification import SUITES, run_suites

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_ORACLE, EXIT_DEGENERATE = 0, 1, 2, 3, 4
DEFAULT_MAX_N = 20


class InputError(Exception):
    pass


def max_n() -> int:
    raw = os.environ.get("HARSANYI_MAX_N")
    if raw is None:
        return DEFAULT_MAX_N
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"HARSANYI_MAX_N must be an integer, got {raw!r}") from None
    if not 1 <= value <= MAX_N:
        raise InputError(f"HARSANYI_MAX_N must lie in [1, {MAX_N}], got {value}")
    return value


def _check_cap(n: int) -> None:
    cap = max_n()
    if n > cap:
        raise InputError(f"n={n} exceeds the cap {cap} (set HARSANYI_MAX_N, at most {MAX_N})")


def _write_text(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _players(text: str, n: int) -> int:
    try:
        indices = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise InputError(f"player list must be comma-separated integers, got {text!r}") from None
    if not indices:
        raise InputError("player list is empty")
    bad = [i for i in indices if not 0 <= i < n]
    if bad:
        raise InputError(f"player index {bad[0]} out of range for n={n}")
    return mask_from_indices(indices, n)


def load_source(args) -> ValueTable:
    """Value table from --input (value table, interaction table or game spec) or --command."""
    if getattr(args, "command_line", None):
        if args.n is None:
            raise InputError("--command needs --n")
        _check_cap(args.n)
        with ExternalOracle(args.command_line, args.n, timeout=args.timeout) as oracle:
            return tabulate(oracle)
    if not args.input:
        raise InputError("an --input file (or --command for an external model) is required")
    doc = serialization.read_json(args.input)
    fmt = serialization.require(doc, "format", args.input)
    n = doc.get("n")
    if isinstance(n, int) and not isinstance(n, bool):
        _check_cap(n)
    if fmt == VALUE_TABLE_FORMAT:
        return value_table_from_document(doc, args.input)
    if fmt == GAME_SPEC_FORMAT:
        return tabulate(game_from_spec(spec_from_document(doc, args.input)))
    if fmt == INTERACTION_TABLE_FORMAT:
        it = load_interaction_table(args.input)
        return ValueTable(zeta_transform(it.effects) + it.baseline)
    raise FormatError(f"{args.input}: key 'format' has unsupported value {fmt!r}")


def cmd_compute(args) -> int:
    table = load_source(args)
    it = harsanyi_dividends(table)
    scale = table.scale()
    nonzero = int(np.count_nonzero(np.abs(it.effects) > 1e-12 * scale))
    if args.format == "csv":
        lines = ["mask,order,effect"] + [
            f"{m},{m.bit_count()},{float(e)!r}" for m, e in enumerate(it.effects)
        ]
        text = "\n".join(lines) + "\n"
    else:
        text = serialization.dumps(interaction_document(it))
    _write_text(args.output, text)
    summary = f"n={it.n} nonzero={nonzero} max_abs={float(np.max(np.abs(it.effects)))!r}"
    print(summary, file=sys.stderr if args.output in (None, "-") else sys.stdout)
    return EXIT_OK


def _auto_or_float(text):
    return "auto" if text == "auto" else float(text)


def cmd_sparsity(args) -> int:
    table = load_source(args)
    try:
        p = _auto_or_float(args.p)
        tau = _auto_or_float(args.tau)
        cap = "auto" if args.order_cap == "auto" else int(args.order_cap)
    except ValueError as exc:
        raise InputError(f"bad numeric flag: {exc}") from None
    report = full_report(table, p=p, tau=tau, M=cap)
    if args.format == "csv":
        _write_text(args.output, curve_csv(report.curve))
    else:
        _write_text(args.output, serialization.dumps(report.to_dict()))
    if args.csv:
        _write_text(args.csv, curve_csv(report.curve))
    if args.output not in (None, "-"):
        mono = "pass" if report.monotonicity.passed else "fail"
        print(
            f"n={report.n} tau={report.tau!r} R_total={int(report.R.sum())} "
            f"curve={len(report.curve)} monotonicity={mono} p={report.p!r} "
            f"decomposition={report.theorem5_status}"
        )
    return EXIT_OK


def cmd_attribution(args) -> int:
    table = load_source(args)
    tol = args.tol
    it = harsanyi_dividends(table)
    n = table.n
    phi_def = attr.shapley_values_definitional(table).phi
    phi_h = attr.shapley_values_from_harsanyi(it).phi
    delta = np.abs(phi_def - phi_h)
    scale = table.scale()
    out = {
        "format": "harsanyi-attr/1",
        "n": n,
        "tolerance": tol,
        "shapley": {
            "definitional": phi_def,
            "harsanyi": phi_h,
            "delta": delta,
            "agree": bool(delta.max() <= tol * scale),
        },
    }
    if args.order is not None and args.target is None:
        raise InputError("--order needs --target")
    if args.target is not None:
        T = _players(args.target, n)
        a = attr.shapley_interaction_index(table, T)
        b = attr.shapley_interaction_from_harsanyi(it, T)
        target = {
            "mask": T,
            "players": [i for i in range(n) if T >> i & 1],
            "harsanyi_dividend": float(it.effects[T]),
            "shapley_interaction": {"definitional": a, "harsanyi": b, "delta": abs(a - b)},
        }
        if args.order is not None:
            if not 1 <= args.order <= n:
                raise InputError(f"--order must lie in [1, {n}], got {args.order}")
            a = attr.shapley_taylor_index(table, T, args.order)
            b = attr.shapley_taylor_from_harsanyi(it, T, args.order)
            target["shapley_taylor"] = {
                "order": args.order, "definitional": a, "harsanyi": b, "delta": abs(a - b)
            }
        out["target"] = target
    _write_text(args.output, serialization.dumps(out))
    return EXIT_OK


def cmd_verify(args) -> int:
    lines: list[str] = []
    results = []
    if args.input:
        table = load_source(args)
        interactions = load_interaction_table(args.interactions) if args.interactions else None
        rep = verify_universal_matching(table, args.tol, interactions)
        status = "PASS" if rep.passed else "FAIL"
        lines.append(
            f"{status} matching/{Path(args.interactions or args.input).name}: "
            f"worst={rep.max_residual:.3e} worst_mask={rep.worst_mask} scale={rep.scale!r}"
        )
        results.append({"name": "matching", "passed": rep.passed, "worst": rep.max_residual,
                        "worst_mask": rep.worst_mask})
        failed = not rep.passed
    else:
        if not 1 <= args.n <= 12:
            raise InputError(f"exhaustive suites need 1 <= n <= 12, got {args.n}")
        if args.n < 2 and args.suite in ("axioms", "all"):
            raise InputError("the axiom suite needs n >= 2")
        if args.trials < 1:
            raise InputError("--trials must be positive")
        checks, extra = run_suites(args.suite, args.n, args.trials, args.seed, args.tol)
        for c in checks:
            lines.append(c.line())
            results.append({"suite": c.suite, "name": c.name, "passed": c.passed, "cases": c.cases,
                            "worst": c.worst, "failures": c.failures})
        lines += extra
        failed = any(not c.passed for c in checks)
    total = len(results)
    lines.append(f"{'FAILED' if failed else 'OK'}: {total - sum(not r['passed'] for r in results)}/{total} checks passed")
    print("\n".join(lines))
    if args.output:
        serialization.write_json(args.output, {"format": "harsanyi-verify/1", "checks": results,
                                               "passed": not failed})
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_synth(args) -> int:
    if args.spec_out is None and args.output is None:
        raise InputError("synth needs --spec-out and/or --output")
    n = args.n
    if n is None:
        raise InputError("synth needs --n")
    if not 1 <= n <= MAX_N:
        raise InputError(f"--n must lie in [1, {MAX_N}]")
    _check_cap(n)
    rng = np.random.default_rng(args.seed)
    kind = args.kind
    if kind == "planted":
        if args.min_order < 1 or args.max_order < args.min_order or args.min_order > n:
            raise InputError("need 1 <= --min-order <= --max-order and --min-order <= n")
        max_distinct = sum(math.comb(n, k) for k in range(args.min_order, min(args.max_order, n) + 1))
        if not 0 <= args.concepts <= max_distinct:
            raise InputError(f"--concepts must lie in [0, {max_distinct}]")
        spec = random_planted_spec(n, args.concepts, rng, orders=(args.min_order, args.max_order),
                                   magnitude=(args.min_coef, args.max_coef), positive=args.positive)
    elif kind == "polynomial":
        if args.degree < 1 or args.terms < 0:
            raise InputError("need --degree >= 1 and --terms >= 0")
        spec = random_polynomial_spec(n, args.degree, args.terms, rng)
    elif kind == "noisy":
        if args.sigma is None or args.sigma < 0:
            raise InputError("noisy games need --sigma >= 0")
        inner = load_game_spec(args.inner) if args.inner else PlantedSpec(n, ())
        if inner.n != n:
            raise InputError(f"inner game has n={inner.n}, expected {n}")
        spec = NoisySpec(inner, float(args.sigma), int(args.seed))
    elif kind == "parity":
        spec = ParitySpec(n)
    elif kind == "or":
        if not args.members:
            raise InputError("OR games need a nonempty --members list")
        spec = OrSpec(n, _players(args.members, n), float(args.payoff))
    else:  # argparse restricts choices
        raise InputError(f"unknown kind {kind!r}")
    oracle = game_from_spec(spec)
    if args.spec_out:
        save_game_spec(spec, args.spec_out)
    if args.output:
        save_value_table(tabulate(oracle), args.output)
    return EXIT_OK


def _add_source(p):
    p.add_argument("--input", help="value table, interaction table or game spec file")
    p.add_argument("--command", dest="command_line", help="external model command (stdio JSON protocol)")
    p.add_argument("--n", type=int, help="player count for --command")
    p.add_argument("--timeout", type=float, default=None, help="seconds to wait per external reply")


def _add_common(p, fmt=True):
    p.add_argument("--output", help="output path (stdout if omitted)")
    if fmt:
        p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harsanyi", description="Exact Harsanyi interaction toolkit")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("compute", help="Harsanyi dividends of a game")
    _add_source(p)
    _add_common(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("sparsity", help="sparsity report and strength curve")
    _add_source(p)
    _add_common(p)
    p.add_argument("--tau", default="auto")
    p.add_argument("--p", default="auto")
    p.add_argument("--order-cap", default="auto")
    p.add_argument("--csv", help="also write the strength curve as CSV here")
    p.set_defaults(func=cmd_sparsity)

    p = sub.add_parser("attribution", help="Shapley values and interaction indices, two routes")
    _add_source(p)
    _add_common(p)
    p.add_argument("--target", help="comma-separated player indices of T")
    p.add_argument("--order", type=int, help="Shapley-Taylor order k")
    p.set_defaults(func=cmd_attribution)

    p = sub.add_parser("verify", help="run the identity suites")
    _add_source(p)
    _add_common(p, fmt=False)
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--interactions", help="interaction table to check against --input")
    p.set_defaults(func=cmd_verify, n=8)

    p = sub.add_parser("synth", help="generate synthetic games")
    p.add_argument("kind", choices=("planted", "polynomial", "noisy", "parity", "or"))
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "--out", dest="output", help="value table output path")
    p.add_argument("--spec-out", help="game spec output path")
    p.add_argument("--concepts", type=int, default=10)
    p.add_argument("--min-order", type=int, default=1)
    p.add_argument("--max-order", type=int, default=4)
    p.add_argument("--min-coef", type=float, default=0.5)
    p.add_argument("--max-coef", type=float, default=2.0)
    p.add_argument("--positive", action="store_true", help="planted coefficients all positive")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--terms", type=int, default=8)
    p.add_argument("--sigma", type=float)
    p.add_argument("--inner", help="game spec wrapped by the noisy game (default: zero game)")
    p.add_argument("--members", help="comma-separated member players for the OR game")
    p.add_argument("--payoff", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, FormatError, PreconditionError, RangeError, AssumptionViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except DegenerateGameError as exc:
        print(f"degenerate game: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
