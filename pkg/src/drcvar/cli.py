"""Command line interface.

Subcommands: ``solve`` and ``export`` operate on JSON model documents,
``knapsack`` and ``portfolio`` run the bundled case-study sweeps and emit
CSV, ``verify`` cross-checks the reformulation against the brute-force
oracle on random instances.  Exit codes: 0 optimal / success, 1 usage or
document error, 2 infeasible, 3 unbounded, 4 iteration limit.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys

import jsonschema
import numpy as np

from .ambiguity import DeviationSpec, LambdaGrid, Norm, PossibilityModel
from .fuzzy import DeviationInterval, FuzzyInterval
from .problems import (PORTFOLIO_ELL, exp_tangents, knapsack_sweep,
                       portfolio_sweep)
from .reform import CvarConstraintSpec, Disutility, build_problem
from .solver import SolverConfig, Status, solve_conic
from .validate import cross_validate

__all__ = ["main", "load_document", "build_from_document", "MODEL_SCHEMA"]

_EXIT_BY_STATUS = {
    Status.OPTIMAL: 0,
    Status.INFEASIBLE: 2,
    Status.UNBOUNDED: 3,
    Status.ITERATION_LIMIT: 4,
}


class DocumentError(Exception):
    """A model document failed to parse or validate."""


_MARGINAL_SCHEMA = {
    "type": "object",
    "properties": {
        "nominal": {"type": "number"},
        "dev_lo": {"type": "number", "minimum": 0},
        "dev_hi": {"type": "number", "minimum": 0},
        "z_lo": {"type": "number", "exclusiveMinimum": 0},
        "z_hi": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["nominal", "dev_lo", "dev_hi"],
    "additionalProperties": False,
}

_DISUTILITY_SCHEMA = {
    "oneOf": [
        {"const": "identity"},
        {
            "type": "object",
            "properties": {
                "pieces": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
            "required": ["pieces"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "exp_tangents": {
                    "type": "object",
                    "properties": {
                        "lo": {"type": "number"},
                        "hi": {"type": "number"},
                        "pieces": {"type": "integer", "minimum": 2},
                    },
                    "required": ["lo", "hi", "pieces"],
                    "additionalProperties": False,
                },
            },
            "required": ["exp_tangents"],
            "additionalProperties": False,
        },
    ],
}

_CVAR_SCHEMA = {
    "type": "object",
    "properties": {
        "marginals": {"type": "array", "minItems": 1,
                      "items": _MARGINAL_SCHEMA},
        "deviation": {
            "type": "object",
            "properties": {
                "norm": {"enum": ["l1", "l2", "linf"]},
                "budget": {"type": "number", "minimum": 0},
                "z": {"type": "number", "exclusiveMinimum": 0},
                "matrix": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}},
                },
            },
            "required": ["norm", "budget"],
            "additionalProperties": False,
        },
        "eps": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "ell": {"type": "integer", "minimum": 1},
        "rhs": {"type": "number"},
        "rhs_uncertain": _MARGINAL_SCHEMA,
        "disutility": _DISUTILITY_SCHEMA,
    },
    "required": ["marginals", "deviation", "eps", "ell"],
    "additionalProperties": False,
}

MODEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "variables": {
            "type": "object",
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "bounds": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": ["number", "null"]},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
            "required": ["count"],
            "additionalProperties": False,
        },
        "objective": {
            "type": "object",
            "properties": {
                "sense": {"enum": ["min", "max"]},
                "costs": {"type": "array", "items": {"type": "number"}},
                "cvar": _CVAR_SCHEMA,
            },
            "required": ["sense"],
            "additionalProperties": False,
        },
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "coeffs": {"type": "array", "items": {"type": "number"}},
                    "sense": {"enum": ["<=", ">=", "=="]},
                    "rhs": {"type": "number"},
                },
                "required": ["coeffs", "sense", "rhs"],
                "additionalProperties": False,
            },
        },
        "cvar_constraints": {"type": "array", "items": _CVAR_SCHEMA},
    },
    "required": ["variables", "objective"],
    "additionalProperties": False,
}


def load_document(path: str) -> dict:
    """Parse and schema-validate a JSON model document."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DocumentError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "document root"
        raise DocumentError(f"{path}: at {where}: {exc.message}") from exc
    return doc


def _marginal(entry: dict) -> FuzzyInterval:
    return FuzzyInterval(entry["nominal"], entry["dev_lo"], entry["dev_hi"],
                         entry.get("z_lo", 1.0), entry.get("z_hi", 1.0))


def _disutility(entry) -> Disutility:
    if entry is None or entry == "identity":
        return Disutility.identity()
    if "pieces" in entry:
        return Disutility.piecewise(entry["pieces"])
    rec = entry["exp_tangents"]
    return exp_tangents(rec["lo"], rec["hi"], rec["pieces"])


def _cvar_spec(entry: dict, n: int, where: str) -> CvarConstraintSpec:
    marginals = tuple(_marginal(m) for m in entry["marginals"])
    if len(marginals) != n:
        raise DocumentError(
            f"at {where}: expected {n} marginals, got {len(marginals)}")
    dev = entry["deviation"]
    matrix = None
    if dev.get("matrix") is not None:
        matrix = np.asarray(dev["matrix"], dtype=float)
        if matrix.shape != (n, n):
            raise DocumentError(
                f"at {where}/deviation/matrix: expected shape {(n, n)}, "
                f"got {matrix.shape}")
    try:
        spec = DeviationSpec(Norm(dev["norm"]),
                             DeviationInterval(dev["budget"],
                                               dev.get("z", 1.0)),
                             matrix=matrix)
        rhs_unc = entry.get("rhs_uncertain")
        return CvarConstraintSpec(
            PossibilityModel(marginals, spec),
            _disutility(entry.get("disutility")),
            entry["eps"], entry.get("rhs", 0.0), LambdaGrid(entry["ell"]),
            rhs_uncertain=None if rhs_unc is None else _marginal(rhs_unc))
    except ValueError as exc:
        raise DocumentError(f"at {where}: {exc}") from exc


def build_from_document(doc: dict):
    """Turn a validated document into ``(model, blocks)``."""
    n = doc["variables"]["count"]
    bounds = None
    if "bounds" in doc["variables"]:
        raw = doc["variables"]["bounds"]
        if len(raw) != n:
            raise DocumentError(
                f"at variables/bounds: expected {n} pairs, got {len(raw)}")
        bounds = [(-np.inf if lo is None else lo,
                   np.inf if hi is None else hi) for lo, hi in raw]

    obj = doc["objective"]
    if ("cvar" in obj) == ("costs" in obj):
        raise DocumentError(
            "at objective: exactly one of 'costs' or 'cvar' is required")
    if "cvar" in obj:
        if obj["sense"] != "min":
            raise DocumentError(
                "at objective: an uncertain objective must be minimized")
        objective = _cvar_spec(obj["cvar"], n, "objective/cvar")
    else:
        costs = obj["costs"]
        if len(costs) != n:
            raise DocumentError(
                f"at objective/costs: expected {n} entries, got {len(costs)}")
        objective = np.asarray(costs, dtype=float)

    domain_rows = []
    senses = {"<=": "<=", ">=": ">=", "==": "=="}
    for k, row in enumerate(doc.get("rows", [])):
        if len(row["coeffs"]) != n:
            raise DocumentError(
                f"at rows/{k}/coeffs: expected {n} entries, "
                f"got {len(row['coeffs'])}")
        coeffs = {j: c for j, c in enumerate(row["coeffs"]) if c != 0.0}
        domain_rows.append((coeffs, senses[row["sense"]], row["rhs"]))

    constraints = [_cvar_spec(entry, n, f"cvar_constraints/{k}")
                   for k, entry in enumerate(doc.get("cvar_constraints", []))]
    try:
        return build_problem(n, objective, constraints, domain_rows,
                             bounds=bounds, sense=obj["sense"])
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def _solver_config(args) -> SolverConfig:
    return SolverConfig(feas_tol=args.feas_tol, cone_tol=args.cone_tol,
                        max_pivots=args.max_pivots,
                        max_cuts_per_cone=args.max_cuts)


def _add_solver_flags(parser: argparse.ArgumentParser,
                      cone_tol: float = 1e-6) -> None:
    parser.add_argument("--feas-tol", type=float, default=1e-8,
                        help="primal feasibility tolerance")
    parser.add_argument("--cone-tol", type=float, default=cone_tol,
                        help="second-order cone violation tolerance")
    parser.add_argument("--max-pivots", type=int, default=200000,
                        help="simplex pivot limit per LP solve")
    parser.add_argument("--max-cuts", type=int, default=200,
                        help="cut limit per cone in the outer loop")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not values:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return values


def _open_out(path: str | None):
    # stdout must survive the with-block that closes a real output file
    return open(path, "w") if path else contextlib.nullcontext(sys.stdout)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def cmd_solve(args) -> int:
    doc = load_document(args.model)
    model, _ = build_from_document(doc)
    res = solve_conic(model, _solver_config(args))
    print(f"status: {res.status.value}")
    if res.status == Status.OPTIMAL:
        print(f"objective: {_fmt(res.objective)}")
        n = doc["variables"]["count"]
        for j in range(n):
            print(f"x{j + 1} = {_fmt(res.value(f'x{j + 1}'))}")
    return _EXIT_BY_STATUS[res.status]


def cmd_export(args) -> int:
    doc = load_document(args.model)
    model, _ = build_from_document(doc)
    with _open_out(args.out) as fh:
        fh.write(model.export_text())
    return 0


def cmd_knapsack(args) -> int:
    rows = knapsack_sweep(args.delta_list, args.eps_list, n=args.n,
                          seed=args.seed, ell=args.ell,
                          cfg=_solver_config(args))
    with _open_out(args.out) as fh:
        fh.write(f"# knapsack sweep: generator=PCG64 seed={args.seed} "
                 f"n={args.n} ell={args.ell}\n")
        fh.write("delta,epsilon,objective,status,solve_ms\n")
        for delta, eps, obj, status, ms in rows:
            fh.write(f"{_fmt(delta)},{_fmt(eps)},{_fmt(obj)},"
                     f"{status.value},{ms:.1f}\n")
    return 0


def cmd_portfolio(args) -> int:
    rows = portfolio_sweep(args.delta_list, args.eps_list, ell=args.ell,
                           n_pieces=args.pieces, cfg=_solver_config(args))
    with _open_out(args.out) as fh:
        fh.write(f"# portfolio sweep: ell={args.ell} pieces={args.pieces} "
                 f"cone_tol={_fmt(args.cone_tol)}\n")
        fh.write("delta_bar,epsilon,objective,status,solve_ms,"
                 "cut_count,val,gap\n")
        for db, eps, obj, status, ms, cuts, val, gap in rows:
            fh.write(f"{_fmt(db)},{_fmt(eps)},{_fmt(obj)},{status.value},"
                     f"{ms:.1f},{cuts},{_fmt(val)},{_fmt(gap)}\n")
    return 0


def cmd_verify(args) -> int:
    report = cross_validate(trials=args.trials, seed=args.seed,
                            cfg=_solver_config(args), tol=args.tol)
    print(f"verify: generator=PCG64 seed={args.seed} trials={report.trials}")
    print(f"max abs discrepancy: {report.max_abs_err:.3e} "
          f"(tolerance {args.tol:.1e})")
    for trial, err in report.failures:
        print(f"FAIL trial {trial}: |reform - oracle| = {err:.3e}")
    print("PASS" if report.ok else "FAIL")
    return 0 if report.ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="drcvar",
        description="Worst-case CVaR optimization under possibilistic "
                    "uncertainty")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a JSON model document")
    p_solve.add_argument("model", help="path to a JSON model document")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_export = sub.add_parser("export",
                              help="print the deterministic model as text")
    p_export.add_argument("model", help="path to a JSON model document")
    p_export.add_argument("--out", help="output file (default stdout)")
    _add_solver_flags(p_export)
    p_export.set_defaults(func=cmd_export)

    p_knap = sub.add_parser("knapsack", help="run the knapsack sweep")
    p_knap.add_argument("--n", type=int, default=50, help="number of items")
    p_knap.add_argument("--seed", type=int, default=0, help="PCG64 seed")
    p_knap.add_argument("--ell", type=int, default=100,
                        help="level-grid resolution")
    p_knap.add_argument("--delta-list", type=_float_list,
                        default=[0.0, 0.1, 0.2, 0.3],
                        help="comma-separated deviation budget fractions")
    p_knap.add_argument("--eps-list", type=_float_list,
                        default=[i / 10 for i in range(10)],
                        help="comma-separated risk levels")
    p_knap.add_argument("--out", help="output CSV file (default stdout)")
    _add_solver_flags(p_knap)
    p_knap.set_defaults(func=cmd_knapsack)

    p_port = sub.add_parser("portfolio", help="run the portfolio sweep")
    p_port.add_argument("--ell", type=int, default=PORTFOLIO_ELL,
                        help="level-grid resolution")
    p_port.add_argument("--pieces", type=int, default=12,
                        help="tangent pieces for the exponential disutility")
    p_port.add_argument("--delta-list", type=_float_list,
                        default=[0.0, 2.0, 4.0, 6.0, 8.0],
                        help="comma-separated deviation budgets")
    p_port.add_argument("--eps-list", type=_float_list,
                        default=[i / 10 for i in range(10)],
                        help="comma-separated risk levels")
    p_port.add_argument("--out", help="output CSV file (default stdout)")
    _add_solver_flags(p_port, cone_tol=1e-3)
    p_port.set_defaults(func=cmd_portfolio)

    p_verify = sub.add_parser(
        "verify", help="cross-check the reformulation against the oracle")
    p_verify.add_argument("--trials", type=int, default=100,
                          help="number of random instances")
    p_verify.add_argument("--seed", type=int, default=0, help="PCG64 seed")
    p_verify.add_argument("--tol", type=float, default=1e-6,
                          help="maximum allowed discrepancy")
    _add_solver_flags(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, but exit code 2 is reserved for
        # infeasible models; --help still exits 0
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (DocumentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
