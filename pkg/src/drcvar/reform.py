"""Deterministic reformulation of worst-case CVaR constraints.

A constraint bounding the worst-case CVaR of ``a~ @ x`` over the discrete
ambiguity set is turned into a block of linear (L1, L-inf) or second-order
cone (L2) rows by dualizing the inner per-level maximization.  Nonlinear
nondecreasing convex disutilities enter through a piecewise-affine
under-approximation that replicates each dual-objective row once per piece.
``build_problem`` assembles whole models: an epigraph variable for an
uncertain objective, one block per uncertain constraint, and an auxiliary
variable fixed to one that folds uncertain right-hand sides into the
coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ambiguity import (ConfidenceSet, LambdaGrid, Norm, PossibilityModel,
                        confidence_set)
from .fuzzy import FuzzyInterval
from .model import EQ, GE, LE, ConicModel, Row

__all__ = ["Disutility", "CvarConstraintSpec", "CvarBlock", "emit_block",
           "emit_block_linf", "emit_block_l1", "emit_block_l2",
           "apply_disutility", "build_problem"]


@dataclass(frozen=True)
class Disutility:
    """Nondecreasing convex transform of a scalar loss.

    ``pieces`` is None for the identity, otherwise a tuple of
    ``(slope, intercept)`` pairs representing ``max_z (r_z * y + s_z)``.
    """

    pieces: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.pieces is None:
            return
        if not self.pieces:
            raise ValueError("piecewise disutility needs at least one piece")
        pieces = tuple(sorted((float(r), float(s)) for r, s in self.pieces))
        for r, _ in pieces:
            if r < 0:
                raise ValueError("disutility slopes must be nonnegative "
                                 "(the transform must be nondecreasing)")
        object.__setattr__(self, "pieces", pieces)

    @staticmethod
    def identity() -> "Disutility":
        return Disutility(None)

    @staticmethod
    def piecewise(pieces) -> "Disutility":
        return Disutility(tuple((float(r), float(s)) for r, s in pieces))

    @property
    def is_identity(self) -> bool:
        return self.pieces is None

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.pieces is None:
            out = y
        else:
            arr = np.array(self.pieces)
            out = np.max(arr[:, 0] * y[..., None] + arr[:, 1], axis=-1)
        return float(out) if out.ndim == 0 else out

    def effective_pieces(self) -> tuple[tuple[float, float], ...]:
        return ((1.0, 0.0),) if self.pieces is None else self.pieces


@dataclass(frozen=True)
class CvarConstraintSpec:
    """One worst-case CVaR constraint: CVaR_eps[g(a~ @ x)] <= rhs."""

    coeffs: PossibilityModel
    g: Disutility
    eps: float
    rhs: float
    grid: LambdaGrid
    rhs_uncertain: FuzzyInterval | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"risk level must lie in [0, 1), got {self.eps!r}")
        if self.rhs_uncertain is not None and \
                self.coeffs.deviation.matrix is not None:
            raise ValueError("uncertain right-hand sides require an identity "
                             "interaction matrix")


@dataclass
class CvarBlock:
    """Bookkeeping for one emitted constraint block."""

    spec: CvarConstraintSpec
    prefix: str
    w: str
    t: str
    v: list[str]
    x_vars: list[str]
    # per-level dual expression (coefficient map, constant) on the right of
    # the dual-objective rows, before any disutility piece is applied
    dual_exprs: list[tuple[dict[str, float], float]]
    dual_rows: list[Row] = field(default_factory=list)

    @property
    def levels(self) -> np.ndarray:
        return self.spec.grid.levels


def _common_vars(model: ConicModel, spec: CvarConstraintSpec, prefix: str,
                 rhs_var: str | None) -> CvarBlock:
    levels = spec.grid.levels
    w = model.add_var(f"{prefix}.w")
    t = model.add_var(f"{prefix}.t")
    v = [model.add_var(f"{prefix}.v{i}", 0.0) for i in range(len(levels))]
    block = CvarBlock(spec, prefix, w, t, v, [], [])
    # budget row: w + sum (lam_i - 1) v_i + (1-eps) t <= (1-eps) rhs
    coeffs = {w: 1.0, t: 1.0 - spec.eps}
    for i, lam in enumerate(levels):
        if lam != 1.0:
            coeffs[v[i]] = lam - 1.0
    if rhs_var is None:
        rhs = (1.0 - spec.eps) * spec.rhs
    else:
        coeffs[rhs_var] = coeffs.get(rhs_var, 0.0) - (1.0 - spec.eps)
        rhs = 0.0
    model.add_row(coeffs, LE, rhs)
    for i in range(len(levels)):
        coeffs = {w: 1.0}
        for j in range(i + 1):
            coeffs[v[j]] = -1.0
        model.add_row(coeffs, GE, 0.0)
    return block


def _dual_objective_rows(block: CvarBlock) -> list[Row]:
    rows = []
    pieces = block.spec.g.effective_pieces()
    for i, (expr, const) in enumerate(block.dual_exprs):
        base = {block.w: 1.0, block.t: 1.0}
        for j in range(i + 1):
            base[block.v[j]] = -1.0
        for r, s in pieces:
            coeffs = dict(base)
            for name, c in expr.items():
                coeffs[name] = coeffs.get(name, 0.0) - r * c
            rows.append(Row(coeffs, GE, r * const + s))
    return rows


def emit_block_linf(model: ConicModel, spec: CvarConstraintSpec,
                    x_vars: list[str], prefix: str = "c0",
                    rhs_var: str | None = None) -> CvarBlock:
    """Linear block for the L-inf deviation (per-coordinate dual vectors)."""
    if spec.coeffs.deviation.norm is not Norm.LINF:
        raise ValueError("emit_block_linf requires an L-inf deviation")
    return _emit_box_block(model, spec, x_vars, prefix, rhs_var, scalar_gamma=False)


def emit_block_l1(model: ConicModel, spec: CvarConstraintSpec,
                  x_vars: list[str], prefix: str = "c0",
                  rhs_var: str | None = None) -> CvarBlock:
    """Linear block for the L1 deviation (one scalar gamma per level)."""
    if spec.coeffs.deviation.norm is not Norm.L1:
        raise ValueError("emit_block_l1 requires an L1 deviation")
    return _emit_box_block(model, spec, x_vars, prefix, rhs_var, scalar_gamma=True)


def _emit_box_block(model, spec, x_vars, prefix, rhs_var, scalar_gamma):
    pm = spec.coeffs
    n = pm.n
    if len(x_vars) != n:
        raise ValueError("decision variable count does not match marginals")
    block = _common_vars(model, spec, prefix, rhs_var)
    block.x_vars = list(x_vars)
    nominal = pm.nominal
    levels = spec.grid.levels
    cuts = [confidence_set(pm, lam) for lam in levels]

    names = []
    for i in range(len(levels)):
        al = [model.add_var(f"{prefix}.al{i}_{j}", 0.0) for j in range(n)]
        be = [model.add_var(f"{prefix}.be{i}_{j}", 0.0) for j in range(n)]
        ph = [model.add_var(f"{prefix}.ph{i}_{j}", 0.0) for j in range(n)]
        xi = [model.add_var(f"{prefix}.xi{i}_{j}", 0.0) for j in range(n)]
        if scalar_gamma:
            ga = [model.add_var(f"{prefix}.ga{i}", 0.0)]
        else:
            ga = [model.add_var(f"{prefix}.ga{i}_{j}", 0.0) for j in range(n)]
        names.append((al, be, ph, xi, ga))
        cs = cuts[i]
        expr: dict[str, float] = {}
        for j in range(n):
            expr[al[j]] = float(cs.upper[j])
            expr[be[j]] = float(-cs.lower[j])
            expr[ph[j]] = float(nominal[j])
            expr[xi[j]] = float(-nominal[j])
        if scalar_gamma:
            expr[ga[0]] = float(cs.radius)
        else:
            for j in range(n):
                expr[ga[j]] = float(cs.radius)
        block.dual_exprs.append((expr, 0.0))

    block.dual_rows = _dual_objective_rows(block)
    for row in block.dual_rows:
        model.rows.append(row)
    for i in range(len(levels)):
        al, be, ph, xi, _ = names[i]
        for j in range(n):
            model.add_row({al[j]: 1.0, be[j]: -1.0, ph[j]: 1.0, xi[j]: -1.0,
                           x_vars[j]: -1.0}, EQ, 0.0)
    for i in range(len(levels)):
        al, be, ph, xi, ga = names[i]
        for j in range(n):
            g_name = ga[0] if scalar_gamma else ga[j]
            model.add_row({g_name: 1.0, ph[j]: -1.0, xi[j]: -1.0}, GE, 0.0)
    return block


def emit_block_l2(model: ConicModel, spec: CvarConstraintSpec,
                  x_vars: list[str], prefix: str = "c0",
                  rhs_var: str | None = None) -> CvarBlock:
    """Second-order cone block for the L2 (ellipsoidal) deviation."""
    pm = spec.coeffs
    if pm.deviation.norm is not Norm.L2:
        raise ValueError("emit_block_l2 requires an L2 deviation")
    n = pm.n
    if len(x_vars) != n:
        raise ValueError("decision variable count does not match marginals")
    b = pm.deviation.matrix_for(n)
    block = _common_vars(model, spec, prefix, rhs_var)
    block.x_vars = list(x_vars)
    nominal = pm.nominal
    levels = spec.grid.levels
    cuts = [confidence_set(pm, lam) for lam in levels]

    names = []
    for i in range(len(levels)):
        al = [model.add_var(f"{prefix}.al{i}_{j}", 0.0) for j in range(n)]
        be = [model.add_var(f"{prefix}.be{i}_{j}", 0.0) for j in range(n)]
        u = [model.add_var(f"{prefix}.u{i}_{j}") for j in range(n)]
        ga = model.add_var(f"{prefix}.ga{i}", 0.0)
        names.append((al, be, u, ga))
        cs = cuts[i]
        expr: dict[str, float] = {}
        for j in range(n):
            expr[al[j]] = float(cs.upper[j] - nominal[j])
            expr[be[j]] = float(nominal[j] - cs.lower[j])
            expr[x_vars[j]] = expr.get(x_vars[j], 0.0) + float(nominal[j])
        expr[ga] = float(cs.radius)
        block.dual_exprs.append((expr, 0.0))

    block.dual_rows = _dual_objective_rows(block)
    for row in block.dual_rows:
        model.rows.append(row)
    for i in range(len(levels)):
        al, be, u, _ = names[i]
        for j in range(n):
            coeffs = {al[j]: 1.0, be[j]: -1.0, x_vars[j]: -1.0}
            for k in range(n):
                if b[k, j] != 0.0:
                    coeffs[u[k]] = coeffs.get(u[k], 0.0) + float(b[k, j])
            model.add_row(coeffs, EQ, 0.0)
    for i in range(len(levels)):
        al, be, u, ga = names[i]
        model.add_cone(ga, list(u))
    return block


_EMITTERS = {Norm.LINF: emit_block_linf, Norm.L1: emit_block_l1,
             Norm.L2: emit_block_l2}


def emit_block(model: ConicModel, spec: CvarConstraintSpec,
               x_vars: list[str], prefix: str = "c0",
               rhs_var: str | None = None) -> CvarBlock:
    """Dispatch on the deviation norm of the spec."""
    return _EMITTERS[spec.coeffs.deviation.norm](model, spec, x_vars, prefix,
                                                 rhs_var)


def apply_disutility(model: ConicModel, block: CvarBlock,
                     g: Disutility) -> CvarBlock:
    """Swap the disutility of an emitted block in place.

    The dual-objective rows are regenerated, one copy per affine piece,
    spliced into their original position so row order stays deterministic.
    """
    block.spec = CvarConstraintSpec(block.spec.coeffs, g, block.spec.eps,
                                    block.spec.rhs, block.spec.grid,
                                    block.spec.rhs_uncertain)
    new_rows = _dual_objective_rows(block)
    model.replace_rows(block.dual_rows, new_rows)
    block.dual_rows = new_rows
    return block


def _fold_rhs(spec: CvarConstraintSpec) -> CvarConstraintSpec:
    """Move an uncertain right-hand side into the coefficient vector.

    The constraint becomes CVaR[a~ @ x - b~ * x0] <= 0 with x0 fixed to one;
    the extra marginal is the right-hand side interval scaled by -1.
    """
    pm = spec.coeffs
    marginals = pm.marginals + (spec.rhs_uncertain.scale(-1.0),)
    folded = PossibilityModel(marginals, pm.deviation)
    return CvarConstraintSpec(folded, spec.g, spec.eps, 0.0, spec.grid)


def build_problem(n: int, objective, constraints=(), domain_rows=(),
                  bounds=None, sense: str = "min"):
    """Assemble a full deterministic model.

    ``objective`` is a CvarConstraintSpec (uncertain costs, minimized through
    an epigraph variable ``h``) or a crisp cost mapping/array.  Each entry of
    ``constraints`` adds its own block.  ``domain_rows`` are
    ``(coeffs by 0-based index, sense, rhs)`` triples describing the
    polyhedral decision domain.  Returns ``(model, blocks)``.
    """
    model = ConicModel()
    if bounds is None:
        bounds = [(-np.inf, np.inf)] * n
    if len(bounds) != n:
        raise ValueError("one bound pair per decision variable required")
    x_vars = [model.add_var(f"x{j + 1}", lo, hi)
              for j, (lo, hi) in enumerate(bounds)]

    blocks = []
    if isinstance(objective, CvarConstraintSpec):
        if sense != "min":
            raise ValueError("an uncertain objective is a loss; use sense='min'")
        if objective.coeffs.n != n:
            raise ValueError("objective marginal count does not match n")
        h = model.add_var("h")
        model.set_objective("min", {h: 1.0})
        blocks.append(emit_block(model, objective, x_vars, "obj", rhs_var=h))
    else:
        if isinstance(objective, dict):
            costs = {x_vars[j]: float(c) for j, c in objective.items()}
        else:
            arr = np.asarray(objective, dtype=float)
            if arr.shape != (n,):
                raise ValueError("cost vector length does not match n")
            costs = {x_vars[j]: float(arr[j]) for j in range(n)
                     if arr[j] != 0.0}
        model.set_objective(sense, costs)

    for coeffs, row_sense, rhs in domain_rows:
        named = {x_vars[j]: float(c) for j, c in dict(coeffs).items()}
        model.add_row(named, row_sense, float(rhs))

    for k, spec in enumerate(constraints):
        prefix = f"c{k}"
        if spec.rhs_uncertain is not None:
            folded = _fold_rhs(spec)
            x0 = model.add_var(f"{prefix}.x0", 1.0, 1.0)
            blocks.append(emit_block(model, folded, x_vars + [x0], prefix))
        else:
            if spec.coeffs.n != n:
                raise ValueError(f"constraint {k} marginal count does not match n")
            blocks.append(emit_block(model, spec, x_vars, prefix))
    return model, blocks
