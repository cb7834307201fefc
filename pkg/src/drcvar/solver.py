"""Solver frontend: LP solve, outer-approximation cut loop for cones,
and certificate checking on top of the bundled simplex."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import simplex
from .model import EQ, GE, LE, ConicModel

__all__ = ["Status", "SolverConfig", "SolveResult", "solve_lp", "solve_conic",
           "check_certificate", "CertificateReport"]


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


_STATUS_MAP = {
    simplex.OPTIMAL: Status.OPTIMAL,
    simplex.INFEASIBLE: Status.INFEASIBLE,
    simplex.UNBOUNDED: Status.UNBOUNDED,
    simplex.ITERATION_LIMIT: Status.ITERATION_LIMIT,
}


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-8
    cone_tol: float = 1e-6
    max_pivots: int = 200000
    max_cuts_per_cone: int = 200
    refactor_every: int = 100
    stall_limit: int = 500

    def __post_init__(self) -> None:
        if self.feas_tol <= 0 or self.cone_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray
    objective: float
    iterations: int
    cut_count: int = 0
    duals: np.ndarray | None = None
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def value(self, name: str) -> float:
        return float(self.x[self._index[name]])


def _standardize(model: ConicModel):
    """Rows to equality standard form with one slack per row.

    ``>=`` rows are negated; equality rows get a slack fixed to zero."""
    a, senses, rhs = model.row_arrays()
    m, n = a.shape
    slack_lb = np.zeros(m)
    slack_ub = np.full(m, np.inf)
    sign = np.ones(m)
    for i, s in enumerate(senses):
        if s == GE:
            sign[i] = -1.0
        elif s == EQ:
            slack_ub[i] = 0.0
    a = a * sign[:, None]
    rhs = rhs * sign
    a_full = np.hstack([a, np.eye(m)])
    lb = np.concatenate([np.asarray(model.lb), slack_lb])
    ub = np.concatenate([np.asarray(model.ub), slack_ub])
    c = model.objective_vector()
    obj_sign = 1.0 if model.obj_sense == "min" else -1.0
    c_full = np.concatenate([obj_sign * c, np.zeros(m)])
    return a_full, rhs, c_full, lb, ub, obj_sign, sign


def solve_lp(model: ConicModel, cfg: SolverConfig | None = None) -> SolveResult:
    """Solve a purely linear model with the bundled simplex."""
    if model.cones:
        raise ValueError("model has cone rows; use solve_conic")
    cfg = cfg or SolverConfig()
    a, rhs, c, lb, ub, obj_sign, row_sign = _standardize(model)
    res = simplex.solve_standard_form(
        a, rhs, c, lb, ub,
        feas_tol=cfg.feas_tol, max_pivots=cfg.max_pivots,
        refactor_every=cfg.refactor_every, stall_limit=cfg.stall_limit,
        unit_start=model.n_vars)
    n = model.n_vars
    x = res.x[:n]
    objective = obj_sign * res.objective
    duals = obj_sign * row_sign * res.duals if res.duals.size else res.duals
    return SolveResult(_STATUS_MAP[res.status], x, objective, res.iterations,
                       duals=duals, _index=dict(model._index))


def solve_conic(model: ConicModel, cfg: SolverConfig | None = None,
                cut_pool: dict[int, list[tuple[float, ...]]] | None = None
                ) -> SolveResult:
    """Outer-approximation cut loop reducing cone rows to linear cuts.

    The LP relaxation starts from ``head >= 0`` plus the cuts
    ``+-member <= head``; while some cone is violated by more than
    ``cone_tol * (1 + head)`` the supporting hyperplane at the current point
    is added and the relaxation re-solved from scratch.

    ``cut_pool`` optionally maps cone index to unit cut directions collected
    on earlier solves.  A supporting hyperplane of the second-order cone is
    valid for any model whose cone at that index has the same width, so
    passing the same pool across a parameter sweep warm-starts each cell.
    New directions found here are appended to the pool in place.
    """
    cfg = cfg or SolverConfig()
    if not model.cones:
        return solve_lp(model, cfg)
    work = model.copy()
    cones = work.cones
    work.cones = []
    member_idx = []
    head_idx = []
    for k, cone in enumerate(cones):
        hi = work.var_index(cone.head)
        work.lb[hi] = max(work.lb[hi], 0.0)
        for mem in cone.members:
            work.add_row({mem: 1.0, cone.head: -1.0}, LE, 0.0)
            work.add_row({mem: -1.0, cone.head: -1.0}, LE, 0.0)
        if cut_pool:
            for direction in cut_pool.get(k, []):
                coeffs = {mem: float(direction[j])
                          for j, mem in enumerate(cone.members)}
                coeffs[cone.head] = -1.0
                work.add_row(coeffs, LE, 0.0)
        member_idx.append([work.var_index(mem) for mem in cone.members])
        head_idx.append(hi)

    cuts = [0] * len(cones)
    total_iters = 0
    while True:
        res = solve_lp(work, cfg)
        total_iters += res.iterations
        if res.status != Status.OPTIMAL:
            res.iterations = total_iters
            res.cut_count = sum(cuts)
            return res
        added = False
        for k, cone in enumerate(cones):
            u = res.x[member_idx[k]]
            head = res.x[head_idx[k]]
            norm = float(np.linalg.norm(u))
            if norm <= head + cfg.cone_tol * (1.0 + abs(head)):
                continue
            if cuts[k] >= cfg.max_cuts_per_cone:
                res.status = Status.ITERATION_LIMIT
                res.iterations = total_iters
                res.cut_count = sum(cuts)
                return res
            direction = tuple(float(v / norm) for v in u)
            coeffs = {mem: direction[j] for j, mem in enumerate(cone.members)}
            coeffs[cone.head] = -1.0
            work.add_row(coeffs, LE, 0.0)
            if cut_pool is not None:
                cut_pool.setdefault(k, []).append(direction)
            cuts[k] += 1
            added = True
        if not added:
            res.iterations = total_iters
            res.cut_count = sum(cuts)
            return res


@dataclass
class CertificateReport:
    violations: list[tuple[str, str, float]]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_certificate(model: ConicModel, result: SolveResult,
                      cfg: SolverConfig | None = None) -> CertificateReport:
    """Re-verify an optimal result against the model it came from."""
    cfg = cfg or SolverConfig()
    if result.status != Status.OPTIMAL:
        raise ValueError("certificate check requires an optimal result")
    violations: list[tuple[str, str, float]] = []
    x = result.x
    for name, lo, hi in zip(model.var_names, model.lb, model.ub):
        v = x[model.var_index(name)]
        gap = max(lo - v, v - hi)
        if gap > cfg.feas_tol:
            violations.append(("bound", name, float(gap)))
    for i, row in enumerate(model.rows):
        lhs = sum(c * x[model.var_index(nm)] for nm, c in row.coeffs.items())
        if row.sense == LE:
            gap = lhs - row.rhs
        elif row.sense == GE:
            gap = row.rhs - lhs
        else:
            gap = abs(lhs - row.rhs)
        scale = 1.0 + abs(row.rhs)
        if gap > cfg.feas_tol * scale:
            violations.append(("row", str(i), float(gap)))
    for k, cone in enumerate(model.cones):
        u = np.array([x[model.var_index(mem)] for mem in cone.members])
        head = x[model.var_index(cone.head)]
        gap = float(np.linalg.norm(u)) - head
        if gap > cfg.cone_tol * (1.0 + abs(head)):
            violations.append(("cone", str(k), float(gap)))
    obj = sum(c * x[model.var_index(nm)] for nm, c in model.obj_coeffs.items())
    if not math.isclose(obj, result.objective, rel_tol=1e-9, abs_tol=1e-9):
        violations.append(("objective", "", float(abs(obj - result.objective))))
    return CertificateReport(violations)
