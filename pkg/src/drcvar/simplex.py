"""Dense revised simplex for bounded-variable linear programs.

Solves ``min c@x  s.t.  A@x = b,  lb <= x <= ub`` (bounds may be infinite)
with a two-phase method: phase 1 drives artificial variables to zero from an
all-artificial basis, phase 2 optimizes the true costs.  The basis inverse is
kept explicitly and refreshed periodically.  Dantzig pricing is used until a
stall is detected, after which Bland's rule takes over, which guarantees
termination.  All tie-breaks are lowest-index, so the pivot sequence is a
deterministic function of the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SimplexResult", "solve_standard_form",
           "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "ITERATION_LIMIT"]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

# nonbasic variable states
_BASIC = 0
_AT_LB = 1
_AT_UB = 2
_FREE = 3

_PIV_TOL = 1e-10
_PIV_SAFE = 1e-7
_RATIO_TIE = 1e-9


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int
    duals: np.ndarray
    reduced_costs: np.ndarray


class _State:
    def __init__(self, a, b, lb, ub, unit_start=None):
        m, n = a.shape
        self.a = a
        self.b = b
        self.lb = lb
        self.ub = ub
        self.m = m
        self.n = n
        # nonbasic start values: nearest finite bound, 0 for free variables
        x = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
        stat = np.where(np.isfinite(lb), _AT_LB,
                        np.where(np.isfinite(ub), _AT_UB, _FREE))
        r = b - a @ x
        sign = np.where(r >= 0.0, 1.0, -1.0)
        self.a_ext = np.hstack([a, np.diag(sign)])
        self.lb_ext = np.concatenate([lb, np.zeros(m)])
        self.ub_ext = np.concatenate([ub, np.full(m, np.inf)])
        self.x = np.concatenate([x, np.abs(r)])
        self.stat = np.concatenate([stat, np.full(m, _BASIC)])
        self.basis = np.arange(n, n + m)
        diag = sign.copy()
        if unit_start is not None:
            # crash start: rows whose unit (slack) column can carry the
            # residual feasibly use it instead of an artificial variable
            cols = unit_start + np.arange(m)
            ok = (r >= lb[cols]) & (r <= ub[cols])
            self.basis[ok] = cols[ok]
            self.stat[cols[ok]] = _BASIC
            self.x[cols[ok]] = r[ok]
            self.x[n + np.flatnonzero(ok)] = 0.0
            self.stat[n + np.flatnonzero(ok)] = _AT_LB
            diag[ok] = 1.0
        self.binv = np.diag(diag)
        self.iterations = 0
        self.tol_x = 1e-9 * (1.0 + np.abs(b).max(initial=0.0))

    def refactor(self) -> None:
        bmat = self.a_ext[:, self.basis]
        try:
            self.binv = np.linalg.solve(bmat, np.eye(self.m))
        except np.linalg.LinAlgError:
            # nearly singular basis; regularize so the iteration can move on
            ridge = 1e-12 * (1.0 + np.abs(bmat).max())
            self.binv = np.linalg.solve(bmat + ridge * np.eye(self.m),
                                        np.eye(self.m))
        nb = self.stat != _BASIC
        rhs = self.b - self.a_ext[:, nb] @ self.x[nb]
        self.x[self.basis] = self.binv @ rhs


def _run_phase(st: _State, costs: np.ndarray, phase: int, max_pivots: int,
               refactor_every: int, stall_limit: int) -> str:
    bland = False
    stall = 0
    last_obj = np.inf
    last_tiny = -1
    tol_d = 1e-9 * (1.0 + np.abs(costs).max(initial=0.0))
    while True:
        if st.iterations >= max_pivots:
            return ITERATION_LIMIT
        y = costs[st.basis] @ st.binv
        d = costs - y @ st.a_ext
        d[st.basis] = 0.0

        inc = ((st.stat == _AT_LB) | (st.stat == _FREE)) & (d < -tol_d)
        dec = ((st.stat == _AT_UB) | (st.stat == _FREE)) & (d > tol_d)
        candidates = np.flatnonzero(inc | dec)
        if candidates.size == 0:
            return OPTIMAL
        if bland:
            q = int(candidates[0])
        else:
            q = int(candidates[np.argmax(np.abs(d[candidates]))])
        dirn = 1.0 if inc[q] else -1.0

        w = st.binv @ st.a_ext[:, q]
        we = dirn * w  # basic values move by -we * step

        xb = st.x[st.basis]
        lo = st.lb_ext[st.basis]
        hi = st.ub_ext[st.basis]
        pos_mask = we > _PIV_TOL
        neg_mask = we < -_PIV_TOL
        ratios = np.full(st.m, np.inf)
        ratios[pos_mask] = (xb[pos_mask] - lo[pos_mask]) / we[pos_mask]
        ratios[neg_mask] = (xb[neg_mask] - hi[neg_mask]) / we[neg_mask]
        np.clip(ratios, 0.0, None, out=ratios)
        # two-pass ratio test: a slacked first pass sets the admissible step,
        # the second pass picks the numerically safest (largest) pivot among
        # rows blocking within that step
        slacked = np.full(st.m, np.inf)
        slacked[pos_mask] = (xb[pos_mask] - lo[pos_mask] + st.tol_x) / we[pos_mask]
        slacked[neg_mask] = (xb[neg_mask] - hi[neg_mask] - st.tol_x) / we[neg_mask]
        np.clip(slacked, 0.0, None, out=slacked)

        own = st.ub_ext[q] - st.lb_ext[q]
        theta = slacked.min(initial=np.inf)
        if not np.isfinite(min(theta, own)):
            return UNBOUNDED

        if own < theta:
            # bound flip: entering moves across its range, basis unchanged
            st.iterations += 1
            last_tiny = -1
            st.x[q] += dirn * own
            st.x[st.basis] = xb - we * own
            st.stat[q] = _AT_UB if st.stat[q] == _AT_LB else _AT_LB
        else:
            cand = np.flatnonzero(slacked <= theta + _RATIO_TIE)
            if bland:
                pos = int(cand[np.argmin(st.basis[cand])])
            else:
                pos = int(cand[np.argmax(np.abs(we[cand]))])
            pivot = w[pos]
            if abs(pivot) < _PIV_SAFE and q != last_tiny:
                # suspiciously small pivot: refresh the inverse and retry
                # once before accepting it
                st.refactor()
                last_tiny = q
                continue
            last_tiny = -1
            st.iterations += 1
            step = min(ratios[pos], own)
            leaving = st.basis[pos]
            st.x[q] += dirn * step
            st.x[st.basis] = xb - we * step
            st.x[leaving] = st.lb_ext[leaving] if we[pos] > 0 else st.ub_ext[leaving]
            st.stat[leaving] = _AT_LB if we[pos] > 0 else _AT_UB
            st.basis[pos] = q
            st.stat[q] = _BASIC
            st.binv[pos] /= pivot
            col = w.copy()
            col[pos] = 0.0
            st.binv -= np.outer(col, st.binv[pos])

        if st.iterations % refactor_every == 0:
            st.refactor()

        obj = costs @ st.x
        if obj < last_obj - 1e-12 * (1.0 + abs(last_obj)):
            stall = 0
        else:
            stall += 1
            if stall > stall_limit:
                bland = True
        last_obj = obj


def solve_standard_form(a: np.ndarray, b: np.ndarray, c: np.ndarray,
                        lb: np.ndarray, ub: np.ndarray, *,
                        feas_tol: float = 1e-8, max_pivots: int = 50000,
                        refactor_every: int = 100,
                        stall_limit: int = 500,
                        unit_start: int | None = None) -> SimplexResult:
    """Minimize ``c@x`` subject to ``A@x = b`` and ``lb <= x <= ub``.

    ``unit_start`` marks an identity block of slack columns that the crash
    start may place directly into the basis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    m, n = a.shape
    if np.any(lb > ub):
        return SimplexResult(INFEASIBLE, np.full(n, np.nan), np.nan, 0,
                             np.zeros(m), np.zeros(n))

    st = _State(a, b, lb, ub, unit_start)
    scale = 1.0 + np.abs(b).max(initial=0.0)

    costs1 = np.concatenate([np.zeros(n), np.ones(m)])
    status = _run_phase(st, costs1, 1, max_pivots, refactor_every, stall_limit)
    if status == ITERATION_LIMIT:
        return _result(st, c, ITERATION_LIMIT, n, m)
    if status == UNBOUNDED:
        # phase-1 objective is bounded below by zero; an unbounded ray here is
        # a numerical artifact of a near-singular basis
        st.refactor()
        status = _run_phase(st, costs1, 1, max_pivots, refactor_every, stall_limit)
    if costs1 @ st.x > feas_tol * scale:
        res = _result(st, c, INFEASIBLE, n, m)
        return res

    # freeze artificials at zero and optimize the true costs
    st.ub_ext[n:] = 0.0
    art = np.arange(n, n + m)
    nonbasic_art = art[st.stat[art] != _BASIC]
    st.x[nonbasic_art] = 0.0
    st.stat[nonbasic_art] = _AT_LB

    costs2 = np.concatenate([c, np.zeros(m)])
    status = _run_phase(st, costs2, 2, max_pivots, refactor_every, stall_limit)
    return _result(st, c, status, n, m)


def _result(st: _State, c: np.ndarray, status: str, n: int, m: int) -> SimplexResult:
    if status == OPTIMAL:
        # iterative refinement of the basic values: the LU solve leaves
        # residuals of a few ulps that matter when a solution component is
        # compared against an exact value downstream
        for _ in range(2):
            r = st.b - st.a_ext @ st.x
            if not np.any(r):
                break
            st.x[st.basis] += st.binv @ r
    costs2 = np.concatenate([c, np.zeros(m)])
    y = costs2[st.basis] @ st.binv
    d = costs2 - y @ st.a_ext
    x = st.x[:n].copy()
    return SimplexResult(status, x, float(c @ x), st.iterations, y, d[:n])
