"""Joint possibility model, level grid, confidence sets and the inner
linear maximization over a confidence set.

A confidence set at level ``lam`` is the box of marginal level cuts
intersected with a norm ball of radius ``dev_cut(lam)`` around the nominal
scenario.  The inner problem ``max a@x over C(lam)`` has closed forms for
the L-inf and L1 norms (identity interaction matrix); the L2 case uses the
explicit ellipsoid maximizer when the ball lies inside the box and a small
cone solve otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fuzzy import DeviationInterval, FuzzyInterval

__all__ = ["Norm", "DeviationSpec", "PossibilityModel", "LambdaGrid",
           "ConfidenceSet", "joint_possibility", "confidence_set",
           "max_linear", "necessity_of_cut"]


class Norm(str, Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"


@dataclass(frozen=True, eq=False)
class DeviationSpec:
    """Norm-ball deviation budget ``||B(a - nominal)||_p <= dev_cut(lam)``."""

    norm: Norm
    dev: DeviationInterval
    matrix: np.ndarray | None = None  # None means identity

    def __post_init__(self) -> None:
        if self.matrix is None:
            return
        b = np.asarray(self.matrix, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("interaction matrix must be square "
                             "(rectangular matrices are unsupported)")
        if self.norm is Norm.L2:
            if np.linalg.cond(b) > 1e12:
                raise ValueError("interaction matrix must be nonsingular")
        else:
            if not np.allclose(b, np.eye(b.shape[0]), atol=1e-12):
                raise ValueError(f"{self.norm.value} deviation requires an "
                                 "identity interaction matrix")
        object.__setattr__(self, "matrix", b)

    def matrix_for(self, n: int) -> np.ndarray:
        if self.matrix is None:
            return np.eye(n)
        if self.matrix.shape[0] != n:
            raise ValueError("interaction matrix dimension mismatch")
        return self.matrix

    def distance(self, dev_vec: np.ndarray):
        """Deviation ``||B v||_p``; vectorized over leading axes of ``v``."""
        dev_vec = np.asarray(dev_vec, dtype=float)
        v = dev_vec if self.matrix is None else dev_vec @ self.matrix.T
        if self.norm is Norm.L1:
            return np.abs(v).sum(axis=-1)
        if self.norm is Norm.LINF:
            return np.abs(v).max(axis=-1)
        return np.sqrt((v * v).sum(axis=-1))


@dataclass(frozen=True, eq=False)
class PossibilityModel:
    """Joint possibility distribution of a coefficient vector."""

    marginals: tuple[FuzzyInterval, ...]
    deviation: DeviationSpec

    def __post_init__(self) -> None:
        marginals = tuple(self.marginals)
        object.__setattr__(self, "marginals", marginals)
        if not marginals:
            raise ValueError("at least one marginal is required")
        if self.deviation.matrix is not None and \
                self.deviation.matrix.shape[0] != len(marginals):
            raise ValueError("interaction matrix dimension mismatch")

    @property
    def n(self) -> int:
        return len(self.marginals)

    @property
    def nominal(self) -> np.ndarray:
        return np.array([fi.nominal for fi in self.marginals])

    @property
    def support_lower(self) -> np.ndarray:
        return np.array([fi.support[0] for fi in self.marginals])

    @property
    def support_upper(self) -> np.ndarray:
        return np.array([fi.support[1] for fi in self.marginals])


@dataclass(frozen=True)
class LambdaGrid:
    """Uniform level grid 0 = lam_0 < ... < lam_ell = 1."""

    resolution: int

    def __post_init__(self) -> None:
        if self.resolution < 1:
            raise ValueError("grid resolution must be at least 1")

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.resolution + 1) / self.resolution


@dataclass(frozen=True, eq=False)
class ConfidenceSet:
    lower: np.ndarray
    upper: np.ndarray
    radius: float
    nominal: np.ndarray
    spec: DeviationSpec
    level: float


def joint_possibility(model: PossibilityModel, a):
    """Min of the marginal memberships and the deviation membership.

    Vectorized: ``a`` may be a single scenario or a (batch, n) array."""
    a = np.asarray(a, dtype=float)
    degrees = [np.asarray(fi.membership(a[..., j]), dtype=float)
               for j, fi in enumerate(model.marginals)]
    dist = model.deviation.distance(a - model.nominal)
    degrees.append(np.asarray(model.deviation.dev.membership(dist), dtype=float))
    out = np.minimum.reduce(degrees)
    return float(out) if out.ndim == 0 else out


def confidence_set(model: PossibilityModel, lam: float) -> ConfidenceSet:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"level must lie in [0, 1], got {lam!r}")
    cuts = [fi.cut(lam) for fi in model.marginals]
    return ConfidenceSet(
        lower=np.array([c[0] for c in cuts]),
        upper=np.array([c[1] for c in cuts]),
        radius=model.deviation.dev.cut(lam),
        nominal=model.nominal,
        spec=model.deviation,
        level=lam,
    )


def max_linear(cs: ConfidenceSet, x) -> tuple[float, np.ndarray]:
    """Exact maximizer of ``a @ x`` over the confidence set.

    Zero objective coefficients leave the corresponding coordinate at the
    nominal value, so ``x = 0`` returns the nominal scenario."""
    x = np.asarray(x, dtype=float)
    n = cs.lower.shape[0]
    if x.shape != (n,):
        raise ValueError(f"dimension mismatch: expected {n} coefficients")
    if cs.spec.norm is Norm.LINF:
        lo = np.maximum(cs.lower, cs.nominal - cs.radius)
        hi = np.minimum(cs.upper, cs.nominal + cs.radius)
        a = np.where(x > 0, hi, np.where(x < 0, lo, cs.nominal))
        return float(a @ x), a
    if cs.spec.norm is Norm.L1:
        a = cs.nominal.astype(float).copy()
        budget = cs.radius
        # spend the budget greedily on coordinates of largest |x_j|
        for j in np.argsort(-np.abs(x), kind="stable"):
            if budget <= 0 or x[j] == 0:
                break
            room = (cs.upper[j] - a[j]) if x[j] > 0 else (a[j] - cs.lower[j])
            step = min(room, budget)
            a[j] += step if x[j] > 0 else -step
            budget -= step
        return float(a @ x), a
    return _max_linear_l2(cs, x)


def _max_linear_l2(cs: ConfidenceSet, x) -> tuple[float, np.ndarray]:
    n = cs.lower.shape[0]
    b = cs.spec.matrix_for(n)
    binv = np.linalg.inv(b)
    extent = cs.radius * np.linalg.norm(binv, axis=1)
    inside = np.all(cs.nominal - extent >= cs.lower - 1e-12) and \
        np.all(cs.nominal + extent <= cs.upper + 1e-12)
    if inside:
        # the ball is contained in the box: explicit ellipsoid maximizer
        g = binv.T @ x
        gn = float(np.linalg.norm(g))
        if gn == 0.0 or cs.radius == 0.0:
            return float(cs.nominal @ x), cs.nominal.astype(float)
        a = cs.nominal + cs.radius * (binv @ (g / gn))
        return float(a @ x), a
    return _max_linear_l2_conic(cs, x, b)


def _max_linear_l2_conic(cs: ConfidenceSet, x, b) -> tuple[float, np.ndarray]:
    # box-clipped ellipsoid: small cone solve on the primal
    from .model import EQ, ConicModel
    from .solver import Status, SolverConfig, solve_conic

    n = cs.lower.shape[0]
    m = ConicModel()
    a_names = [m.add_var(f"a{j}", cs.lower[j], cs.upper[j]) for j in range(n)]
    d_names = [m.add_var(f"d{j}") for j in range(n)]
    gamma = m.add_var("gamma", cs.radius, cs.radius)
    for k in range(n):
        coeffs = {a_names[j]: b[k, j] for j in range(n) if b[k, j] != 0.0}
        coeffs[d_names[k]] = coeffs.get(d_names[k], 0.0) - 1.0
        m.add_row(coeffs, EQ, float(b[k] @ cs.nominal))
    m.add_cone(gamma, d_names)
    m.set_objective("max", {a_names[j]: float(x[j]) for j in range(n)})
    # cone_tol below ~1e-7 can stall: once the violation drops under the LP
    # kernel's feasibility resolution, new cuts no longer move the vertex
    cfg = SolverConfig(cone_tol=1e-7, max_cuts_per_cone=500)
    res = solve_conic(m, cfg)
    if res.status != Status.OPTIMAL:
        raise RuntimeError(f"inner L2 maximization failed: {res.status}")
    a = np.array([res.value(nm) for nm in a_names])
    return float(res.objective), a


def necessity_of_cut(model: PossibilityModel, lam: float,
                     rng: np.random.Generator | None = None,
                     samples: int = 100_000) -> float:
    """Sampling estimate of the necessity degree of ``C(lam)``.

    Draws uniform points from the support bounding box and returns
    ``1 - max possibility outside C(lam)``; converges to ``1 - lam``.
    Diagnostic only, not part of the solve path.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"level must lie in [0, 1], got {lam!r}")
    rng = rng or np.random.default_rng(0)
    lo, hi = model.support_lower, model.support_upper
    pts = rng.uniform(lo, hi, size=(samples, model.n))
    poss = np.atleast_1d(joint_possibility(model, pts))
    outside = poss < lam
    if not outside.any():
        return 1.0
    return 1.0 - float(poss[outside].max())
