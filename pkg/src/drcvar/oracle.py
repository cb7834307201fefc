"""Brute-force evaluators of worst-case expectation and CVaR.

These implement the worst-case mass construction directly: the ambiguity
set forces probability at least 1 - lam_i onto each confidence set
C(lam_i), so the adversary places mass 1/ell on the maximizer of each of
the ell nested rings.  The resulting discrete distribution gives exact
worst-case values that the reformulation engine is validated against, and
``moment_lp_oracle`` cross-checks the construction itself by solving the
underlying moment problem as a finite LP over a fixed atom set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambiguity import LambdaGrid, PossibilityModel, confidence_set, max_linear
from .model import EQ, GE, ConicModel
from .solver import SolverConfig, Status, solve_lp

__all__ = ["DiscreteDistribution", "cvar_discrete", "worst_expectation",
           "worst_cvar", "moment_lp_oracle", "ring_argmax_atoms",
           "default_atoms"]


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported distribution as (value, probability) atoms."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        atoms = tuple((float(v), float(p)) for v, p in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("a distribution needs at least one atom")
        probs = np.array([p for _, p in atoms])
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to one")

    @staticmethod
    def uniform(values) -> "DiscreteDistribution":
        values = list(values)
        p = 1.0 / len(values)
        return DiscreteDistribution(tuple((float(v), p) for v in values))


def cvar_discrete(d: DiscreteDistribution, eps: float) -> float:
    """Exact CVaR at level ``eps``: the mean of the worst 1 - eps mass."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"risk level must lie in [0, 1), got {eps!r}")
    atoms = sorted(d.atoms, key=lambda a: -a[0])
    remaining = 1.0 - eps
    total = 0.0
    for value, prob in atoms:
        take = min(prob, remaining)
        total += take * value
        remaining -= take
        if remaining <= 1e-15:
            break
    return total / (1.0 - eps)


def worst_expectation(model: PossibilityModel, grid: LambdaGrid,
                      ring_max) -> float:
    """Worst-case expectation: mean of the per-ring maxima.

    ``ring_max`` maps a ConfidenceSet to the maximum of the integrand over
    it; any upper-semicontinuous integrand works, e.g. a monotone transform
    of a linear function via ``max_linear``.
    """
    ell = grid.resolution
    total = 0.0
    for i in range(ell):
        total += float(ring_max(confidence_set(model, i / ell)))
    return total / ell


def ring_maxima(model: PossibilityModel, grid: LambdaGrid, x) -> np.ndarray:
    """Per-ring maxima of ``a @ x`` for i = 0..ell-1."""
    ell = grid.resolution
    return np.array([max_linear(confidence_set(model, i / ell), x)[0]
                     for i in range(ell)])


def worst_cvar(model: PossibilityModel, grid: LambdaGrid, x, g,
               eps: float) -> float:
    """Worst-case CVaR of ``g(a~ @ x)`` over the discrete ambiguity set.

    Since ``g`` is nondecreasing it commutes with the per-ring maximization,
    so the value is the exact CVaR of the uniform distribution over
    ``g(m_i)`` with ``m_i`` the ring maxima of the linear form.
    """
    values = [float(g(m)) for m in ring_maxima(model, grid, x)]
    return cvar_discrete(DiscreteDistribution.uniform(values), eps)


def ring_argmax_atoms(model: PossibilityModel, grid: LambdaGrid,
                      x) -> np.ndarray:
    """Maximizing scenarios of ``a @ x`` per ring, plus the nominal one."""
    ell = grid.resolution
    atoms = [max_linear(confidence_set(model, i / ell), x)[1]
             for i in range(ell)]
    atoms.append(model.nominal.astype(float))
    return np.array(atoms)


def default_atoms(model: PossibilityModel, grid: LambdaGrid, x,
                  rng: np.random.Generator | None = None,
                  extra: int = 32) -> np.ndarray:
    """Ring argmax atoms, the nominal scenario, and random support points."""
    rng = rng or np.random.default_rng(0)
    atoms = list(ring_argmax_atoms(model, grid, x))
    cs0 = confidence_set(model, 0.0)
    lo, hi = cs0.lower, cs0.upper
    attempts = 0
    while len(atoms) < grid.resolution + 1 + extra and attempts < 100 * extra:
        a = rng.uniform(lo, hi)
        attempts += 1
        if model.deviation.distance(a - cs0.nominal) <= cs0.radius:
            atoms.append(a)
    return np.array(atoms)


def moment_lp_oracle(model: PossibilityModel, grid: LambdaGrid, atoms, x,
                     g, t: float, cfg: SolverConfig | None = None) -> float:
    """Moment problem over a fixed atom set, solved as a finite LP.

    Maximizes ``sum_a p_a * [g(a @ x) - t]_+`` subject to the ambiguity
    constraints ``sum over atoms in C(lam_i) of p_a >= 1 - lam_i`` and
    ``sum p_a = 1``.  Lower-bounds (and with per-ring argmax atoms, equals)
    the corresponding worst-case expectation.
    """
    atoms = np.asarray(atoms, dtype=float)
    x = np.asarray(x, dtype=float)
    if atoms.ndim != 2 or atoms.shape[1] != model.n:
        raise ValueError("atoms must be a (count, n) scenario array")
    values = np.maximum(np.array([float(g(a @ x)) for a in atoms]) - t, 0.0)

    scale = 1e-9 * (1.0 + float(np.abs(atoms).max(initial=0.0)))
    membership = []
    for lam in grid.levels:
        cs = confidence_set(model, lam)
        in_box = np.all((atoms >= cs.lower - scale) &
                        (atoms <= cs.upper + scale), axis=1)
        dist = np.atleast_1d(model.deviation.distance(atoms - cs.nominal))
        inside = in_box & (dist <= cs.radius + scale)
        if not inside.any() and lam < 1.0:
            raise ValueError(f"no atom lies in the level-{lam} confidence set")
        membership.append(inside)

    lp = ConicModel()
    p = [lp.add_var(f"p{k}", 0.0, 1.0) for k in range(len(atoms))]
    for lam, inside in zip(grid.levels, membership):
        if lam == 1.0:
            continue
        lp.add_row({p[k]: 1.0 for k in np.flatnonzero(inside)}, GE, 1.0 - lam)
    lp.add_row({name: 1.0 for name in p}, EQ, 1.0)
    lp.set_objective("max", {p[k]: float(values[k]) for k in range(len(atoms))
                             if values[k] != 0.0})
    res = solve_lp(lp, cfg or SolverConfig())
    if res.status != Status.OPTIMAL:
        raise RuntimeError(f"moment LP did not solve: {res.status}")
    return float(res.objective)
