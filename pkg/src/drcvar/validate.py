"""Randomized cross-validation of the reformulation against the oracles.

Shared by the CLI ``verify`` command and the acceptance tests: random small
instances are solved once through the dual reformulation (decision fixed,
epigraph minimized) and once through the exact discrete worst-case CVaR;
the two must agree to tight absolute tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ambiguity import (DeviationSpec, LambdaGrid, Norm, PossibilityModel)
from .fuzzy import DeviationInterval, FuzzyInterval
from .model import ConicModel
from .oracle import worst_cvar
from .reform import CvarConstraintSpec, Disutility, emit_block
from .solver import SolverConfig, Status, solve_lp

__all__ = ["random_small_instance", "reform_optimum", "cross_validate",
           "ValidationReport"]


def random_small_instance(rng: np.random.Generator, max_n: int = 3,
                          ells=(1, 2, 5), eps_choices=(0.0, 0.3, 0.7),
                          norms=(Norm.L1, Norm.LINF)):
    """A random CVaR spec with a fixed decision vector to evaluate it at."""
    n = int(rng.integers(1, max_n + 1))
    marginals = tuple(
        FuzzyInterval(
            float(rng.uniform(-5.0, 5.0)),
            float(rng.uniform(0.0, 3.0)),
            float(rng.uniform(0.0, 3.0)),
            float(rng.uniform(0.3, 3.0)),
            float(rng.uniform(0.3, 3.0)),
        )
        for _ in range(n))
    deviation = DeviationSpec(
        Norm(rng.choice([nrm.value for nrm in norms])),
        DeviationInterval(float(rng.uniform(0.0, 4.0)),
                          float(rng.uniform(0.3, 3.0))))
    spec = CvarConstraintSpec(
        PossibilityModel(marginals, deviation), Disutility.identity(),
        float(rng.choice(eps_choices)), 0.0,
        LambdaGrid(int(rng.choice(ells))))
    x = rng.uniform(-2.0, 2.0, size=n)
    return spec, x


def reform_optimum(spec: CvarConstraintSpec, x: np.ndarray,
                   cfg: SolverConfig | None = None) -> float:
    """Epigraph optimum of the emitted block at a fixed decision vector."""
    model = ConicModel()
    x_vars = [model.add_var(f"x{j + 1}", float(x[j]), float(x[j]))
              for j in range(len(x))]
    h = model.add_var("h")
    emit_block(model, spec, x_vars, "blk", rhs_var=h)
    model.set_objective("min", {h: 1.0})
    res = solve_lp(model, cfg or SolverConfig())
    if res.status != Status.OPTIMAL:
        raise RuntimeError(f"reformulation LP did not solve: {res.status}")
    return float(res.objective)


@dataclass
class ValidationReport:
    trials: int
    max_abs_err: float
    failures: list[tuple[int, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def cross_validate(trials: int = 100, seed: int = 0,
                   cfg: SolverConfig | None = None,
                   tol: float = 1e-6) -> ValidationReport:
    """Compare reformulation optima with the exact oracle on random data."""
    if trials < 1:
        raise ValueError("at least one trial is required")
    rng = np.random.default_rng(seed)
    cfg = cfg or SolverConfig()
    report = ValidationReport(trials, 0.0)
    for k in range(trials):
        spec, x = random_small_instance(rng)
        lhs = reform_optimum(spec, x, cfg)
        rhs = worst_cvar(spec.coeffs, spec.grid, x, spec.g, spec.eps)
        err = abs(lhs - rhs)
        report.max_abs_err = max(report.max_abs_err, err)
        if err > tol:
            report.failures.append((k, err))
    return report
