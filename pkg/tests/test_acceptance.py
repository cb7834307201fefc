"""Acceptance suite: end-to-end correctness and reproduction targets.

Each test prints a single PASS/FAIL line so a transcript of the run doubles
as a checklist."""

import math
import time

import numpy as np
import pytest

from drcvar import (ConicModel, CvarConstraintSpec, DeviationInterval,
                    DeviationSpec, Disutility, LambdaGrid, PossibilityModel,
                    SolverConfig, Status, build_portfolio, confidence_set,
                    cross_validate, default_atoms, joint_possibility,
                    knapsack_sweep, max_linear, moment_lp_oracle,
                    portfolio_sweep, reform_optimum, ring_argmax_atoms,
                    solve_conic, solve_lp, solve_portfolio, worst_cvar,
                    worst_expectation)
from drcvar.validate import random_small_instance


def report(name: str, ok: bool, detail: str = "") -> None:
    tail = f" ({detail})" if detail else ""
    print(f"{'PASS' if ok else 'FAIL'}: {name}{tail}")


def test_oracle_equivalence():
    t0 = time.perf_counter()
    rep = cross_validate(trials=200, seed=11, tol=1e-6)
    elapsed = time.perf_counter() - t0
    ok = rep.ok and elapsed <= 60.0
    report("oracle equivalence on 200 random instances", ok,
           f"max abs err {rep.max_abs_err:.2e}, {elapsed:.1f} s")
    assert rep.ok, rep.failures
    assert elapsed <= 60.0


def test_duality_sandwich():
    rng = np.random.default_rng(21)
    g = Disutility.identity()
    worst = 0.0
    for _ in range(50):
        spec, x = random_small_instance(rng)
        pm, grid = spec.coeffs, spec.grid
        t = float(rng.uniform(-5.0, 5.0))

        def ring_max(cs):
            return max(0.0, max_linear(cs, x)[0] - t)

        exact = worst_expectation(pm, grid, ring_max)
        tight = moment_lp_oracle(pm, grid, ring_argmax_atoms(pm, grid, x),
                                 x, g, t)
        loose = moment_lp_oracle(pm, grid,
                                 default_atoms(pm, grid, np.zeros_like(x),
                                               rng), x, g, t)
        worst = max(worst, abs(tight - exact), loose - exact)
        assert tight == pytest.approx(exact, abs=1e-8)
        assert loose <= exact + 1e-8
    report("moment-problem duality sandwich on 50 instances", True,
           f"max gap {worst:.2e}")


def test_limit_behavior():
    rng = np.random.default_rng(31)
    worst_lo = worst_hi = 0.0
    for _ in range(30):
        spec, x = random_small_instance(rng)
        pm, ell = spec.coeffs, spec.grid.resolution
        # risk-neutral end: the block optimum is the worst-case expectation
        lo = reform_optimum(
            CvarConstraintSpec(pm, spec.g, 0.0, 0.0, spec.grid), x)
        mean = worst_expectation(pm, spec.grid,
                                 lambda cs: max_linear(cs, x)[0])
        worst_lo = max(worst_lo, abs(lo - mean))
        assert lo == pytest.approx(mean, abs=1e-6)
        # risk-averse end: one step short of eps=1 hits the strict robust
        # value over the full support
        hi = reform_optimum(
            CvarConstraintSpec(pm, spec.g, 1.0 - 1.0 / (10 * ell), 0.0,
                               spec.grid), x)
        robust = max_linear(confidence_set(pm, 0.0), x)[0]
        worst_hi = max(worst_hi, abs(hi - robust))
        assert hi == pytest.approx(robust, abs=1e-4)
    report("limit behavior at the ends of the risk range", True,
           f"max err {worst_lo:.2e} / {worst_hi:.2e}")


def test_portfolio_nominal():
    exact = True
    for eps in (0.0, 0.2, 0.4, 0.6, 0.8):
        inst, model, _ = build_portfolio(0.0, eps)
        res = solve_portfolio(inst, model)
        assert res.status == Status.OPTIMAL
        x = [res.value(f"x{j + 1}") for j in range(6)]
        exact = exact and x == [0.0, 0.0, 0.0, 0.0, 1.0, 0.0]
    report("nominal portfolio concentrates exactly on asset 5", exact)
    assert exact


def test_portfolio_gap_profile():
    t0 = time.perf_counter()
    eps_values = [i / 10 for i in range(10)]
    rows = portfolio_sweep([4.0], eps_values)
    gaps = [gap for *_, gap in rows]
    peak = int(np.argmax(gaps))
    inst, model, _ = build_portfolio(4.0, 0.4)
    res = solve_portfolio(inst, model, SolverConfig(cone_tol=1e-3))
    weights = np.array([res.value(f"x{j + 1}") for j in range(6)])
    elapsed = time.perf_counter() - t0
    ok = (all(g > 0 for g in gaps) and eps_values[peak] == 0.4
          and 1.0 <= gaps[peak] <= 1.6 and int(np.argmax(weights)) == 5
          and int(np.sum(weights > 0.01)) >= 3 and elapsed <= 120.0)
    report("portfolio robustness-gap profile", ok,
           f"peak {gaps[peak]:.3f} at eps={eps_values[peak]}, "
           f"weights {np.round(weights, 3).tolist()}, {elapsed:.1f} s")
    assert all(g > 0 for g in gaps)
    assert eps_values[peak] == 0.4
    assert 1.0 <= gaps[peak] <= 1.6
    assert int(np.argmax(weights)) == 5
    assert int(np.sum(weights > 0.01)) >= 3
    assert elapsed <= 120.0


def test_knapsack_trends():
    t0 = time.perf_counter()
    deltas = [0.0, 0.1, 0.2, 0.3]
    eps_values = [i / 10 for i in range(10)]
    rows = knapsack_sweep(deltas, eps_values, n=50, seed=0, ell=100)
    elapsed = time.perf_counter() - t0
    table = {(d, e): obj for d, e, obj, status, _ in rows}
    assert all(status == Status.OPTIMAL for *_, status, _ in rows)
    slack = 1e-6
    base = table[(0.0, 0.0)]
    const_ok = all(abs(table[(0.0, e)] - base) <= slack for e in eps_values)
    delta_ok = all(table[(a, e)] >= table[(b, e)] - slack
                   for e in eps_values
                   for a, b in zip(deltas, deltas[1:]))
    eps_ok = all(table[(d, a)] >= table[(d, b)] - slack
                 for d in deltas if d > 0
                 for a, b in zip(eps_values, eps_values[1:]))
    ok = const_ok and delta_ok and eps_ok and elapsed <= 300.0
    report("knapsack objective trends", ok, f"{elapsed:.1f} s")
    assert const_ok and delta_ok and eps_ok
    assert elapsed <= 300.0


def _btn_pair(model: ConicModel, p: str, q: str, tag: str,
              nu: int = 12) -> str:
    """Polyhedral upper bound on the 2-norm of ``(p, q)``.

    Chain of rotations that folds the quarter plane onto a thin wedge; the
    returned variable over-reaches the true norm by at most
    ``1/cos(pi/2^(nu+1)) - 1`` relative, about 7e-8 for ``nu = 12``."""
    a = model.add_var(f"{tag}.a0", 0.0)
    b = model.add_var(f"{tag}.b0", 0.0)
    for var, src in ((a, p), (b, q)):
        model.add_row({var: 1.0, src: -1.0}, ">=", 0.0)
        model.add_row({var: 1.0, src: 1.0}, ">=", 0.0)
    for j in range(1, nu + 1):
        theta = math.pi / 2 ** (j + 1)
        an = model.add_var(f"{tag}.a{j}", 0.0)
        bn = model.add_var(f"{tag}.b{j}", 0.0)
        model.add_row({an: 1.0, a: -math.cos(theta), b: -math.sin(theta)},
                      "==", 0.0)
        model.add_row({bn: 1.0, a: math.sin(theta), b: -math.cos(theta)},
                      ">=", 0.0)
        model.add_row({bn: 1.0, a: -math.sin(theta), b: math.cos(theta)},
                      ">=", 0.0)
        a, b = an, bn
    return a


def _polyhedral_relaxation(model: ConicModel) -> ConicModel:
    """Replace every cone with a fine polyhedral approximation."""
    lp = model.copy()
    cones, lp.cones = lp.cones, []
    for k, cone in enumerate(cones):
        level = list(cone.members)
        stage = 0
        while len(level) > 1:
            nxt = []
            for i in range(0, len(level) - 1, 2):
                nxt.append(_btn_pair(lp, level[i], level[i + 1],
                                     f"btn{k}.{stage}.{i}"))
            if len(level) % 2:
                nxt.append(level[-1])
            level = nxt
            stage += 1
        last = level[0]
        lp.add_row({cone.head: 1.0, last: -1.0}, ">=", 0.0)
        lp.add_row({cone.head: 1.0, last: 1.0}, ">=", 0.0)
    return lp


def test_conic_solver_against_polyhedral_lp():
    rng = np.random.default_rng(71)
    # the loop stops at a relative violation of cone_tol * (1 + head); heads
    # stay below ~15 here, so 5e-8 guarantees 1e-6 absolute
    cfg = SolverConfig(cone_tol=5e-8, max_cuts_per_cone=200)
    max_viol = max_rel = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, 4))
        m = ConicModel()
        xs = [m.add_var(f"x{j}", -1.0, 1.0) for j in range(k)]
        us = [m.add_var(f"u{i}") for i in range(n)]
        g = m.add_var("g", 0.0)
        amat = rng.uniform(-2.0, 2.0, (n, k))
        d = rng.uniform(-1.0, 1.0, n)
        for i in range(n):
            coeffs = {us[i]: 1.0}
            coeffs.update({xs[j]: -amat[i, j] for j in range(k)})
            m.add_row(coeffs, "==", float(d[i]))
        m.add_cone(g, us)
        c = rng.uniform(-1.0, 1.0, k)
        m.set_objective("min", {g: 1.0, **{xs[j]: float(c[j])
                                           for j in range(k)}})
        res = solve_conic(m, cfg)
        assert res.status == Status.OPTIMAL
        assert res.cut_count <= 200 * len(m.cones)
        u = np.array([res.value(nm) for nm in us])
        viol = float(np.linalg.norm(u)) - res.value("g")
        max_viol = max(max_viol, viol)
        assert viol <= 1e-6
        ref = solve_lp(_polyhedral_relaxation(m))
        assert ref.status == Status.OPTIMAL
        rel = abs(res.objective - ref.objective) / (1.0 + abs(ref.objective))
        max_rel = max(max_rel, rel)
        assert rel <= 1e-4
    report("cut loop matches fine polyhedral relaxation on 50 blocks", True,
           f"max violation {max_viol:.2e}, max rel diff {max_rel:.2e}")


def test_structural_invariants():
    rng = np.random.default_rng(97)
    g = Disutility.identity()
    cases = 0
    for _ in range(1000):
        spec, x = random_small_instance(rng)
        pm, grid = spec.coeffs, spec.grid
        fi = pm.marginals[int(rng.integers(len(pm.marginals)))]

        # nested cuts
        l1, l2 = sorted(rng.uniform(1e-6, 1.0, 2))
        lo1, hi1 = fi.cut(l1)
        lo2, hi2 = fi.cut(l2)
        assert lo1 <= lo2 + 1e-12 and hi2 <= hi1 + 1e-12

        # membership / cut duality at an interior point
        u = float(rng.uniform(0.05, 0.95))
        pt = lo2 + u * (hi2 - lo2)
        assert fi.membership(pt) >= l2 - 1e-9

        # joint possibility peaks at the nominal vector and never exceeds 1
        nominal = np.array([mi.nominal for mi in pm.marginals])
        assert joint_possibility(pm, nominal) == 1.0
        probe = nominal + rng.uniform(-4.0, 4.0, len(nominal))
        assert joint_possibility(pm, probe) <= 1.0

        # CVaR dominates the mean and grows with the risk level
        mean = worst_expectation(pm, grid, lambda cs: max_linear(cs, x)[0])
        e1, e2 = sorted(rng.uniform(0.0, 0.95, 2))
        c1 = worst_cvar(pm, grid, x, g, e1)
        c2 = worst_cvar(pm, grid, x, g, e2)
        assert c1 >= mean - 1e-10 and c2 >= c1 - 1e-10

        # a larger deviation budget can only hurt
        dev = pm.deviation
        pm_wide = PossibilityModel(
            pm.marginals,
            DeviationSpec(dev.norm,
                          DeviationInterval(2.0 * dev.dev.budget,
                                            dev.dev.shape),
                          matrix=dev.matrix))
        assert worst_cvar(pm_wide, grid, x, g, e1) >= c1 - 1e-10

        # a finer level grid can only tighten the bound
        fine = worst_cvar(pm, LambdaGrid(2 * grid.resolution), x, g, e1)
        assert fine <= c1 + 1e-10
        cases += 1
    report("structural invariants on randomized cases", cases == 1000,
           f"{cases} cases")
    assert cases == 1000
