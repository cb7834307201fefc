"""Distributionally robust CVaR constraints from possibilistic uncertainty.

Uncertain linear-constraint coefficients are described by fuzzy intervals
whose joint possibility distribution induces an ambiguity set of probability
measures; worst-case CVaR constraints over that set are reformulated into
deterministic linear or second-order cone blocks and solved with a bundled
dense simplex plus an outer-approximation cut loop.
"""

from .ambiguity import (ConfidenceSet, DeviationSpec, LambdaGrid, Norm,
                        PossibilityModel, confidence_set, joint_possibility,
                        max_linear, necessity_of_cut)
from .fuzzy import DeviationInterval, FuzzyInterval
from .model import EQ, GE, LE, Cone, ConicModel, Row
from .oracle import (DiscreteDistribution, cvar_discrete, default_atoms,
                     moment_lp_oracle, ring_argmax_atoms, worst_cvar,
                     worst_expectation)
from .problems import (PORTFOLIO_ELL, KnapsackInstance, PortfolioInstance,
                        build_portfolio, default_tangent_range, exp_tangents,
                        gen_knapsack, inv_sqrt_cov, knapsack_sweep,
                        nominal_portfolio_value, portfolio_data,
                        portfolio_sweep, solve_knapsack, solve_portfolio)
from .reform import (CvarBlock, CvarConstraintSpec, Disutility,
                     apply_disutility, build_problem, emit_block,
                     emit_block_l1, emit_block_l2, emit_block_linf)
from .solver import (CertificateReport, SolveResult, SolverConfig, Status,
                     check_certificate, solve_conic, solve_lp)
from .validate import cross_validate, random_small_instance, reform_optimum

__version__ = "0.1.0"
