"""IMEX/explicit time stepping, convergence harness, elliptic descent, and
the forward-uniqueness decay curve."""
from .cauchy import SCHEMES, SolverConfig, default_reaction_floor, solve_cauchy
from .elliptic import DescentConfig, EllipticResult, minimize_elliptic
from .studies import (ConvergenceStudy, convergence_study, nonincrease_defect, subsample_time,
                      uniqueness_decay_check)

__all__ = [
    "SCHEMES", "ConvergenceStudy", "DescentConfig", "EllipticResult", "SolverConfig", "convergence_study",
    "default_reaction_floor", "minimize_elliptic", "nonincrease_defect", "solve_cauchy", "subsample_time",
    "uniqueness_decay_check",
]
