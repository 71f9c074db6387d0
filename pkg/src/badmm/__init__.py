"""Bregman ADMM solvers with convergence diagnostics."""

from .core import (
    IterateState,
    Schedule,
    SolverConfig,
    StepParameters,
    StopRule,
    Trace,
    TraceRecord,
    TransportProblem,
    Variant,
    frobenius_norm,
    uniform_cost_matrix,
)
from .divergence import GENERALIZED_KL, SQUARED_EUCLIDEAN, DivergenceSpec
from .framework import KKTPoint, SplitProblem, iterate, lyapunov_D, residual_R
from .logistic import LogisticProblem, solve_logistic
from .oracle import assignment_bruteforce
from .projection import project_simplex
from .transport import TransportSplit, solve

__version__ = "0.1.0"
