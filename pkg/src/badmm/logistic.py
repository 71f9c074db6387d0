"""Sparse logistic regression  min h(x) + lam ||z||_1  s.t.  x = z.

The x-update linearizes the logistic loss at x_t and adds a quadratic
proximal term, which gives a closed form; the z-update is soft thresholding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import divergence as dv
from .core import IterateState, StepParameters, Trace, TraceRecord, as_matrix, as_vector
from .framework import SplitProblem, iterate

CONVERGED = "converged"
ITERATION_LIMIT = "iteration limit"


@dataclass(frozen=True)
class LogisticProblem:
    features: np.ndarray
    labels: np.ndarray
    lam: float = 0.1

    def __post_init__(self):
        W = as_matrix(self.features, "features")
        y = as_vector(self.labels, "labels")
        if y.shape != (W.shape[0],):
            raise ValueError(f"{y.size} labels for {W.shape[0]} samples")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be -1 or +1")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be a nonnegative number")
        object.__setattr__(self, "features", W)
        object.__setattr__(self, "labels", y)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def logistic_value_grad(problem: LogisticProblem, x) -> tuple[float, np.ndarray]:
    """h(x) = mean(log(1 + exp(-y_s <w_s, x>))) and its gradient."""
    W, y = problem.features, problem.labels
    margins = y * (W @ x)
    value = float(np.mean(np.logaddexp(0.0, -margins)))
    # sigmoid(-margin), evaluated without overflow
    e = np.exp(-np.abs(margins))
    weight = np.where(margins >= 0, e / (1.0 + e), 1.0 / (1.0 + e))
    grad = -(W.T @ (y * weight)) / problem.n_samples
    return value, grad


def composite_objective(problem: LogisticProblem, x) -> float:
    return logistic_value_grad(problem, x)[0] + problem.lam * float(np.sum(np.abs(x)))


def lipschitz_constant(problem: LogisticProblem, steps: int = 50) -> float:
    """Upper bound lambda_max(W'W) / (4N) on the curvature of h, by power iteration."""
    W = problem.features
    v = np.ones(problem.n_features) / math.sqrt(problem.n_features)
    eig = 0.0
    for _ in range(steps):
        w = W.T @ (W @ v)
        eig = float(np.linalg.norm(w))
        if eig == 0.0:
            return 0.0
        v = w / eig
    return eig / (4.0 * problem.n_samples)


def linearized_x_update(problem: LogisticProblem, state: IterateState, rho: float, rho_x: float):
    """x' = (rho z - y - grad h(x_t) + rho_x x_t) / (rho + rho_x)."""
    if rho + rho_x == 0:
        raise ValueError("rho + rho_x must be nonzero")
    _, grad = logistic_value_grad(problem, state.X)
    return (rho * state.Z - state.Y - grad + rho_x * state.X) / (rho + rho_x)


def soft_threshold(v, threshold: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def soft_threshold_z_update(state: IterateState, rho: float, lam: float, rho_z: float = 0.0):
    """Prox of lam ||.||_1 at x' + y/rho (state holds the fresh x').

    With rho_z > 0 the point is pulled towards z_t and the threshold becomes
    lam / (rho + rho_z).
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    v = (rho * state.X + state.Y + rho_z * state.Z) / (rho + rho_z)
    return soft_threshold(v, lam / (rho + rho_z))


class LogisticSplit(SplitProblem):
    """Engine adapter with A = I, B = -I, c = 0.

    The proximal divergence carried here is the quadratic psi; the
    effective x-proximal term of the linearized step is psi - h / rho_x.
    """

    phi = phi_x = phi_z = dv.SQUARED_EUCLIDEAN

    def __init__(self, problem: LogisticProblem):
        self.problem = problem
        self._c = np.zeros(problem.n_features)

    @property
    def dims(self):
        d = self.problem.n_features
        return d, d, d

    @property
    def c(self):
        return self._c

    def f_value(self, x):
        return logistic_value_grad(self.problem, x)[0]

    def g_value(self, z):
        return self.problem.lam * float(np.sum(np.abs(z)))

    def apply_A(self, x):
        return np.asarray(x)

    def apply_B(self, z):
        return -np.asarray(z)

    def solve_x(self, state, params):
        return linearized_x_update(self.problem, state, params.rho, params.rho_x)

    def solve_z(self, x_new, state, params):
        fresh = IterateState(x_new, state.Z, state.Y, state.t)
        return soft_threshold_z_update(fresh, params.rho, self.problem.lam, params.rho_z)


@dataclass
class LogisticResult:
    state: IterateState
    trace: Trace
    reason: str
    params: StepParameters

    @property
    def x(self) -> np.ndarray:
        return self.state.X

    @property
    def z(self) -> np.ndarray:
        return self.state.Z

    @property
    def consensus_gap(self) -> float:
        return float(np.max(np.abs(self.state.X - self.state.Z)))


def solve_logistic(
    problem: LogisticProblem,
    rho: float = 1.0,
    rho_x: float | None = None,
    tau_ratio: float = 1.0,
    max_iters: int = 20000,
    tol: float = 1e-8,
    gamma: float = 0.125,
) -> LogisticResult:
    """Run linearized BADMM from x = z = y = 0.

    `rho_x` defaults to the curvature bound of the logistic loss.  Stops
    when max(||x - z||, rho ||z_{t+1} - z_t||) <= tol.  Trace objectives are
    the composite h(z) + lam ||z||_1 at the sparse iterate z.
    """
    if rho_x is None:
        rho_x = lipschitz_constant(problem)
    params = StepParameters(rho=rho, tau=tau_ratio * rho, rho_x=rho_x, gamma=gamma)
    split = LogisticSplit(problem)
    d = problem.n_features
    state = IterateState(np.zeros(d), np.zeros(d), np.zeros(d), 0)
    trace = Trace()
    reason = ITERATION_LIMIT
    for _ in range(max_iters):
        new = iterate(split, state, params)
        r = new.X - new.Z
        primal = float(np.linalg.norm(r))
        dual = rho * float(np.linalg.norm(new.Z - state.Z))
        # squared-Euclidean residual of the sweep; the proximal term uses psi
        R = (
            rho_x / rho * 0.5 * float(np.sum((new.X - state.X) ** 2))
            + 0.5 * float(np.sum((new.X - state.Z) ** 2))
            + gamma * primal * primal
        )
        trace.append(TraceRecord(new.t, 0.0, composite_objective(problem, new.Z), primal, dual, R))
        state = new
        if max(primal, dual) <= tol:
            reason = CONVERGED
            break
    return LogisticResult(state, trace, reason, params)


def make_synthetic(n_samples: int = 50, n_features: int = 10, seed: int = 0, lam: float = 0.1):
    """Gaussian features with labels from a sparse linear model plus noise."""
    rng = np.random.Generator(np.random.PCG64(seed))
    W = rng.standard_normal((n_samples, n_features))
    truth = np.zeros(n_features)
    k = max(1, n_features // 3)
    truth[:k] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(1.0, 3.0, size=k)
    score = W @ truth + 0.5 * rng.standard_normal(n_samples)
    labels = np.where(score >= 0, 1.0, -1.0)
    return LogisticProblem(W, labels, lam)


def load_logistic_csv(path, lam: float = 0.1) -> LogisticProblem:
    """One sample per row, label (+1 or -1) in the final column."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data")
    if len({len(r) for r in rows}) != 1 or len(rows[0]) < 2:
        raise ValueError(f"{path}: rows need the same number (>= 2) of columns")
    data = np.array(rows)
    return LogisticProblem(data[:, :-1], data[:, -1], lam)
