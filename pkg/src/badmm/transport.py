"""Mass transportation front-end.

The LP  min <C, X>  s.t.  X e = a, X^T e = b, X >= 0  is split as X = Z with
X in the row simplices {X >= 0, X e = a} and Z in the column simplices
{Z >= 0, Z^T e = b}.  Two variants are provided:

* ``badmm-kl``: KL augmentation, giving closed-form exponentiated-gradient
  updates; the iterates are carried in the log domain.
* ``admm``: quadratic augmentation, where each update is a row- or
  column-wise Euclidean projection onto a scaled simplex.

Both run with optional proximal terms of the same divergence family.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import divergence as dv
from .core import (
    IterateState,
    SolverConfig,
    StepParameters,
    StopRule,
    Trace,
    TraceRecord,
    TransportProblem,
    Variant,
    frobenius_norm,
)
from .framework import SplitProblem
from .projection import project_columns, project_rows

# Entries whose log lies more than 300 below the row/column maximum are
# materialized as exp(-300) times the normalizer.  Smaller values would turn
# into subnormals and slow every later pass over the matrix by an order of
# magnitude; the log-domain iterate itself is never clipped.
LOG_FLOOR = -300.0

CONVERGED = "converged"
ITERATION_LIMIT = "iteration limit"


def initial_state(problem: TransportProblem) -> IterateState:
    """Z0_ij = a_i b_j / sum(b), X0 = Z0, Y0 = 0."""
    a, b = problem.a, problem.b
    Z = np.outer(a, b) / b.sum()
    log_Z = np.log(a)[:, None] + np.log(b)[None, :] - math.log(b.sum())
    return IterateState(Z.copy(), Z, np.zeros_like(Z), 0, log_Z.copy(), log_Z)


def _normalize_log(W, mass, axis, out=None, log_out=None):
    """Scale exp(W) along `axis` to the given masses; W is overwritten.

    Returns the scaled matrix and its exact logarithm.
    """
    mx = W.max(axis=axis, keepdims=True)
    if not np.all(np.isfinite(mx)):
        which = "row" if axis == 1 else "column"
        bad = int(np.flatnonzero(~np.isfinite(mx.ravel()))[0])
        raise ValueError(f"{which} {bad} of the reference iterate has zero mass")
    W -= mx
    out = np.maximum(W, LOG_FLOOR, out=out)
    np.exp(out, out=out)
    s = out.sum(axis=axis, keepdims=True)
    out *= mass / s
    log_out = np.subtract(W, np.log(s) - np.log(mass), out=log_out)
    return out, log_out


def _log_of(state: IterateState, which: str) -> np.ndarray:
    cached = getattr(state, "log_" + which)
    if cached is not None:
        return cached
    with np.errstate(divide="ignore"):
        return np.log(getattr(state, which))


def _kl_x(problem, log_Z, Y, rho, rho_x=0.0, log_X_prev=None, work=None, out=None, log_out=None):
    W = np.add(problem.C, Y, out=work)
    if rho_x:
        W *= -1.0 / (rho + rho_x)
        W += (rho * log_Z + rho_x * log_X_prev) / (rho + rho_x)
    else:
        W *= -1.0 / rho
        W += log_Z
    return _normalize_log(W, problem.a[:, None], 1, out, log_out)


def _kl_z(problem, log_X, Y, rho, rho_z=0.0, log_Z_prev=None, work=None, out=None, log_out=None):
    if rho_z:
        W = np.multiply(rho, log_X, out=work)
        W += rho_z * log_Z_prev
        W += Y
        W *= 1.0 / (rho + rho_z)
    else:
        W = np.multiply(Y, 1.0 / rho, out=work)
        W += log_X
    return _normalize_log(W, problem.b[None, :], 0, out, log_out)


def badmm_x_update(problem: TransportProblem, state: IterateState, rho: float, rho_x: float = 0.0):
    """Row-wise exponentiated-gradient step.

    X'_ij = a_i Z_ij exp(-(C_ij + Y_ij)/rho) / sum_k Z_ik exp(-(C_ik + Y_ik)/rho),
    the minimizer of <C + Y, X> + rho KL(X, Z) (+ rho_x KL(X, X_t)) over
    the row simplices.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    log_X_prev = _log_of(state, "X") if rho_x else None
    X, log_X = _kl_x(problem, _log_of(state, "Z"), state.Y, rho, rho_x, log_X_prev)
    X[np.isneginf(log_X)] = 0.0
    return X


def badmm_z_update(problem: TransportProblem, state: IterateState, rho: float, rho_z: float = 0.0):
    """Column-wise step using the fresh X held in `state`.

    Z'_ij = b_j X_ij exp(Y_ij/rho) / sum_k X_kj exp(Y_kj/rho).
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    log_Z_prev = _log_of(state, "Z") if rho_z else None
    Z, log_Z = _kl_z(problem, _log_of(state, "X"), state.Y, rho, rho_z, log_Z_prev)
    Z[np.isneginf(log_Z)] = 0.0
    return Z


def dual_update(state: IterateState, tau: float) -> np.ndarray:
    """Y' = Y + tau (X - Z) for the X, Z held in `state`."""
    return state.Y + tau * (state.X - state.Z)


def admm_x_update(problem: TransportProblem, state: IterateState, rho: float, rho_x: float = 0.0):
    """Rows of (rho Z + rho_x X_t - C - Y) / (rho + rho_x) projected onto mass a_i."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    V = rho * state.Z - problem.C - state.Y
    if rho_x:
        V += rho_x * state.X
    V /= rho + rho_x
    return project_rows(V, problem.a)


def admm_z_update(problem: TransportProblem, state: IterateState, rho: float, rho_z: float = 0.0):
    """Columns of (rho X + Y + rho_z Z_t) / (rho + rho_z) projected onto mass b_j."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    V = rho * state.X + state.Y
    if rho_z:
        V += rho_z * state.Z
    V /= rho + rho_z
    return project_columns(V, problem.b)


def objective(problem: TransportProblem, X) -> float:
    """<C, X> = tr(C^T X)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != problem.C.shape:
        raise ValueError(f"X has shape {X.shape}, expected {problem.C.shape}")
    return float(np.vdot(problem.C, X))


@dataclass
class SolveResult:
    state: IterateState
    trace: Trace
    reason: str
    params: StepParameters

    @property
    def iterations(self) -> int:
        return self.state.t

    @property
    def objective(self) -> float:
        return self.trace[-1].objective


def solve(
    problem: TransportProblem,
    config: SolverConfig = SolverConfig(),
    callback: Callable[[IterateState], None] | None = None,
    timing: bool = True,
) -> SolveResult:
    """Run the configured variant until max(primal, dual) <= tol or max_iters.

    primal = ||X - Z||_F and dual = rho ||Z_{t+1} - Z_t||_F.  With
    ``config.stop_rule`` set to "sum" the test uses primal + dual.  A non-finite
    `tol` switches the residual test off.  `callback` sees the live state
    after every sweep; its arrays are reused, so copy anything retained.
    With ``timing=False`` the trace records zero elapsed time.
    """
    params = config.parameters()
    state = initial_state(problem)
    trace = Trace()
    clock = time.perf_counter
    start = clock()
    if config.variant is Variant.BADMM_KL:
        sweep = _KLSweep(problem, params, state)
    else:
        sweep = _EuclideanSweep(problem, params, state)
    check_tol = math.isfinite(config.tol)
    combine = max if config.stop_rule is StopRule.MAX else (lambda p, d: p + d)
    reason = ITERATION_LIMIT
    for _ in range(config.max_iters):
        primal, dual, R = sweep.step()
        state.t += 1
        elapsed = clock() - start if timing else 0.0
        trace.append(
            TraceRecord(state.t, elapsed, objective(problem, state.X), primal, dual, R)
        )
        if callback is not None:
            callback(state)
        if check_tol and combine(primal, dual) <= config.tol:
            reason = CONVERGED
            break
    return SolveResult(state, trace, reason, params)


class _KLSweep:
    """In-place log-domain BADMM sweeps over preallocated buffers."""

    def __init__(self, problem, params, state):
        self.problem, self.p, self.state = problem, params, state
        shape = problem.C.shape
        self.work = np.empty(shape)
        self.diff = np.empty(shape)
        self.X_new, self.log_X_new = np.empty(shape), np.empty(shape)
        self.Z_new, self.log_Z_new = np.empty(shape), np.empty(shape)

    def _kl(self, u, log_u, v, log_v) -> float:
        d = np.subtract(log_u, log_v, out=self.diff)
        d *= u
        d -= u
        d += v
        return max(float(d.sum()), 0.0)

    def step(self):
        s, p, pb = self.state, self.p, self.problem
        _kl_x(pb, s.log_Z, s.Y, p.rho, p.rho_x, s.log_X, self.work, self.X_new, self.log_X_new)
        R = self._kl(self.X_new, self.log_X_new, s.Z, s.log_Z)
        if p.rho_x:
            R += p.rho_x / p.rho * self._kl(self.X_new, self.log_X_new, s.X, s.log_X)
        _kl_z(pb, self.log_X_new, s.Y, p.rho, p.rho_z, s.log_Z, self.work, self.Z_new, self.log_Z_new)
        if p.rho_z:
            R += p.rho_z / p.rho * self._kl(self.Z_new, self.log_Z_new, s.Z, s.log_Z)

        d = np.subtract(self.X_new, self.Z_new, out=self.diff)
        primal = frobenius_norm(d)
        d *= p.tau
        s.Y += d
        dual = p.rho * frobenius_norm(np.subtract(self.Z_new, s.Z, out=self.diff))
        R += p.gamma * primal * primal

        s.X, self.X_new = self.X_new, s.X
        s.log_X, self.log_X_new = self.log_X_new, s.log_X
        s.Z, self.Z_new = self.Z_new, s.Z
        s.log_Z, self.log_Z_new = self.log_Z_new, s.log_Z
        return primal, dual, R


class _EuclideanSweep:
    def __init__(self, problem, params, state):
        self.problem, self.p, self.state = problem, params, state
        state.log_X = state.log_Z = None

    def step(self):
        s, p, pb = self.state, self.p, self.problem
        X = admm_x_update(pb, s, p.rho, p.rho_x)
        R = 0.5 * frobenius_norm(X - s.Z) ** 2
        if p.rho_x:
            R += p.rho_x / p.rho * 0.5 * frobenius_norm(X - s.X) ** 2
        Z = admm_z_update(pb, IterateState(X, s.Z, s.Y), p.rho, p.rho_z)
        if p.rho_z:
            R += p.rho_z / p.rho * 0.5 * frobenius_norm(Z - s.Z) ** 2
        d = X - Z
        primal = frobenius_norm(d)
        s.Y += p.tau * d
        dual = p.rho * frobenius_norm(Z - s.Z)
        R += p.gamma * primal * primal
        s.X, s.Z = X, Z
        return primal, dual, R


class TransportSplit(SplitProblem):
    """The transport LP as a generic split problem.

    Uses A = -I, B = I, c = 0, so that the augmentation term reads
    B_phi(X, Z).  The engine's dual variable is therefore y = -Y; convert
    with :func:`to_split_state` / :func:`from_split_state`.
    """

    def __init__(self, problem: TransportProblem, variant: Variant = Variant.BADMM_KL):
        self.problem = problem
        self.variant = Variant(variant)
        spec = dv.GENERALIZED_KL if self.variant is Variant.BADMM_KL else dv.SQUARED_EUCLIDEAN
        self.phi = self.phi_x = self.phi_z = spec
        self._c = np.zeros(problem.C.shape)

    @property
    def dims(self):
        size = self.problem.C.size
        return size, size, size

    @property
    def c(self):
        return self._c

    def f_value(self, x):
        return objective(self.problem, x)

    def g_value(self, z):
        return 0.0

    def apply_A(self, x):
        return -np.asarray(x)

    def apply_B(self, z):
        return np.asarray(z)

    def solve_x(self, state, params):
        native = from_split_state(state)
        if self.variant is Variant.BADMM_KL:
            return badmm_x_update(self.problem, native, params.rho, params.rho_x)
        return admm_x_update(self.problem, native, params.rho, params.rho_x)

    def solve_z(self, x_new, state, params):
        native = from_split_state(state)
        native.X = x_new
        native.log_X = None
        if self.variant is Variant.BADMM_KL:
            return badmm_z_update(self.problem, native, params.rho, params.rho_z)
        return admm_z_update(self.problem, native, params.rho, params.rho_z)


def to_split_state(state: IterateState) -> IterateState:
    """Transport state (dual Y) to engine convention (dual y = -Y)."""
    return IterateState(state.X, state.Z, -state.Y, state.t, state.log_X, state.log_Z)


def from_split_state(state: IterateState) -> IterateState:
    return IterateState(state.X, state.Z, -state.Y, state.t, state.log_X, state.log_Z)
