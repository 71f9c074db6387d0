"""Generalized Bregman ADMM over an abstract split problem.

The problem is

    min f(x) + g(z)   s.t.   A x + B z = c,   x in X, z in Z,

and one sweep performs

    x+ = argmin_x f(x) + <y, A x + B z - c> + rho B_phi(c - A x, B z) + rho_x B_phix(x, x_t)
    z+ = argmin_z g(z) + <y, A x+ + B z - c> + rho B_phi(B z, c - A x+) + rho_z B_phiz(z, z_t)
    y+ = y + tau (A x+ + B z+ - c)

The subproblem solvers are supplied by the front-ends.  This module also
holds the convergence diagnostics: the optimality residual R, the Lyapunov
distance D to a KKT point, the admissible dual step size and the ergodic
quantities.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import divergence as dv
from .core import IterateState, StepParameters


def _params(config) -> StepParameters:
    if isinstance(config, StepParameters):
        return config
    return config.parameters()


class SplitProblem(ABC):
    """Front-end contract for the engine.

    `phi` is the augmentation divergence shared by both subproblems; `phi_x`
    and `phi_z` are the proximal divergences of the x- and z-updates.
    Subproblem solvers must return points inside X and Z respectively.
    """

    phi: dv.DivergenceSpec = dv.SQUARED_EUCLIDEAN
    phi_x: dv.DivergenceSpec = dv.SQUARED_EUCLIDEAN
    phi_z: dv.DivergenceSpec = dv.SQUARED_EUCLIDEAN

    @abstractmethod
    def f_value(self, x) -> float: ...

    @abstractmethod
    def g_value(self, z) -> float: ...

    @abstractmethod
    def apply_A(self, x) -> np.ndarray: ...

    @abstractmethod
    def apply_B(self, z) -> np.ndarray: ...

    @property
    @abstractmethod
    def c(self) -> np.ndarray: ...

    @abstractmethod
    def solve_x(self, state: IterateState, params: StepParameters) -> np.ndarray:
        """Minimize the x-subproblem around (x_t, z_t, y_t) = state."""

    @abstractmethod
    def solve_z(self, x_new, state: IterateState, params: StepParameters) -> np.ndarray:
        """Minimize the z-subproblem given the fresh x and (z_t, y_t) = state."""

    @property
    @abstractmethod
    def dims(self) -> tuple[int, int, int]:
        """(n1, n2, m): sizes of x, z and of the constraint."""

    def constraint_residual(self, x, z) -> np.ndarray:
        return self.apply_A(x) + self.apply_B(z) - self.c

    def objective(self, x, z) -> float:
        return self.f_value(x) + self.g_value(z)


@dataclass(frozen=True)
class KKTPoint:
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray

    @classmethod
    def from_state(cls, state: IterateState) -> "KKTPoint":
        return cls(state.X.copy(), state.Z.copy(), state.Y.copy())

    def check(self, problem: SplitProblem, atol: float = 1e-8) -> None:
        r = problem.constraint_residual(self.x, self.z)
        if np.max(np.abs(r)) > atol:
            raise ValueError(f"reference point violates A x + B z = c by {np.max(np.abs(r)):.3g}")


def iterate(problem: SplitProblem, state: IterateState, config) -> IterateState:
    """One x-then-z-then-y sweep; returns a new state with t incremented."""
    p = _params(config)
    x = problem.solve_x(state, p)
    z = problem.solve_z(x, state, p)
    y = state.Y + p.tau * problem.constraint_residual(x, z)
    return IterateState(x, z, y, state.t + 1)


def residual_R(problem: SplitProblem, prev: IterateState, new: IterateState, config) -> float:
    """Optimality residual of the sweep prev -> new.

    (rho_x/rho) B_phix(x+, x) + (rho_z/rho) B_phiz(z+, z)
        + B_phi(c - A x+, B z) + gamma ||A x+ + B z+ - c||^2
    """
    p = _params(config)
    total = 0.0
    if p.rho_x:
        total += p.rho_x / p.rho * dv.value(problem.phi_x, new.X, prev.X)
    if p.rho_z:
        total += p.rho_z / p.rho * dv.value(problem.phi_z, new.Z, prev.Z)
    total += dv.value(problem.phi, problem.c - problem.apply_A(new.X), problem.apply_B(prev.Z))
    r = problem.constraint_residual(new.X, new.Z)
    total += p.gamma * float(np.vdot(r, r))
    return total


def lyapunov_D(problem: SplitProblem, ref: KKTPoint, state: IterateState, config) -> float:
    """Distance from `state` to the KKT point `ref`.

    ||y* - y||^2 / (2 tau rho) + B_phi(B z*, B z)
        + (rho_x/rho) B_phix(x*, x) + (rho_z/rho) B_phiz(z*, z)
    """
    p = _params(config)
    dy = ref.y - state.Y
    total = float(np.vdot(dy, dy)) / (2.0 * p.tau * p.rho)
    total += dv.value(problem.phi, problem.apply_B(ref.z), problem.apply_B(state.Z))
    if p.rho_x:
        total += p.rho_x / p.rho * dv.value(problem.phi_x, ref.x, state.X)
    if p.rho_z:
        total += p.rho_z / p.rho * dv.value(problem.phi_z, ref.z, state.Z)
    return total


def step_size_bound(alpha: float, p: float, m: int, gamma: float, rho: float) -> float:
    """Largest dual step tau for which R(t+1) <= D(w*, w_t) - D(w*, w_{t+1}).

    tau_max = (alpha sigma - 2 gamma) rho with sigma = min(1, m^(2/p - 1)),
    where m is the number of constraint rows.
    """
    if not (alpha > 0 and p > 0 and m >= 1 and rho > 0):
        raise ValueError("need alpha > 0, p > 0, m >= 1 and rho > 0")
    sigma = min(1.0, float(m) ** (2.0 / p - 1.0))
    if not 0 < gamma < alpha * sigma / 2:
        raise ValueError(f"gamma must lie in (0, {alpha * sigma / 2}), got {gamma}")
    return (alpha * sigma - 2.0 * gamma) * rho


def sqrt_t_schedule(T: int, c1: float, c2: float) -> tuple[float, float, float, float]:
    """Horizon-dependent constants (rho_x, rho_z, tau, rho) = (c1, c1, c2, 1) * sqrt(T)."""
    if T < 1 or c1 < 0 or not c2 > 0:
        raise ValueError("need T >= 1, c1 >= 0 and c2 > 0")
    root = math.sqrt(T)
    return c1 * root, c1 * root, c2 * root, root


def ergodic_average(iterates: Sequence[IterateState], T: int | None = None):
    """Means of x_t and z_t over t = 1..T.

    `iterates` holds the states after sweeps 1, 2, ...; the initial state is
    not part of the average.
    """
    if T is None:
        T = len(iterates)
    if T < 1 or len(iterates) < T:
        raise ValueError(f"need at least {max(T, 1)} recorded iterates, have {len(iterates)}")
    x_bar = np.zeros_like(iterates[0].X, dtype=np.float64)
    z_bar = np.zeros_like(iterates[0].Z, dtype=np.float64)
    for s in iterates[:T]:
        x_bar += s.X
        z_bar += s.Z
    return x_bar / T, z_bar / T


def ergodic_bound_D1(problem: SplitProblem, ref: KKTPoint, initial: IterateState, config) -> float:
    """Constant D1 in  f(x_bar_T) + g(z_bar_T) - f* <= D1 / T  (requires y_0 = 0).

    D1 = rho B_phi(B z*, B z0) + rho_x B_phix(x*, x0) + rho_z B_phiz(z*, z0)
    """
    if np.any(initial.Y != 0):
        raise ValueError("the ergodic bound assumes a zero initial dual variable")
    p = _params(config)
    total = p.rho * dv.value(problem.phi, problem.apply_B(ref.z), problem.apply_B(initial.Z))
    if p.rho_x:
        total += p.rho_x * dv.value(problem.phi_x, ref.x, initial.X)
    if p.rho_z:
        total += p.rho_z * dv.value(problem.phi_z, ref.z, initial.Z)
    return total


class QuadraticSplit(SplitProblem):
    """f(x) = 0.5 x'Px + q'x, g(z) = 0.5 z'Qz + r'z with dense A, B, c.

    All three divergences are squared Euclidean, so both subproblems reduce
    to linear systems.  Used to cross-check the engine against textbook ADMM.
    """

    def __init__(self, P, q, Q, r, A, B, c):
        self.P, self.q = np.asarray(P, float), np.asarray(q, float)
        self.Q, self.r = np.asarray(Q, float), np.asarray(r, float)
        self.A, self.B = np.asarray(A, float), np.asarray(B, float)
        self._c = np.asarray(c, float)

    @property
    def c(self):
        return self._c

    @property
    def dims(self):
        return self.A.shape[1], self.B.shape[1], self.A.shape[0]

    def f_value(self, x):
        return 0.5 * x @ self.P @ x + self.q @ x

    def g_value(self, z):
        return 0.5 * z @ self.Q @ z + self.r @ z

    def apply_A(self, x):
        return self.A @ x

    def apply_B(self, z):
        return self.B @ z

    def solve_x(self, state, params):
        rho, rho_x = params.rho, params.rho_x
        n1 = self.A.shape[1]
        lhs = self.P + rho * self.A.T @ self.A + rho_x * np.eye(n1)
        rhs = -self.q - self.A.T @ state.Y - rho * self.A.T @ (self.B @ state.Z - self.c)
        rhs = rhs + rho_x * state.X
        return np.linalg.solve(lhs, rhs)

    def solve_z(self, x_new, state, params):
        rho, rho_z = params.rho, params.rho_z
        n2 = self.B.shape[1]
        lhs = self.Q + rho * self.B.T @ self.B + rho_z * np.eye(n2)
        rhs = -self.r - self.B.T @ state.Y - rho * self.B.T @ (self.A @ x_new - self.c)
        rhs = rhs + rho_z * state.Z
        return np.linalg.solve(lhs, rhs)
