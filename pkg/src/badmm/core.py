"""Shared data types for the solvers: problems, configuration, iterates and traces.

Matrices and vectors are plain ``numpy.ndarray`` objects of dtype float64.
The helpers :func:`as_matrix` and :func:`as_vector` validate them on the way
in (finite entries, non-empty), after which they are treated as immutable by
everything except the solver loop that owns an :class:`IterateState`.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

MARGINAL_RTOL = 1e-9

TRACE_HEADER = (
    "iter",
    "elapsed_sec",
    "objective",
    "primal_residual",
    "dual_residual",
    "R_residual",
)


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Return `data` as a C-contiguous float64 2-D array, rejecting NaN/Inf."""
    M = np.array(data, dtype=np.float64, order="C", copy=True)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf")
    return M


def as_vector(data, name: str = "vector") -> np.ndarray:
    v = np.array(data, dtype=np.float64, copy=True)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if v.size == 0:
        raise ValueError(f"{name} must not be empty")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf")
    return v


def frobenius_norm(M) -> float:
    M = np.asarray(M, dtype=np.float64)
    return math.sqrt(float(np.vdot(M, M)))


def uniform_cost_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """Cost matrix with i.i.d. entries uniform on [0, 1).

    Entries come from numpy's PCG64 bit generator seeded with `seed` and are
    drawn in row-major order, so a given (m, n, seed) always yields the same
    matrix for a given numpy release.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.random((m, n))


@dataclass(frozen=True)
class TransportProblem:
    """min <C, X>  s.t.  X e = a,  X^T e = b,  X >= 0."""

    C: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        C = as_matrix(self.C, "C")
        a = as_vector(self.a, "a")
        b = as_vector(self.b, "b")
        m, n = C.shape
        if a.shape != (m,) or b.shape != (n,):
            raise ValueError(
                f"marginal lengths ({a.size}, {b.size}) do not match C of shape {C.shape}"
            )
        if np.any(a <= 0) or np.any(b <= 0):
            raise ValueError("marginals must be strictly positive")
        sa, sb = float(a.sum()), float(b.sum())
        if abs(sa - sb) > MARGINAL_RTOL * max(sa, sb):
            raise ValueError(f"marginal sums differ: sum(a)={sa!r}, sum(b)={sb!r}")
        for arr in (C, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def assignment(cls, C) -> "TransportProblem":
        """Square problem with unit marginals a = b = e."""
        C = as_matrix(C, "C")
        m, n = C.shape
        if m != n:
            raise ValueError("assignment problems need a square cost matrix")
        return cls(C, np.ones(m), np.ones(n))

    @classmethod
    def balanced(cls, C) -> "TransportProblem":
        """Unit row marginals with column marginals rescaled to the same total mass."""
        C = as_matrix(C, "C")
        m, n = C.shape
        return cls(C, np.ones(m), np.full(n, m / n))

    @property
    def shape(self) -> tuple[int, int]:
        return self.C.shape


class Variant(str, Enum):
    BADMM_KL = "badmm-kl"
    ADMM = "admm"


class Schedule(str, Enum):
    CONSTANT = "constant"
    SQRT_T = "sqrt-t"


class StopRule(str, Enum):
    """How the primal and dual residuals are combined before the tol test."""

    MAX = "max"
    SUM = "sum"


@dataclass(frozen=True)
class StepParameters:
    """Resolved penalty and step sizes used by one run of the engine."""

    rho: float
    tau: float
    rho_x: float = 0.0
    rho_z: float = 0.0
    gamma: float = 0.125

    def __post_init__(self):
        if not self.rho > 0 or not self.tau > 0:
            raise ValueError("rho and tau must be positive")
        if self.rho_x < 0 or self.rho_z < 0:
            raise ValueError("rho_x and rho_z must be nonnegative")


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1e-3
    tau_ratio: float = 1.0
    rho_x: float = 0.0
    rho_z: float = 0.0
    gamma: float = 0.125
    max_iters: int = 2000
    tol: float = 1e-4
    variant: Variant = Variant.BADMM_KL
    schedule: Schedule = Schedule.CONSTANT
    c1: float = 1.0
    c2: float = 1.0
    seed: int = 0
    stop_rule: StopRule = StopRule.MAX

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "schedule", Schedule(self.schedule))
        object.__setattr__(self, "stop_rule", StopRule(self.stop_rule))
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.tau_ratio > 0:
            raise ValueError("tau_ratio must be positive")
        if self.rho_x < 0 or self.rho_z < 0:
            raise ValueError("rho_x and rho_z must be nonnegative")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.schedule is Schedule.SQRT_T and (self.c1 < 0 or not self.c2 > 0):
            raise ValueError("sqrt-t schedule needs c1 >= 0 and c2 > 0")

    def parameters(self) -> StepParameters:
        """Penalties in effect for the whole run.

        Under the sqrt-t schedule the horizon is ``max_iters`` and rho,
        tau_ratio, rho_x and rho_z are replaced by the scaled constants.
        """
        if self.schedule is Schedule.SQRT_T:
            root = math.sqrt(self.max_iters)
            return StepParameters(
                rho=root,
                tau=self.c2 * root,
                rho_x=self.c1 * root,
                rho_z=self.c1 * root,
                gamma=self.gamma,
            )
        return StepParameters(
            rho=self.rho,
            tau=self.tau_ratio * self.rho,
            rho_x=self.rho_x,
            rho_z=self.rho_z,
            gamma=self.gamma,
        )


@dataclass
class IterateState:
    """The (x, z, y) triple advanced by one sweep, plus the sweep counter.

    For the transport front-end ``X``, ``Z`` and ``Y`` are m-by-n matrices;
    the generic engine uses the same container for vectors.  ``log_X`` and
    ``log_Z`` optionally carry exact logarithms of the KL iterates, whose
    smallest entries are not representable in the linear domain.
    """

    X: np.ndarray
    Z: np.ndarray
    Y: np.ndarray
    t: int = 0
    log_X: np.ndarray | None = None
    log_Z: np.ndarray | None = None

    def copy(self) -> "IterateState":
        def cp(a):
            return None if a is None else a.copy()

        return IterateState(
            self.X.copy(), self.Z.copy(), self.Y.copy(), self.t, cp(self.log_X), cp(self.log_Z)
        )


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    elapsed_sec: float
    objective: float
    primal_residual: float
    dual_residual: float
    R_residual: float

    def __post_init__(self):
        if self.elapsed_sec < 0:
            raise ValueError("elapsed_sec must be nonnegative")
        for name in ("primal_residual", "dual_residual", "R_residual"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be nonnegative, got {value!r}")

    def as_row(self) -> list[str]:
        return [str(self.iter)] + [
            format(float(getattr(self, k)), ".17g") for k in TRACE_HEADER[1:]
        ]


@dataclass
class Trace:
    """Append-only sequence of trace records with strictly increasing iter."""

    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        if self.records:
            last = self.records[-1]
            if record.iter <= last.iter:
                raise ValueError("trace iterations must be strictly increasing")
            if record.elapsed_sec < last.elapsed_sec:
                raise ValueError("trace elapsed time must be nondecreasing")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def write_csv(self, out: TextIO) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for record in self.records:
            writer.writerow(record.as_row())

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)


# Cost-matrix file formats ---------------------------------------------------

_BIN_HEADER = struct.Struct("<II")


def save_cost_csv(path, C) -> None:
    C = as_matrix(C, "cost matrix")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in C:
            writer.writerow(format(float(x), ".17g") for x in row)


def load_cost_csv(path) -> np.ndarray:
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
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: rows have differing numbers of columns")
    return as_matrix(rows, f"cost matrix in {path}")


def save_cost_binary(path, C) -> None:
    """Write `C` as two little-endian uint32 dims followed by float64 entries."""
    C = as_matrix(C, "cost matrix")
    with open(path, "wb") as fh:
        fh.write(_BIN_HEADER.pack(*C.shape))
        fh.write(C.astype("<f8").tobytes(order="C"))


def load_cost_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _BIN_HEADER.size:
        raise ValueError(f"{path}: truncated header")
    m, n = _BIN_HEADER.unpack_from(raw)
    expected = _BIN_HEADER.size + 8 * m * n
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for {m}x{n}, found {len(raw)}")
    C = np.frombuffer(raw, dtype="<f8", offset=_BIN_HEADER.size).reshape(m, n)
    return as_matrix(C, f"cost matrix in {path}")


def load_cost_matrix(path) -> np.ndarray:
    """Load a cost matrix, choosing the binary reader for ``.bin`` files."""
    if Path(path).suffix.lower() == ".bin":
        return load_cost_binary(path)
    return load_cost_csv(path)


def iter_records(rows: Iterable[Iterable[str]]) -> Iterator[TraceRecord]:
    """Parse trace CSV rows (without header) back into records."""
    for row in rows:
        it, *rest = row
        yield TraceRecord(int(it), *(float(x) for x in rest))
