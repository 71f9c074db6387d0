"""Bregman divergences B(u, v) = phi(u) - phi(v) - <grad phi(v), u - v>.

Two generators are supported:

* squared Euclidean, phi(u) = 0.5 ||u||^2, giving 0.5 ||u - v||^2;
* negative entropy, phi(u) = sum u log u - u, giving the generalized KL
  divergence sum u log(u / v) - u + v on the nonnegative orthant.

Arrays of any shape are accepted and treated as flat vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Kind(Enum):
    SQUARED_EUCLIDEAN = "squared-euclidean"
    GENERALIZED_KL = "generalized-kl"


_CONSTANTS = {
    Kind.SQUARED_EUCLIDEAN: (1.0, 2.0),
    # on the unit simplex: KL(u, v) >= 0.5 ||u - v||_1^2
    Kind.GENERALIZED_KL: (1.0, 1.0),
}


@dataclass(frozen=True)
class DivergenceSpec:
    """A divergence together with its strong-convexity constant `alpha`
    with respect to the `p`-norm."""

    kind: Kind
    alpha: float
    p: float

    def __post_init__(self):
        expected = _CONSTANTS[self.kind]
        if (self.alpha, self.p) != expected:
            raise ValueError(
                f"{self.kind.value} has (alpha, p) = {expected}, got {(self.alpha, self.p)}"
            )

    @classmethod
    def of(cls, kind: Kind) -> "DivergenceSpec":
        return cls(kind, *_CONSTANTS[kind])


SQUARED_EUCLIDEAN = DivergenceSpec.of(Kind.SQUARED_EUCLIDEAN)
GENERALIZED_KL = DivergenceSpec.of(Kind.GENERALIZED_KL)


def _pair(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return u, v


def _check_kl_domain(u, v, strict_u: bool):
    if np.any(v <= 0):
        raise ValueError("generalized KL needs a strictly positive second argument")
    if strict_u and np.any(u <= 0):
        raise ValueError("KL gradient needs a strictly positive first argument")
    if np.any(u < 0):
        raise ValueError("generalized KL needs a nonnegative first argument")


def value(spec: DivergenceSpec, u, v) -> float:
    """Evaluate B(u, v); 0 log 0 is taken as 0."""
    u, v = _pair(u, v)
    if spec.kind is Kind.SQUARED_EUCLIDEAN:
        d = u - v
        return 0.5 * float(np.vdot(d, d))
    _check_kl_domain(u, v, strict_u=False)
    pos = u > 0
    terms = v.copy()
    up, vp = u[pos], v[pos]
    terms[pos] = up * np.log(up / vp) - up + vp
    # each term is nonnegative; clip rounding noise
    return float(np.sum(np.maximum(terms, 0.0)))


def grad_first(spec: DivergenceSpec, u, v) -> np.ndarray:
    """Gradient of B(., v) at u, i.e. grad phi(u) - grad phi(v)."""
    u, v = _pair(u, v)
    if spec.kind is Kind.SQUARED_EUCLIDEAN:
        return u - v
    _check_kl_domain(u, v, strict_u=True)
    return np.log(u / v)

