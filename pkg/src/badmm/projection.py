"""Euclidean projection onto the scaled simplex {w >= 0, sum(w) = r}."""

import numpy as np


def project_rows(V, r) -> np.ndarray:
    """Project each row ``V[i]`` onto the simplex of mass ``r[i]``.

    Sort-and-threshold: with the row sorted in decreasing order, take the
    largest k such that v_(k) - (sum_{j<=k} v_(j) - r) / k > 0, set
    theta = (sum_{j<=k} v_(j) - r) / k and clip ``v - theta`` at zero.
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise ValueError("project_rows expects a 2-D array")
    r = np.broadcast_to(np.asarray(r, dtype=np.float64), (V.shape[0],))
    if np.any(r <= 0):
        raise ValueError("simplex mass must be positive")
    U = -np.sort(-V, axis=1, kind="stable")
    excess = np.cumsum(U, axis=1)
    excess -= r[:, None]
    k = np.arange(1, V.shape[1] + 1, dtype=np.float64)
    support = np.count_nonzero(U - excess / k > 0, axis=1)
    theta = excess[np.arange(V.shape[0]), support - 1] / support
    return np.maximum(V - theta[:, None], 0.0)


def project_columns(V, r) -> np.ndarray:
    """Project each column ``V[:, j]`` onto the simplex of mass ``r[j]``."""
    return project_rows(np.asarray(V).T, r).T


def project_simplex(v, r: float = 1.0) -> np.ndarray:
    """argmin_{w >= 0, sum(w) = r} ||w - v||_2^2 for a 1-D `v`."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("project_simplex expects a 1-D array")
    if not r > 0:
        raise ValueError("simplex mass r must be positive")
    return project_rows(v[None, :], r)[0]
