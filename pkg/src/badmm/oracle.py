"""Exact optimum of small assignment problems by enumeration.

With a = b = e the transport polytope is the Birkhoff polytope, whose
vertices are permutation matrices, so the LP optimum is the cheapest
permutation.
"""

from itertools import permutations

import numpy as np

from .core import as_matrix

MAX_N = 8


def assignment_bruteforce(C) -> tuple[tuple[int, ...], float]:
    """Cheapest permutation of a square cost matrix with n <= 8.

    Returns ``(perm, value)`` where row i is assigned column ``perm[i]``.
    Ties resolve to the lexicographically smallest permutation.
    """
    C = as_matrix(C, "C")
    n, m = C.shape
    if n != m:
        raise ValueError(f"cost matrix must be square, got {C.shape}")
    if n > MAX_N:
        raise ValueError(f"enumeration is limited to n <= {MAX_N}, got n = {n}")
    # permutations() yields lexicographic order; argmin keeps the first minimum
    perms = np.array(list(permutations(range(n))), dtype=np.intp)
    costs = C[np.arange(n), perms].sum(axis=1)
    best = int(np.argmin(costs))
    return tuple(int(j) for j in perms[best]), float(costs[best])
