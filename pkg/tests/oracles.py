"""Independent reference computations shared by the tests."""

from itertools import combinations, permutations

import numpy as np


def simplex_projection_by_enumeration(v, r):
    """Project onto {w >= 0, sum w = r} by trying every support set.

    On a fixed support S the minimizer is w_S = v_S - (sum v_S - r)/|S|;
    among the feasible candidates the closest one to v is the answer.
    """
    v = np.asarray(v, dtype=float)
    best, best_dist = None, np.inf
    for k in range(1, v.size + 1):
        for S in combinations(range(v.size), k):
            S = list(S)
            w = np.zeros_like(v)
            w[S] = v[S] - (v[S].sum() - r) / k
            if np.all(w[S] >= -1e-14):
                d = float(np.sum((w - v) ** 2))
                if d < best_dist:
                    best, best_dist = np.maximum(w, 0.0), d
    return best


def assignment_recursive(C):
    """Cheapest permutation by depth-first search over remaining columns."""
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    best = [np.inf, None]

    def walk(row, used, cost, perm):
        if cost >= best[0]:
            return
        if row == n:
            best[0], best[1] = cost, tuple(perm)
            return
        for j in range(n):
            if not used & (1 << j):
                perm.append(j)
                walk(row + 1, used | (1 << j), cost + C[row, j], perm)
                perm.pop()

    walk(0, 0, 0.0, [])
    return best[1], best[0]


def random_permutation_values(C, count, seed):
    rng = np.random.default_rng(seed)
    n = C.shape[0]
    rows = np.arange(n)
    return np.array([C[rows, rng.permutation(n)].sum() for _ in range(count)])


def all_permutation_values(C):
    n = C.shape[0]
    rows = np.arange(n)
    return {p: C[rows, list(p)].sum() for p in permutations(range(n))}
