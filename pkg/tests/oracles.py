"""Independent reference implementations used by the tests.

Each one is written the slow, obvious way so that it shares no code path
with the package routine it checks.
"""

import itertools
import math

import numba
import numpy as np


def rk4_flow(velocity, x0, h=1e-5, time=1.0):
    """Integrate dx/dt = velocity(x) with classic RK4, vectorised over points."""
    x = np.array(x0, dtype=np.float64)
    steps = int(round(time / abs(h)))
    h = time / steps
    for _ in range(steps):
        k1 = velocity(x)
        k2 = velocity(x + 0.5 * h * k1)
        k3 = velocity(x + 0.5 * h * k2)
        k4 = velocity(x + h * k3)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def cpa_velocity(theta, n_cells):
    """Piecewise-linear interpolation of vertex velocities (0 at both ends)."""
    verts = np.linspace(0.0, 1.0, n_cells + 1)
    vals = np.concatenate([[0.0], theta, [0.0]]) / n_cells
    return lambda x: np.interp(x, verts, vals)


@numba.njit(cache=True)
def _rk4_cpa_scalar(x, vals, n_cells, steps):
    h = 1.0 / steps

    def v(y):
        cell = min(max(int(np.floor(y * n_cells)), 0), n_cells - 1)
        frac = y * n_cells - cell
        return (1.0 - frac) * vals[cell] + frac * vals[cell + 1]

    for _ in range(steps):
        k1 = v(x)
        k2 = v(x + 0.5 * h * k1)
        k3 = v(x + 0.5 * h * k2)
        k4 = v(x + h * k3)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def rk4_cpa_flow(theta, n_cells, x0, h=1e-5):
    """Compiled per-point RK4 of the CPA field, for many points and long runs."""
    vals = np.concatenate([[0.0], theta, [0.0]]) / n_cells
    steps = int(round(1.0 / h))
    return np.array([_rk4_cpa_scalar(float(x), vals, n_cells, steps) for x in np.ravel(x0)])


def nms_scan(scores, window=5):
    """Keep t if no neighbour within the window beats it (lower index wins ties)."""
    r = window // 2
    keep = []
    for t, s in enumerate(scores):
        ok = True
        for u in range(max(0, t - r), min(len(scores), t + r + 1)):
            if u == t:
                continue
            if scores[u] > s or (scores[u] == s and u < t):
                ok = False
        if ok:
            keep.append(t)
    return keep


def bce_sum(s, y, clamp=1e-7):
    total = 0.0
    for si, yi in zip(np.ravel(s), np.ravel(y)):
        si = min(max(float(si), clamp), 1 - clamp)
        total += -(yi * math.log(si) + (1 - yi) * math.log(1 - si))
    return total / np.size(s)


def hinge_double_loop(da, db, pairs, m_p=1.0, m_n=0.1):
    pairs = set(map(tuple, pairs))
    n, m = len(da), len(db)
    total = 0.0
    for i in range(n):
        for j in range(m):
            u, v = np.asarray(da[i], float), np.asarray(db[j], float)
            c = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
            if (i, j) in pairs:
                total += max(0.0, m_p - c) ** 2
            else:
                total += max(0.0, c - m_n) ** 2
    return total / (n * m)


def all_monotone_paths(n, m):
    """Every contiguous monotone path from (0, 0) to (n-1, m-1)."""
    def rec(i, j):
        if (i, j) == (n - 1, m - 1):
            yield [(i, j)]
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            if i + di < n and j + dj < m:
                for rest in rec(i + di, j + dj):
                    yield [(i, j)] + rest
    yield from rec(0, 0)


def dtw_by_enumeration(cost):
    n, m = cost.shape
    return min(sum(cost[i, j] for i, j in p) for p in all_monotone_paths(n, m))


def window_sum(scores, radius=2):
    return np.convolve(scores, np.ones(2 * radius + 1), mode="same")


def subsets(items, k):
    return list(itertools.combinations(items, k))
