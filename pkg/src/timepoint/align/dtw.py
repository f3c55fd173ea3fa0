"""DTW and SoftDTW on scalar series or descriptor sequences.

Pairwise costs are reduced over the feature axis first, so the dynamic
program only ever holds one scalar per (i, j) cell whatever the descriptor
dimension.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import numba
import numpy as np

COSTS = ("euclidean", "cosine")


@dataclass
class WarpingPath:
    pairs: list
    total_cost: float

    def __len__(self):
        return len(self.pairs)

    @property
    def index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        arr = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]


class _AllocationLedger:
    """Counts scalars allocated by the DP stage while enabled."""

    def __init__(self):
        self.enabled = False
        self.records = []

    def record(self, label, arr_or_size):
        if self.enabled:
            size = arr_or_size if isinstance(arr_or_size, int) else arr_or_size.size
            self.records.append((label, int(size)))

    @property
    def total(self) -> int:
        return sum(n for _, n in self.records)


dp_allocations = _AllocationLedger()


@contextlib.contextmanager
def track_dp_allocations():
    dp_allocations.records = []
    dp_allocations.enabled = True
    try:
        yield dp_allocations
    finally:
        dp_allocations.enabled = False


def _as_2d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("sequences must be 1D (scalars) or 2D (length, features)")
    if arr.shape[0] == 0:
        raise ValueError("sequences must be nonempty")
    return arr


def cost_matrix(a, b, cost: str = "euclidean") -> np.ndarray:
    """(n, m) pairwise costs: Euclidean distance or 1 - cosine similarity."""
    a, b = _as_2d(a), _as_2d(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError("feature dimensions differ")
    if cost == "euclidean":
        if a.shape[1] == 1:
            return np.abs(a[:, 0][:, None] - b[:, 0][None, :])
        sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
        return np.sqrt(np.maximum(sq, 0.0))
    if cost == "cosine":
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        an = a / np.where(na > 0, na, 1.0)[:, None]
        bn = b / np.where(nb > 0, nb, 1.0)[:, None]
        return np.clip(1.0 - an @ bn.T, 0.0, 2.0)
    raise ValueError(f"unknown cost {cost!r}; choose from {COSTS}")


@numba.njit(cache=True)
def _accumulate(cost):
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost[i - 1, j - 1] + best
    return acc


@numba.njit(cache=True)
def _backtrack(acc):
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    out = np.empty((i + j, 2), dtype=np.int64)
    k = 0
    while True:
        out[k, 0] = i - 1
        out[k, 1] = j - 1
        k += 1
        if i == 1 and j == 1:
            break
        diag = acc[i - 1, j - 1]
        up = acc[i - 1, j]
        left = acc[i, j - 1]
        # preference on ties: diagonal, then (i-1, j), then (i, j-1)
        if diag <= up and diag <= left:
            i -= 1
            j -= 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
    return out[:k][::-1]


def dtw_from_cost(cost: np.ndarray) -> WarpingPath:
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    dp_allocations.record("cost", cost)
    acc = _accumulate(cost)
    dp_allocations.record("accumulated", acc)
    path = _backtrack(acc)
    # the backtrack buffer is sized (n + m, 2) before trimming
    dp_allocations.record("path", 2 * sum(cost.shape))
    return WarpingPath([(int(i), int(j)) for i, j in path], float(acc[-1, -1]))


def dtw(a, b, cost: str = "euclidean") -> WarpingPath:
    """Unconstrained DTW with the optimal path."""
    return dtw_from_cost(cost_matrix(a, b, cost))


def dtw_distance(a, b, cost: str = "euclidean") -> float:
    return float(_accumulate(cost_matrix(a, b, cost))[-1, -1])


def dtw_brute_force(a, b, cost: str = "euclidean", max_cells: int = 64) -> WarpingPath:
    """Exhaustive search over every monotone, contiguous path (small inputs only)."""
    c = cost_matrix(a, b, cost)
    n, m = c.shape
    if n * m > max_cells:
        raise ValueError(f"brute force limited to {max_cells} cells, got {n * m}")
    best_cost = math.inf
    best_path = None
    stack = [((0, 0), [(0, 0)], c[0, 0])]
    while stack:
        (i, j), path, total = stack.pop()
        if i == n - 1 and j == m - 1:
            if total < best_cost:
                best_cost, best_path = total, path
            continue
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                stack.append(((ni, nj), path + [(ni, nj)], total + c[ni, nj]))
    return WarpingPath(best_path, float(best_cost))


def path_cost(path, a, b, cost: str = "euclidean") -> float:
    c = cost_matrix(a, b, cost)
    pairs = path.pairs if isinstance(path, WarpingPath) else path
    return float(sum(c[i, j] for i, j in pairs))


def softmin(values, gamma: float) -> float:
    """-gamma * log(sum(exp(-v / gamma))), shifted for stability."""
    z = -np.asarray(values, dtype=np.float64) / gamma
    zmax = z.max()
    if not np.isfinite(zmax):
        return math.inf
    return float(-gamma * (zmax + np.log(np.exp(z - zmax).sum())))


@numba.njit(cache=True)
def _soft_accumulate(cost, gamma):
    n, m = cost.shape
    r = np.full((n + 1, m + 1), np.inf)
    r[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            z0 = -r[i - 1, j - 1] / gamma
            z1 = -r[i - 1, j] / gamma
            z2 = -r[i, j - 1] / gamma
            zmax = max(z0, max(z1, z2))
            if zmax == -np.inf:
                r[i, j] = np.inf
                continue
            s = np.exp(z0 - zmax) + np.exp(z1 - zmax) + np.exp(z2 - zmax)
            r[i, j] = cost[i - 1, j - 1] - gamma * (zmax + np.log(s))
    return r


def soft_dtw_from_cost(cost: np.ndarray, gamma: float) -> float:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    dp_allocations.record("cost", cost)
    r = _soft_accumulate(cost, float(gamma))
    dp_allocations.record("accumulated", r)
    return float(r[-1, -1])


def soft_dtw(a, b, cost: str = "euclidean", gamma: float = 1.0) -> float:
    """SoftDTW value (no gradient, no soft path)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return soft_dtw_from_cost(cost_matrix(a, b, cost), gamma)


def warp_map(path: WarpingPath, n_a: int) -> np.ndarray:
    """For each index of the first sequence, the mean matched index of the second."""
    ia, ib = path.index_arrays
    sums = np.bincount(ia, weights=ib, minlength=n_a)
    counts = np.bincount(ia, minlength=n_a)
    return sums / np.maximum(counts, 1)
