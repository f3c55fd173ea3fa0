"""Nearest-neighbour classification under DTW or SoftDTW."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dtw import _accumulate, cost_matrix, soft_dtw_from_cost
from .sparse import compute_features, feature_cost

DISTANCES = ("dtw", "softdtw")


@dataclass
class KnnResult:
    predictions: np.ndarray
    accuracy: float | None
    dp_cells: int
    wall_ms: float
    distances: np.ndarray


def _distance(cost: np.ndarray, distance: str, gamma: float) -> float:
    if distance == "dtw":
        return float(_accumulate(np.ascontiguousarray(cost))[-1, -1])
    if distance == "softdtw":
        return soft_dtw_from_cost(cost, gamma)
    raise ValueError(f"unknown distance {distance!r}; choose from {DISTANCES}")


def vote(dist_row: np.ndarray, labels: np.ndarray, k: int) -> int:
    """Majority label of the k nearest; ties by mean distance, then lowest label."""
    order = np.lexsort((np.arange(dist_row.size), dist_row))[:k]
    near = labels[order]
    best = None
    for lab in np.unique(near):
        hit = near == lab
        key = (-int(hit.sum()), float(dist_row[order][hit].mean()), int(lab))
        if best is None or key < best:
            best = key
    return best[2]


def pairwise_distances(train, test, distance="dtw", gamma=1.0, model=None, ratio=None,
                       mode="descriptor", cost="cosine", use_nms=True):
    """(n_test, n_train) distances and the number of DP cells evaluated.

    Without a model the raw scalar series are compared with Euclidean cost.
    With a model, keypoints and descriptors are computed once per signal and
    either descriptors (``mode='descriptor'``) or the raw values at the
    keypoints (``mode='raw-subsample'``) are aligned.
    """
    if distance not in DISTANCES:
        raise ValueError(f"unknown distance {distance!r}; choose from {DISTANCES}")
    if distance == "softdtw" and gamma <= 0:
        raise ValueError("gamma must be positive")
    out = np.empty((len(test), len(train)))
    cells = 0
    if model is None:
        tr = [np.asarray(x, dtype=np.float64) for x in train]
        te = [np.asarray(x, dtype=np.float64) for x in test]
        for i, a in enumerate(te):
            for j, b in enumerate(tr):
                c = cost_matrix(a, b, "euclidean")
                cells += c.size
                out[i, j] = _distance(c, distance, gamma)
        return out, cells
    if ratio is None:
        raise ValueError("a keypoint ratio is required with a model")
    tr = compute_features(model, train, ratio, use_nms)
    te = compute_features(model, test, ratio, use_nms)
    for i, fa in enumerate(te):
        for j, fb in enumerate(tr):
            c = feature_cost(fa, fb, mode, cost)
            cells += c.size
            out[i, j] = _distance(c, distance, gamma)
    return out, cells


def knn_classify(train_signals, train_labels, test_signals, test_labels=None, k: int = 1,
                 distance: str = "dtw", gamma: float = 1.0, model=None, ratio=None,
                 mode: str = "descriptor", cost: str = "cosine", use_nms: bool = True) -> KnnResult:
    if len(train_signals) == 0:
        raise ValueError("training set is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    labels = np.asarray(train_labels)
    start = time.perf_counter()
    dist, cells = pairwise_distances(train_signals, test_signals, distance, gamma, model, ratio, mode, cost, use_nms)
    preds = np.array([vote(row, labels, k) for row in dist], dtype=labels.dtype)
    wall_ms = (time.perf_counter() - start) * 1e3
    acc = None
    if test_labels is not None:
        acc = float(np.mean(preds == np.asarray(test_labels)))
    return KnnResult(preds, acc, cells, wall_ms, dist)
