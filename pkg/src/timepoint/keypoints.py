"""Keypoint picking from a score vector: windowed NMS and top-K budgets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KP_RATIOS = (0.1, 0.2, 0.5, 1.0)


@dataclass
class KeypointSet:
    indices: np.ndarray
    scores: np.ndarray
    length: int = 0

    def __len__(self):
        return len(self.indices)


def nms(scores, window: int = 5) -> KeypointSet:
    """Keep t iff s_t beats every neighbour within window // 2.

    Ties go to the lower index: t must be strictly greater than equal-valued
    neighbours on its left and at least as large as those on its right.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    s = np.asarray(scores, dtype=np.float64)
    n = s.size
    r = window // 2
    keep = np.ones(n, dtype=bool)
    for d in range(1, r + 1):
        # left neighbour t-d: need s_t > s_{t-d}
        keep[d:] &= s[d:] > s[:-d]
        # right neighbour t+d: need s_t >= s_{t+d}
        keep[:-d] &= s[:-d] >= s[d:]
    idx = np.flatnonzero(keep)
    return KeypointSet(idx, s[idx], n)


def keypoint_budget(ratio: float, length: int) -> int:
    if not 0 < ratio <= 1:
        raise ValueError("ratio must lie in (0, 1]")
    return math.ceil(ratio * length - 1e-9)


def select_keypoints(kp: KeypointSet, ratio: float, length: int | None = None) -> KeypointSet:
    """The ceil(ratio * L) best-scoring keypoints, returned in time order."""
    if len(kp) == 0:
        raise ValueError("cannot select from an empty keypoint set")
    n = length or kp.length
    budget = min(keypoint_budget(ratio, n), len(kp))
    order = np.argsort(-kp.scores, kind="stable")[:budget]
    order = np.sort(order)
    return KeypointSet(kp.indices[order], kp.scores[order], n)


def extract_keypoints(scores, ratio: float, use_nms: bool = True, window: int = 5) -> np.ndarray:
    """Time indices used for sparse alignment.

    NMS survivors are taken first by score. When the budget exceeds the
    number of survivors, the remaining slots go to suppressed indices by
    score, so a ratio of 1 always keeps every time step.
    """
    s = np.asarray(scores, dtype=np.float64)
    n = s.size
    budget = keypoint_budget(ratio, n)
    if use_nms:
        survivors = nms(s, window).indices
        if budget <= survivors.size:
            return select_keypoints(KeypointSet(survivors, s[survivors], n), ratio).indices
        rest = np.setdiff1d(np.arange(n), survivors, assume_unique=True)
        extra = rest[np.argsort(-s[rest], kind="stable")[: budget - survivors.size]]
        return np.sort(np.concatenate([survivors, extra]))
    order = np.argsort(-s, kind="stable")[:budget]
    return np.sort(order)


def match_keypoints(pred, truth, tol: int = 2) -> int:
    """Greedy one-to-one matching within ``tol`` indices; returns the match count."""
    pred = np.sort(np.asarray(pred))
    truth = np.sort(np.asarray(truth))
    used = np.zeros(truth.size, dtype=bool)
    hits = 0
    for p in pred:
        lo = np.searchsorted(truth, p - tol, side="left")
        hi = np.searchsorted(truth, p + tol, side="right")
        best, best_d = -1, tol + 1
        for j in range(lo, hi):
            if not used[j] and abs(int(truth[j]) - int(p)) < best_d:
                best, best_d = j, abs(int(truth[j]) - int(p))
        if best >= 0:
            used[best] = True
            hits += 1
    return hits


def keypoint_f1(pred, truth, tol: int = 2) -> tuple[float, float, float]:
    """(precision, recall, F1) with a +-tol index match radius."""
    hits = match_keypoints(pred, truth, tol)
    precision = hits / len(pred) if len(pred) else 0.0
    recall = hits / len(truth) if len(truth) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if hits else 0.0
    return precision, recall, f1


def detect(scores, threshold: float = 0.5, window: int = 5) -> np.ndarray:
    """Thresholded NMS survivors."""
    kp = nms(scores, window)
    return kp.indices[kp.scores >= threshold]


def detect_by_mass(scores, threshold: float = 0.5, radius: int = 2, window: int = 5) -> np.ndarray:
    """NMS survivors whose score mass within +-radius reaches ``threshold``.

    The network spreads one keypoint's probability over neighbouring steps,
    so the summed score in a small window estimates the chance that a
    keypoint lies within ``radius`` of the peak. A threshold of 0.5 keeps
    peaks where that is more likely than not.
    """
    s = np.asarray(scores, dtype=np.float64)
    kp = nms(s, window)
    mass = np.convolve(s, np.ones(2 * radius + 1), mode="same")
    return kp.indices[mass[kp.indices] >= threshold]
