"""Sparse alignment: DTW over keypoint descriptors instead of every time step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..keypoints import extract_keypoints
from ..model import CELL
from .dtw import WarpingPath, cost_matrix, dtw, dtw_from_cost, warp_map


@dataclass
class SignalFeatures:
    """What sparse DTW needs from one signal: kept indices, their descriptors and raw values.

    Descriptor rows are unit-norm.
    """

    indices: np.ndarray
    descriptors: np.ndarray
    values: np.ndarray
    length: int

    def __len__(self):
        return len(self.indices)


@dataclass
class SparseAlignment:
    kp_path: WarpingPath
    kp_indices_a: np.ndarray
    kp_indices_b: np.ndarray
    dense_map: np.ndarray

    @property
    def dp_cells(self) -> int:
        return len(self.kp_indices_a) * len(self.kp_indices_b)


def _resample_rows(arr: np.ndarray, n_out: int) -> np.ndarray:
    n_in = arr.shape[0]
    pos = np.linspace(0.0, n_in - 1, n_out)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    w = (pos - lo)[:, None] if arr.ndim == 2 else pos - lo
    return (1.0 - w) * arr[lo] + w * arr[hi]


def model_outputs(model, signals) -> list[tuple[np.ndarray, np.ndarray]]:
    """Scores (L,) and descriptors (L, D) for each signal.

    Signals whose length is not a multiple of 8 are run at the next multiple
    of 8 and their outputs interpolated back, so indices refer to the
    original time axis.
    """
    out = [None] * len(signals)
    groups: dict[int, list[int]] = {}
    for i, s in enumerate(signals):
        n = len(s)
        if n < 16:
            raise ValueError(f"signal {i} has length {n}; at least 16 samples are needed")
        groups.setdefault(n, []).append(i)
    for n, members in sorted(groups.items()):
        n8 = -(-n // CELL) * CELL
        batch = np.stack([np.asarray(signals[i], dtype=np.float64) for i in members])
        if n8 != n:
            batch = np.stack([_resample_rows(row, n8) for row in batch])
        scores, desc = model.predict(batch)
        for k, i in enumerate(members):
            s, d = scores[k].astype(np.float64), desc[k].astype(np.float64)
            if n8 != n:
                s = _resample_rows(s, n)
                d = _resample_rows(d, n)
            # renormalise in float64: float32 rows are unit-norm only to ~1e-7
            d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-12)
            out[i] = (s, d)
    return out


def compute_features(model, signals, ratio: float, use_nms: bool = True) -> list[SignalFeatures]:
    feats = []
    for x, (scores, desc) in zip(signals, model_outputs(model, signals)):
        idx = extract_keypoints(scores, ratio, use_nms=use_nms)
        rows = np.ascontiguousarray(desc[idx], dtype=np.float64)
        feats.append(SignalFeatures(idx, rows, np.asarray(x, dtype=np.float64)[idx], len(scores)))
    return feats


def feature_cost(fa: SignalFeatures, fb: SignalFeatures, mode: str = "descriptor", cost: str = "cosine") -> np.ndarray:
    """Cost matrix between two keypoint sets: descriptor rows, or raw values at the keypoints."""
    if mode == "descriptor":
        if cost == "cosine":
            # rows are already unit-norm, so this is 1 - cos without renormalising per pair
            c = fa.descriptors @ fb.descriptors.T
            np.subtract(1.0, c, out=c)
            return np.clip(c, 0.0, 2.0, out=c)
        return cost_matrix(fa.descriptors, fb.descriptors, cost)
    if mode == "raw-subsample":
        return cost_matrix(fa.values, fb.values, "euclidean")
    raise ValueError(f"unknown feature mode {mode!r}")


def dense_map_from_pairs(idx_a, idx_b, path: WarpingPath, len_a: int, len_b: int) -> np.ndarray:
    """Piecewise-linear map from every index of a onto b through the matched keypoints.

    Endpoints are pinned to (0, 0) and (len_a - 1, len_b - 1). Several b
    indices matched to one a index are averaged, which keeps the map
    nondecreasing because the path is monotone.
    """
    ia, ib = path.index_arrays
    pa = np.asarray(idx_a)[ia].astype(np.float64)
    pb = np.asarray(idx_b)[ib].astype(np.float64)
    inner = (pa > 0) & (pa < len_a - 1)
    pa, pb = pa[inner], pb[inner]
    ua, inv = np.unique(pa, return_inverse=True)
    mb = np.bincount(inv, weights=pb) / np.bincount(inv)
    xs = np.concatenate([[0.0], ua, [len_a - 1.0]])
    ys = np.concatenate([[0.0], mb, [len_b - 1.0]])
    ys = np.maximum.accumulate(ys)
    return np.interp(np.arange(len_a, dtype=np.float64), xs, ys)


def align_features(fa: SignalFeatures, fb: SignalFeatures, mode: str = "descriptor", cost: str = "cosine") -> SparseAlignment:
    if len(fa) < 2 or len(fb) < 2:
        raise ValueError("fewer than 2 keypoints on one side; use a larger ratio")
    path = dtw_from_cost(feature_cost(fa, fb, mode, cost))
    dense = dense_map_from_pairs(fa.indices, fb.indices, path, fa.length, fb.length)
    return SparseAlignment(path, fa.indices, fb.indices, dense)


def align_sparse(x_a, x_b, model, ratio: float = 0.2, cost: str = "cosine", use_nms: bool = True) -> SparseAlignment:
    """Detect keypoints on both signals and align their descriptor sequences."""
    if not 0 < ratio <= 1:
        raise ValueError("ratio must lie in (0, 1]")
    fa, fb = compute_features(model, [x_a, x_b], ratio, use_nms)
    return align_features(fa, fb, "descriptor", cost)


def dense_dtw_map(x_a, x_b) -> np.ndarray:
    """Index map from full DTW on the raw values (mean matched index per step)."""
    return warp_map(dtw(x_a, x_b), len(x_a))
