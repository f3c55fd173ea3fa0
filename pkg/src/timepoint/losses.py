"""Detection (BCE) and descriptor (contrastive hinge) objectives."""

from __future__ import annotations

import logging

import numpy as np

from .tensornet import Tensor
from .tensornet import functional as F

log = logging.getLogger(__name__)

CLAMP = 1e-7


def kp_loss(scores: Tensor, labels) -> Tensor:
    """Mean binary cross-entropy between scores in (0, 1) and 0/1 labels."""
    s = scores.data
    y = np.asarray(labels, dtype=s.dtype)
    if y.shape != s.shape:
        raise ValueError(f"labels {y.shape} do not match scores {s.shape}")
    sc = np.clip(s, CLAMP, 1.0 - CLAMP)
    n = s.size
    value = -np.mean(y * np.log(sc) + (1.0 - y) * np.log1p(-sc))
    inside = (s >= CLAMP) & (s <= 1.0 - CLAMP)

    def back(g):
        return (g * inside * (-(y / sc) + (1.0 - y) / (1.0 - sc)) / n,)

    return Tensor.make(np.asarray(value, dtype=s.dtype), (scores,), back, "kp_loss")


def _hinge(cos: Tensor, positive: np.ndarray, m_p: float, m_n: float) -> Tensor:
    c = cos.data
    n = c.size
    pos_gap = np.maximum(0.0, m_p - c) * positive
    neg_gap = np.maximum(0.0, c - m_n) * (1.0 - positive)
    value = (pos_gap ** 2 + neg_gap ** 2).sum() / n

    def back(g):
        return (g * (2.0 * neg_gap - 2.0 * pos_gap) / n,)

    return Tensor.make(np.asarray(value, dtype=c.dtype), (cos,), back, "contrastive_hinge")


def correspondence_matrix(n: int, m: int, pairs) -> np.ndarray:
    mat = np.zeros((n, m))
    for i, j in pairs:
        mat[i, j] = 1.0
    return mat


def desc_loss(desc_a: Tensor, desc_b: Tensor, pairs, m_p: float = 1.0, m_n: float = 0.1) -> Tensor:
    """Contrastive hinge over all (i, j) keypoint-descriptor pairs.

    ``desc_a`` is (N, D), ``desc_b`` is (N', D); ``pairs`` lists matching
    (i, j). The sum is averaged over the N * N' pairs.
    """
    n, m = desc_a.shape[0], desc_b.shape[0]
    if n == 0 or m == 0:
        log.warning("descriptor loss over an empty keypoint set; returning 0")
        dtype = desc_a.dtype
        return Tensor.make(np.asarray(0.0, dtype=dtype), (desc_a, desc_b), lambda g: (None, None), "desc_loss_empty")
    a = F.l2_normalize(desc_a, axis=1)
    b = F.l2_normalize(desc_b, axis=1)
    cos = F.matmul(a, F.transpose2d(b))
    positive = correspondence_matrix(n, m, pairs).astype(cos.dtype)
    return _hinge(cos, positive, m_p, m_n)


def total_loss(scores_a, scores_b, labels_a, labels_b, desc_a, desc_b, pairs, m_p=1.0, m_n=0.1) -> Tensor:
    """Detection loss on both views plus the descriptor loss, for one pair.

    ``desc_a``/``desc_b`` are dense (D, L) descriptor tensors; rows are
    gathered at the ground-truth keypoints only.
    """
    idx_a = np.flatnonzero(labels_a)
    idx_b = np.flatnonzero(labels_b)
    da = F.gather_time(F.reshape(desc_a, (1,) + desc_a.shape), 0, idx_a)
    db = F.gather_time(F.reshape(desc_b, (1,) + desc_b.shape), 0, idx_b)
    return F.stack_scalars([
        kp_loss(scores_a, labels_a),
        kp_loss(scores_b, labels_b),
        desc_loss(da, db, pairs, m_p, m_n),
    ])


def batch_loss(scores, desc, labels_a, labels_b, pairs_list, m_p=1.0, m_n=0.1):
    """Mean of the per-pair objective over a batch.

    ``scores`` (2B, L) and ``desc`` (2B, D, L) hold the B originals first and
    their B warped copies after. Returns the total and its three parts.
    """
    b = len(pairs_list)
    la = np.asarray(labels_a)
    lb = np.asarray(labels_b)
    kp_a = kp_loss(F.index(scores, slice(0, b)), la)
    kp_b = kp_loss(F.index(scores, slice(b, 2 * b)), lb)
    parts = []
    for k, pairs in enumerate(pairs_list):
        da = F.gather_time(desc, k, np.flatnonzero(la[k]))
        db = F.gather_time(desc, b + k, np.flatnonzero(lb[k]))
        parts.append(desc_loss(da, db, pairs, m_p, m_n))
    d = F.mul(F.stack_scalars(parts), 1.0 / b)
    return F.stack_scalars([kp_a, kp_b, d]), (float(kp_a.data), float(kp_b.data), float(d.data))
