import logging

import numpy as np
import pytest

from oracles import bce_sum, hinge_double_loop
from timepoint.losses import batch_loss, desc_loss, kp_loss, total_loss
from timepoint.tensornet import Tensor
from timepoint.tensornet.gradcheck import as_inputs, grad_check


def unit_rows(rng, n, d):
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def test_kp_loss_perfect_prediction():
    y = np.array([0, 1, 0, 0, 1], dtype=float)
    assert float(kp_loss(Tensor(y), y).data) <= 1.6e-5


def test_kp_loss_half():
    y = np.random.default_rng(0).integers(0, 2, 50)
    assert float(kp_loss(Tensor(np.full(50, 0.5)), y).data) == pytest.approx(np.log(2), abs=1e-12)


def test_kp_loss_matches_summation():
    rng = np.random.default_rng(1)
    s = rng.random((3, 40))
    y = rng.integers(0, 2, (3, 40))
    assert float(kp_loss(Tensor(s), y).data) == pytest.approx(bce_sum(s, y), abs=1e-7)


def test_kp_loss_shape_mismatch():
    with pytest.raises(ValueError):
        kp_loss(Tensor(np.ones(4) * 0.5), np.ones(5))


def test_desc_loss_zero_when_hinges_inactive():
    da = np.eye(3)
    # matched rows identical (cos 1), unmatched orthogonal (cos 0 <= 0.1)
    assert float(desc_loss(Tensor(da), Tensor(da), [(0, 0), (1, 1), (2, 2)]).data) == 0.0


def test_desc_loss_single_orthogonal_match():
    assert float(desc_loss(Tensor(np.array([[1.0, 0.0]])), Tensor(np.array([[0.0, 1.0]])), [(0, 0)]).data) == 1.0


def test_desc_loss_matches_double_loop():
    rng = np.random.default_rng(2)
    for n, m in ((2, 2), (4, 3), (5, 7)):
        da, db = unit_rows(rng, n, 6), unit_rows(rng, m, 6)
        pairs = [(i, i) for i in range(min(n, m))]
        got = float(desc_loss(Tensor(da), Tensor(db), pairs).data)
        assert got == pytest.approx(hinge_double_loop(da, db, pairs), abs=1e-7)


def test_desc_loss_empty_warns(caplog):
    with caplog.at_level(logging.WARNING):
        out = desc_loss(Tensor(np.zeros((0, 4))), Tensor(np.zeros((0, 4))), [])
    assert float(out.data) == 0.0
    assert "empty" in caplog.text


def test_total_loss_is_sum_of_terms():
    rng = np.random.default_rng(3)
    L, D = 32, 5
    sa, sb = rng.random(L), rng.random(L)
    ya = np.zeros(L)
    yb = np.zeros(L)
    ya[[3, 10, 20]] = 1
    yb[[4, 12, 22]] = 1
    da, db = rng.standard_normal((D, L)), rng.standard_normal((D, L))
    pairs = [(0, 0), (1, 1), (2, 2)]
    got = float(total_loss(Tensor(sa), Tensor(sb), ya, yb, Tensor(da), Tensor(db), pairs).data)
    ka = np.flatnonzero(ya)
    kb = np.flatnonzero(yb)
    want = bce_sum(sa, ya) + bce_sum(sb, yb) + hinge_double_loop(da[:, ka].T, db[:, kb].T, pairs)
    assert got == pytest.approx(want, abs=1e-7)


def test_total_loss_zero_case():
    L = 16
    y = np.zeros(L)
    y[[2, 9]] = 1
    d = np.zeros((2, L))
    d[0, 2] = 1
    d[1, 9] = 1
    out = total_loss(Tensor(y), Tensor(y), y, y, Tensor(d), Tensor(d), [(0, 0), (1, 1)])
    assert float(out.data) < 4e-5


def test_desc_loss_gradient():
    rng = np.random.default_rng(4)
    da, db = as_inputs(rng.standard_normal((4, 6)), rng.standard_normal((5, 6)))
    err = grad_check(lambda t: desc_loss(t[0], t[1], [(0, 1), (2, 3)]), [da, db])
    assert err < 1e-5


def test_batch_loss_averages_pairs():
    rng = np.random.default_rng(5)
    B, L, D = 2, 24, 4
    scores = rng.random((2 * B, L))
    desc = rng.standard_normal((2 * B, D, L))
    la = np.zeros((B, L))
    lb = np.zeros((B, L))
    la[:, [3, 9]] = 1
    lb[:, [4, 10]] = 1
    pairs = [[(0, 0), (1, 1)], [(0, 1)]]
    total, (ka, kb, d) = batch_loss(Tensor(scores), Tensor(desc), la, lb, pairs)
    want_d = np.mean([
        hinge_double_loop(desc[k][:, [3, 9]].T, desc[B + k][:, [4, 10]].T, pairs[k]) for k in range(B)
    ])
    assert d == pytest.approx(want_d, abs=1e-9)
    assert ka == pytest.approx(bce_sum(scores[:B], la), abs=1e-9)
    assert float(total.data) == pytest.approx(ka + kb + d, abs=1e-9)
