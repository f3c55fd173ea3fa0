"""Differentiable ops on (batch, channels, length) tensors."""

from __future__ import annotations

import numba
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor

SQRT2 = float(np.sqrt(2.0))


def _t(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------- elementwise


def add(a, b):
    if not isinstance(b, Tensor):
        a = _t(a)
        return Tensor.make(a.data + b, (a,), lambda g: (g,), "add_const")
    a = _t(a)
    sa, sb = a.shape, b.shape
    return Tensor.make(
        a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add"
    )


def mul(a, b):
    a = _t(a)
    if not isinstance(b, Tensor):
        c = b
        return Tensor.make(a.data * c, (a,), lambda g: (g * c,), "scale")
    sa, sb = a.shape, b.shape
    return Tensor.make(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, sa), _unbroadcast(g * a.data, sb)),
        "mul",
    )


def relu(x):
    mask = x.data > 0
    return Tensor.make(x.data * mask, (x,), lambda g: (g * mask,), "relu")


def sigmoid(x):
    z = x.data
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return Tensor.make(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def sum(x):
    shape = x.shape
    return Tensor.make(np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, shape).copy(),), "sum")


def mean(x):
    shape, n = x.shape, x.data.size
    return Tensor.make(
        np.asarray(x.data.mean()), (x,), lambda g: (np.broadcast_to(g / n, shape).copy(),), "mean"
    )


def stack_scalars(items):
    """Sum of scalar tensors, one node instead of a chain of adds."""
    items = list(items)
    total = np.asarray(np.sum([t.data for t in items], axis=0))
    return Tensor.make(total, tuple(items), lambda g: tuple(g for _ in items), "sum_n")


# ---------------------------------------------------------------- shape ops


def index(x, idx):
    shape, dtype = x.shape, x.dtype

    def back(g):
        out = np.zeros(shape, dtype=dtype)
        np.add.at(out, idx, g)
        return (out,)

    return Tensor.make(x.data[idx], (x,), back, "index")


def reshape(x, shape):
    old = x.shape
    return Tensor.make(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),), "reshape")


def concat(xs, axis=1):
    xs = list(xs)
    sizes = [t.shape[axis] for t in xs]
    splits = np.cumsum(sizes)[:-1]
    return Tensor.make(
        np.concatenate([t.data for t in xs], axis=axis),
        tuple(xs),
        lambda g: tuple(np.split(g, splits, axis=axis)),
        "concat",
    )


def subsample(x, stride: int):
    """Keep every ``stride``-th step along the last axis."""
    if stride == 1:
        return x
    shape = x.shape

    def back(g):
        out = np.zeros(shape, dtype=g.dtype)
        out[..., ::stride] = g
        return (out,)

    return Tensor.make(np.ascontiguousarray(x.data[..., ::stride]), (x,), back, "subsample")


def slice_channels(x, start, stop):
    shape = x.shape

    def back(g):
        out = np.zeros(shape, dtype=g.dtype)
        out[:, start:stop] = g
        return (out,)

    return Tensor.make(x.data[:, start:stop], (x,), back, "slice_channels")


def pad_edge(x, right: int):
    """Replicate the last sample ``right`` times along the time axis."""
    if right == 0:
        return x
    n = x.shape[-1]

    def back(g):
        out = g[..., :n].copy()
        out[..., -1] += g[..., n:].sum(axis=-1)
        return (out,)

    return Tensor.make(np.pad(x.data, ((0, 0), (0, 0), (0, right)), mode="edge"), (x,), back, "pad_edge")


def crop(x, length: int):
    n = x.shape[-1]
    if length == n:
        return x

    def back(g):
        out = np.zeros(g.shape[:-1] + (n,), dtype=g.dtype)
        out[..., :length] = g
        return (out,)

    return Tensor.make(x.data[..., :length], (x,), back, "crop")


def cells_to_time(x):
    """(B, cell, L') -> (B, L' * cell) with cell c of step t' landing at t' * cell + c."""
    b, c, lp = x.shape
    out = x.data.transpose(0, 2, 1).reshape(b, lp * c)
    return Tensor.make(out, (x,), lambda g: (g.reshape(b, lp, c).transpose(0, 2, 1),), "cells_to_time")


def gather_time(x, batch: int, idx):
    """Rows x[batch, :, idx].T as an (N, C) tensor."""
    idx = np.asarray(idx, dtype=np.int64)
    shape, dtype = x.shape, x.dtype

    def back(g):
        out = np.zeros(shape, dtype=dtype)
        np.add.at(out[batch], (slice(None), idx), g.T)
        return (out,)

    return Tensor.make(x.data[batch][:, idx].T.copy(), (x,), back, "gather_time")


def matmul(a, b):
    return Tensor.make(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g), "matmul")


def transpose2d(x):
    return Tensor.make(x.data.T, (x,), lambda g: (g.T,), "transpose")


# ---------------------------------------------------------------- convolution


@numba.njit(cache=True)
def _depthwise_forward(x, w, stride, padding, lout):
    # same summation order as the tap-by-tap numpy loop, minus the padded copy and temporaries
    bsz, c, n = x.shape
    k = w.shape[1]
    out = np.zeros((bsz, c, lout), dtype=x.dtype)
    for bi in range(bsz):
        for ch in range(c):
            for j in range(k):
                wj = w[ch, j]
                for t in range(lout):
                    src = t * stride + j - padding
                    if 0 <= src < n:
                        out[bi, ch, t] += wj * x[bi, ch, src]
    return out


def conv1d(x, w, b=None, stride: int = 1, padding: int = 0, groups: int = 1):
    """Cross-correlation of x (B, Cin, L) with w (Cout, Cin // groups, K).

    Only dense (groups=1) and depthwise (groups=Cin=Cout) layouts are supported.
    """
    if x.ndim != 3 or w.ndim != 3:
        raise ValueError("conv1d expects x (B, C, L) and w (Cout, Cin/groups, K)")
    bsz, cin, n = x.shape
    cout, cin_g, k = w.shape
    if cin_g * groups != cin:
        raise ValueError(f"weight expects {cin_g * groups} input channels, got {cin}")
    if groups != 1 and not (groups == cin and cout == cin):
        raise ValueError("only dense or depthwise convolution is supported")
    if b is not None and b.shape != (cout,):
        raise ValueError("bias shape mismatch")
    lout = (n + 2 * padding - k) // stride + 1
    if lout < 1:
        raise ValueError("input too short for kernel")
    span = stride * (lout - 1) + 1
    wd = w.data
    if groups == 1 or x.data.dtype != wd.dtype:
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    else:
        xp = None

    if groups == 1:
        if k == 1:
            cols = xp[:, :, :span:stride]
            out = np.matmul(wd[:, :, 0], cols)
        else:
            win = sliding_window_view(xp, k, axis=2)[:, :, :span:stride, :]
            cols = win.transpose(0, 2, 1, 3).reshape(bsz * lout, cin * k)
            out = (cols @ wd.reshape(cout, cin * k).T).reshape(bsz, lout, cout).transpose(0, 2, 1)
    else:
        if xp is None:
            out = _depthwise_forward(np.ascontiguousarray(x.data), np.ascontiguousarray(wd[:, 0, :]),
                                     stride, padding, lout)
        else:
            out = np.zeros((bsz, cin, lout), dtype=np.result_type(xp, wd))
            for j in range(k):
                out += wd[None, :, 0, j, None] * xp[:, :, j:j + span:stride]
    if b is not None:
        out = out + b.data[None, :, None]
    out = np.ascontiguousarray(out)

    def back(g):
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
        gxp = np.zeros_like(xp)
        if groups == 1:
            if k == 1:
                gw = np.tensordot(g, cols, axes=([0, 2], [0, 2]))[:, :, None]
                gxp[:, :, :span:stride] = np.matmul(wd[:, :, 0].T, g)
            else:
                g2 = g.transpose(0, 2, 1).reshape(bsz * lout, cout)
                gw = (g2.T @ cols).reshape(cout, cin, k)
                gcols = (g2 @ wd.reshape(cout, cin * k)).reshape(bsz, lout, cin, k)
                for j in range(k):
                    gxp[:, :, j:j + span:stride] += gcols[:, :, :, j].transpose(0, 2, 1)
        else:
            gw = np.zeros_like(wd)
            for j in range(k):
                sl = xp[:, :, j:j + span:stride]
                gw[:, 0, j] = np.einsum("bcl,bcl->c", g, sl)
                gxp[:, :, j:j + span:stride] += g * wd[None, :, 0, j, None]
        gx = gxp[:, :, padding:padding + n] if padding else gxp
        gb = g.sum(axis=(0, 2)) if b is not None else None
        return (gx, gw, gb) if b is not None else (gx, gw)

    parents = (x, w, b) if b is not None else (x, w)
    return Tensor.make(out, parents, back, "conv1d")


# ---------------------------------------------------------------- normalization


def batchnorm1d(x, gamma, beta, running_mean=None, running_var=None, training=True, momentum=0.1, eps=1e-5):
    """Per-channel standardisation over (batch, length).

    In training mode the running buffers (plain arrays) are updated in place.
    """
    xd = x.data
    if training:
        if xd.shape[0] < 2:
            raise ValueError("batchnorm in train mode needs a batch of at least 2")
        m = xd.shape[0] * xd.shape[2]
        mu = xd.mean(axis=(0, 2))
        var = xd.var(axis=(0, 2))
        if running_mean is not None:
            running_mean *= 1 - momentum
            running_mean += momentum * mu
            running_var *= 1 - momentum
            running_var += momentum * var * m / max(m - 1, 1)
    else:
        mu, var = running_mean, running_var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu[None, :, None]) * inv[None, :, None]
    out = (gamma.data[None, :, None] * xhat + beta.data[None, :, None]).astype(xd.dtype, copy=False)

    def back(g):
        gg = (g * xhat).sum(axis=(0, 2))
        gb = g.sum(axis=(0, 2))
        dxhat = g * gamma.data[None, :, None]
        if training:
            mdx = dxhat.mean(axis=(0, 2), keepdims=True)
            mdxx = (dxhat * xhat).mean(axis=(0, 2), keepdims=True)
            gx = (dxhat - mdx - xhat * mdxx) * inv[None, :, None]
        else:
            gx = dxhat * inv[None, :, None]
        return gx.astype(xd.dtype, copy=False), gg, gb

    return Tensor.make(out, (x, gamma, beta), back, "batchnorm1d")


def l2_normalize(x, axis: int = 1, eps: float = 1e-8):
    xd = x.data
    norm = np.sqrt((xd * xd).sum(axis=axis, keepdims=True))
    denom = np.maximum(norm, eps)
    y = xd / denom
    small = norm <= eps

    def back(g):
        proj = (g * y).sum(axis=axis, keepdims=True)
        gx = np.where(small, g / eps, (g - y * proj) / denom)
        return (gx,)

    return Tensor.make(y, (x,), back, "l2_normalize")


# ---------------------------------------------------------------- resampling


def _interp_matrix(n_in: int, n_out: int, dtype) -> np.ndarray:
    m = np.zeros((n_in, n_out), dtype=dtype)
    if n_in == 1:
        m[0, :] = 1.0
        return m
    pos = np.arange(n_out) * (n_in - 1) / max(n_out - 1, 1)
    i0 = np.minimum(np.floor(pos).astype(np.int64), n_in - 2)
    frac = pos - i0
    cols = np.arange(n_out)
    m[i0, cols] += 1.0 - frac
    m[i0 + 1, cols] += frac
    return m


def upsample_linear(x, target_length: int):
    """Linear interpolation along time with endpoints aligned."""
    n = x.shape[-1]
    if target_length < n:
        raise ValueError("target_length must be >= input length")
    if target_length == n:
        return x
    m = _interp_matrix(n, target_length, x.dtype)
    return Tensor.make(x.data @ m, (x,), lambda g: (g @ m.T,), "upsample_linear")


# ---------------------------------------------------------------- wavelets


def haar_dwt(x):
    """One-level orthonormal Haar split along time -> (low, high).

    Odd lengths are padded by repeating the last sample first.
    """
    if x.shape[-1] % 2:
        x = pad_edge(x, 1)
    even, odd = x.data[..., 0::2], x.data[..., 1::2]
    shape = x.shape

    def back_low(g):
        out = np.empty(shape, dtype=g.dtype)
        out[..., 0::2] = g / SQRT2
        out[..., 1::2] = g / SQRT2
        return (out,)

    def back_high(g):
        out = np.empty(shape, dtype=g.dtype)
        out[..., 0::2] = g / SQRT2
        out[..., 1::2] = -g / SQRT2
        return (out,)

    dt = x.dtype
    low = Tensor.make(((even + odd) / SQRT2).astype(dt, copy=False), (x,), back_low, "haar_low")
    high = Tensor.make(((even - odd) / SQRT2).astype(dt, copy=False), (x,), back_high, "haar_high")
    return low, high


def haar_iwt(low, high):
    if low.shape != high.shape:
        raise ValueError("low and high bands must have equal shape")
    lo, hi = low.data, high.data
    out = np.empty(lo.shape[:-1] + (2 * lo.shape[-1],), dtype=np.result_type(lo, hi))
    out[..., 0::2] = (lo + hi) / SQRT2
    out[..., 1::2] = (lo - hi) / SQRT2

    def back(g):
        ge, go = g[..., 0::2], g[..., 1::2]
        return (ge + go) / SQRT2, (ge - go) / SQRT2

    return Tensor.make(out, (low, high), back, "haar_iwt")
