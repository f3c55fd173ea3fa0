from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Parameter, Tensor


class Module:
    """Minimal container: parameters, buffers, submodules and a train flag."""

    def __init__(self):
        self.training = True

    def _children(self):
        for name, val in vars(self).items():
            if isinstance(val, Module):
                yield name, val
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix=""):
        for name, val in vars(self).items():
            if isinstance(val, Parameter):
                yield prefix + name, val
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Parameter):
                        yield f"{prefix}{name}.{i}", item
        for name, child in self._children():
            yield from child.named_parameters(prefix + name + ".")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix=""):
        for name in getattr(self, "_buffer_names", ()):
            yield prefix + name, getattr(self, name)
        for name, child in self._children():
            yield from child.named_buffers(prefix + name + ".")

    def train(self, mode: bool = True):
        self.training = mode
        for _, child in self._children():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def astype(self, dtype):
        """Cast parameters and buffers in place (e.g. float64 for gradient checks)."""
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.state.clear()
        for name, child in [("", self)] + list(self._all_modules()):
            for b in getattr(child, "_buffer_names", ()):
                setattr(child, b, getattr(child, b).astype(dtype))
        return self

    def _all_modules(self, prefix=""):
        for name, child in self._children():
            yield prefix + name, child
            yield from child._all_modules(prefix + name + ".")

    def state_dict(self) -> dict:
        out = {name: p.data.copy() for name, p in self.named_parameters()}
        out.update({name: np.array(b, copy=True) for name, b in self.named_buffers()})
        return out

    def load_state_dict(self, state: dict):
        expected = dict(self.named_parameters())
        buffers = {name: None for name, _ in self.named_buffers()}
        missing = [k for k in list(expected) + list(buffers) if k not in state]
        if missing:
            raise KeyError(f"checkpoint is missing tensors: {missing[:5]}")
        unexpected = sorted(set(state) - set(expected) - set(buffers))
        if unexpected:
            # a silently dropped tensor changes the function (e.g. a bias absorbed by BN statistics)
            raise KeyError(f"checkpoint has tensors this model does not: {unexpected[:5]}")
        for name, p in expected.items():
            arr = np.asarray(state[name])
            if arr.shape != p.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {p.shape}")
            p.data = arr.astype(p.dtype).copy()
        for mod_name, mod in [("", self)] + [(n + ".", m) for n, m in self._all_modules()]:
            for b in getattr(mod, "_buffer_names", ()):
                key = mod_name + b
                cur = getattr(mod, b)
                arr = np.asarray(state[key])
                if arr.shape != cur.shape:
                    raise ValueError(f"shape mismatch for {key}: {arr.shape} vs {cur.shape}")
                setattr(mod, b, arr.astype(cur.dtype).copy())
        return self

    def n_parameters(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))


def _uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


class Conv1d(Module):
    def __init__(self, cin, cout, kernel_size, stride=1, bias=True, groups=1, rng=None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.stride = stride
        self.padding = (kernel_size - 1) // 2
        self.groups = groups
        fan_in = (cin // groups) * kernel_size
        self.weight = Parameter(_uniform(rng, (cout, cin // groups, kernel_size), fan_in), "weight")
        self.bias = Parameter(_uniform(rng, (cout,), fan_in), "bias") if bias else None

    def __call__(self, x):
        return F.conv1d(x, self.weight, self.bias, self.stride, self.padding, self.groups)


class BatchNorm1d(Module):
    _buffer_names = ("running_mean", "running_var")

    def __init__(self, channels, momentum=0.1, eps=1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(np.ones(channels), "gamma")
        self.beta = Parameter(np.zeros(channels), "beta")
        self.running_mean = np.zeros(channels, dtype=np.float32)
        self.running_var = np.ones(channels, dtype=np.float32)

    def __call__(self, x):
        return F.batchnorm1d(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            training=self.training, momentum=self.momentum, eps=self.eps,
        )


class WTConvBlock(Module):
    """Pointwise channel lift, wavelet-domain depthwise convolution, stride, BN and ReLU.

    The depthwise part is a direct k=3 path plus a ``levels``-deep Haar
    cascade: each level convolves its stacked (low, high) bands and the
    results are recombined bottom-up with inverse transforms. Lifting first
    lets every output channel carry its own multiscale filter, even when the
    input has a single channel.
    """

    def __init__(self, cin, cout, levels=3, kernel_size=3, stride=1, rng=None):
        super().__init__()
        if levels < 1:
            raise ValueError("levels must be >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.cin, self.cout = cin, cout
        self.levels = levels
        self.kernel_size = kernel_size
        self.stride = stride
        pad = (kernel_size - 1) // 2
        self.pad = pad
        self.pointwise = Parameter(_uniform(rng, (cout, cin, 1), cin), "pointwise")
        # no bias anywhere before the BatchNorm: it would be subtracted right back out
        self.base_weight = Parameter(_uniform(rng, (cout, 1, kernel_size), kernel_size), "base_weight")
        # band kernels start small so the block begins close to the direct path
        self.band_weights = [
            Parameter(0.1 * _uniform(rng, (2 * cout, 1, kernel_size), kernel_size), f"band_weights.{i}")
            for i in range(levels)
        ]
        self.bn = BatchNorm1d(cout)

    def min_length(self) -> int:
        return 2 ** self.levels

    def wavelet_path(self, x):
        """Depthwise direct path plus the reconstructed wavelet cascade."""
        n = x.shape[-1]
        if n < self.min_length():
            raise ValueError(f"input length {n} too short for {self.levels} wavelet levels")
        c = x.shape[1]
        direct = F.conv1d(x, self.base_weight, None, 1, self.pad, groups=c)

        lengths, lows, highs = [], [], []
        cur = x
        for w in self.band_weights:
            lengths.append(cur.shape[-1])
            lo, hi = F.haar_dwt(cur)
            bands = F.conv1d(F.concat([lo, hi]), w, None, 1, self.pad, groups=2 * c)
            lows.append(F.slice_channels(bands, 0, c))
            highs.append(F.slice_channels(bands, c, 2 * c))
            cur = lo

        rec = None
        for lo, hi, n_i in zip(reversed(lows), reversed(highs), reversed(lengths)):
            lo = lo if rec is None else F.add(lo, rec)
            rec = F.crop(F.haar_iwt(lo, hi), n_i)
        return F.add(direct, rec)

    def __call__(self, x):
        y = F.conv1d(x, self.pointwise, None, 1, 0)
        y = F.subsample(self.wavelet_path(y), self.stride)
        return F.relu(self.bn(y))
