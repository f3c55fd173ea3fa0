"""Reverse-mode autodiff over numpy arrays.

Each op builds a new ``Tensor`` holding its parents and a closure that maps
the output gradient to one gradient per parent. ``backward`` walks the graph
in reverse topological order and accumulates into leaf ``.grad`` fields.
"""

from __future__ import annotations

import contextlib

import numpy as np

_state = {"grad_enabled": True, "debug": False}


def set_debug(flag: bool) -> None:
    """Check every forward and backward result for NaN/Inf."""
    _state["debug"] = bool(flag)


@contextlib.contextmanager
def no_grad():
    prev = _state["grad_enabled"]
    _state["grad_enabled"] = False
    try:
        yield
    finally:
        _state["grad_enabled"] = prev


def _check_finite(arr, where):
    if _state["debug"] and not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {where}")


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if dtype is None and not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.op = "leaf"

    @classmethod
    def make(cls, data, parents, backward, op=""):
        """Wrap an op result; records the graph only when a parent needs grad."""
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.op = op
        _check_finite(data, op)
        if _state["grad_enabled"] and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op!r})"

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if not self.requires_grad:
            raise RuntimeError("tensor does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise RuntimeError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)

        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        grads = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                _check_finite(pg, f"backward of {node.op}")
                key = id(p)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # arithmetic sugar used by losses and tests
    def __add__(self, other):
        from . import functional as F

        return F.add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        from . import functional as F

        return F.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import functional as F

        return F.mul(self, -1.0)

    def __sub__(self, other):
        from . import functional as F

        return F.add(self, F.mul(other, -1.0) if isinstance(other, Tensor) else -other)

    def __getitem__(self, idx):
        from . import functional as F

        return F.index(self, idx)

    def sum(self):
        from . import functional as F

        return F.sum(self)

    def mean(self):
        from . import functional as F

        return F.mean(self)


class Parameter(Tensor):
    """Trainable leaf; ``state`` holds the optimizer moments."""

    __slots__ = ("state", "name")

    def __init__(self, data, name: str = "", dtype=np.float32):
        super().__init__(np.array(data, dtype=dtype), requires_grad=True)
        self.state = {}
        self.name = name

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"
