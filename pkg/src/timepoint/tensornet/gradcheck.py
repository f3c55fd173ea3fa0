from __future__ import annotations

import numpy as np

from .tensor import Tensor


def relu_pattern(out: Tensor) -> bytes:
    """Fingerprint of which ReLU inputs are positive anywhere in the graph of ``out``."""
    seen, parts, stack = set(), [], [out]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node.op == "relu":
            parts.append(np.packbits(node._parents[0].data > 0).tobytes())
        stack.extend(node._parents)
    return b"|".join(parts)


def grad_check(fn, inputs, eps=1e-4, max_coords=200, seed=0, skip=None, avoid_kinks=False, stats=None):
    """Max relative error between analytic and central-difference gradients.

    ``fn`` maps the list ``inputs`` (Tensors with requires_grad, float64) to a
    scalar Tensor. Up to ``max_coords`` coordinates are sampled across all
    inputs. ``skip(tensor_index, flat_index, value)`` may exclude coordinates,
    e.g. points within reach of a kink.

    With ``avoid_kinks`` a sampled coordinate is dropped when moving it by
    +-eps flips any ReLU in the graph; the central difference straddles the
    kink there and estimates no derivative. Replacements are drawn until
    ``max_coords`` smooth coordinates have been checked. ``stats`` (a dict)
    receives the checked and dropped counts.
    """
    inputs = list(inputs)
    for t in inputs:
        if t.data.dtype != np.float64:
            raise TypeError("grad_check needs float64 inputs")
        t.grad = None
    out = fn(inputs)
    out.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    coords = [(i, j) for i, t in enumerate(inputs) for j in range(t.data.size)]
    if skip is not None:
        coords = [(i, j) for i, j in coords if not skip(i, j, inputs[i].data.flat[j])]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(coords))
    if not avoid_kinks:
        order = np.sort(order[:max_coords])
    base = relu_pattern(out) if avoid_kinks else None

    worst = 0.0
    checked = dropped = 0
    for k in order:
        if checked >= max_coords:
            break
        i, j = coords[k]
        flat = inputs[i].data.reshape(-1)
        orig = flat[j]
        flat[j] = orig + eps
        plus = fn(inputs)
        flat[j] = orig - eps
        minus = fn(inputs)
        flat[j] = orig
        if avoid_kinks and not (relu_pattern(plus) == base == relu_pattern(minus)):
            dropped += 1
            continue
        checked += 1
        numeric = (float(plus.data) - float(minus.data)) / (2 * eps)
        a = float(analytic[i].reshape(-1)[j])
        rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        worst = max(worst, rel)
    if stats is not None:
        stats.update(checked=checked, dropped=dropped)
    return worst


def as_inputs(*arrays):
    return [Tensor(np.array(a, dtype=np.float64), requires_grad=True) for a in arrays]
