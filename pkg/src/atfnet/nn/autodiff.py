"""Reverse-mode differentiation over numpy arrays on a dynamic tape.

The op set covers exactly what the forecaster needs. Every op is
batch-agnostic: leading axes are independent samples, the trailing one or two
axes carry the math. Complex quantities never appear on the tape directly;
they travel as pairs of real tensors, and complex parameters are real arrays
whose last axis holds the [real, imag] planes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GradcheckFailure, ShapeMismatch


class Tensor:
    """Tape node: float64 payload, accumulated gradient, backward closure."""

    __slots__ = ("data", "grad", "name", "is_complex", "_parents", "_backward")

    def __init__(self, data, name="", is_complex=False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.name = name
        self.is_complex = is_complex
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(name={self.name!r}, shape={self.data.shape})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Backpropagate from a scalar root through the tape."""
        if self.data.size != 1:
            raise ShapeMismatch("backward() requires a scalar root")
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
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)


def parameter(data, name, is_complex=False):
    """Leaf tensor with an owned, contiguous float64 payload."""
    return Tensor(np.ascontiguousarray(data, dtype=np.float64),
                  name=name, is_complex=is_complex)


def constant(data):
    return Tensor(data)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    """Sum a broadcast gradient back down to `shape`."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a, b):
    a, b = _wrap(a), _wrap(b)

    def bwd(g):
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    return Tensor(a.data + b.data, _parents=(a, b), _backward=bwd)


def sub(a, b):
    a, b = _wrap(a), _wrap(b)

    def bwd(g):
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(-g, b.data.shape))

    return Tensor(a.data - b.data, _parents=(a, b), _backward=bwd)


def neg(a):
    a = _wrap(a)

    def bwd(g):
        a._accumulate(-g)

    return Tensor(-a.data, _parents=(a,), _backward=bwd)


def mul(a, b):
    a, b = _wrap(a), _wrap(b)

    def bwd(g):
        a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return Tensor(a.data * b.data, _parents=(a, b), _backward=bwd)


def div(a, b):
    a, b = _wrap(a), _wrap(b)
    inv = 1.0 / b.data

    def bwd(g):
        a._accumulate(_unbroadcast(g * inv, a.data.shape))
        b._accumulate(_unbroadcast(-g * a.data * inv * inv, b.data.shape))

    return Tensor(a.data * inv, _parents=(a, b), _backward=bwd)


def square(a):
    a = _wrap(a)

    def bwd(g):
        a._accumulate(2.0 * g * a.data)

    return Tensor(a.data * a.data, _parents=(a,), _backward=bwd)


def sqrt(a):
    a = _wrap(a)
    out = np.sqrt(a.data)

    def bwd(g):
        a._accumulate(g * 0.5 / out)

    return Tensor(out, _parents=(a,), _backward=bwd)


def exp(a):
    a = _wrap(a)
    out = np.exp(a.data)

    def bwd(g):
        a._accumulate(g * out)

    return Tensor(out, _parents=(a,), _backward=bwd)


def relu(a):
    a = _wrap(a)
    mask = a.data > 0.0

    def bwd(g):
        a._accumulate(g * mask)

    return Tensor(np.where(mask, a.data, 0.0), _parents=(a,), _backward=bwd)


def magnitude(re, im):
    """Elementwise sqrt(re^2 + im^2) with subgradient 0 at the origin.

    Exact zeros occur in practice (structured spectra, post-ReLU planes); the
    modulus has a kink there and both central differences and this backward
    agree on 0.
    """
    re, im = _wrap(re), _wrap(im)
    out = np.hypot(re.data, im.data)

    def bwd(g):
        safe = np.where(out > 0.0, out, 1.0)
        re._accumulate(g * re.data / safe)
        im._accumulate(g * im.data / safe)

    return Tensor(out, _parents=(re, im), _backward=bwd)


def matmul(a, b):
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeMismatch("matmul requires operands with at least two axes")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeMismatch(
            f"matmul inner dimensions differ: {a.data.shape} @ {b.data.shape}"
        )
    out = a.data @ b.data

    def bwd(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        a._accumulate(_unbroadcast(ga, a.data.shape))
        b._accumulate(_unbroadcast(gb, b.data.shape))

    return Tensor(out, _parents=(a, b), _backward=bwd)


def transpose_last(a):
    a = _wrap(a)

    def bwd(g):
        a._accumulate(np.swapaxes(g, -1, -2))

    return Tensor(np.swapaxes(a.data, -1, -2), _parents=(a,), _backward=bwd)


def reshape(a, shape):
    a = _wrap(a)

    def bwd(g):
        a._accumulate(g.reshape(a.data.shape))

    return Tensor(a.data.reshape(shape), _parents=(a,), _backward=bwd)


def take_last(a, index):
    """Select one slot of the last axis (drops the axis)."""
    a = _wrap(a)

    def bwd(g):
        full = np.zeros_like(a.data)
        full[..., index] = g
        a._accumulate(full)

    return Tensor(a.data[..., index], _parents=(a,), _backward=bwd)


def concat_last(tensors):
    tensors = [_wrap(t) for t in tensors]
    sizes = [t.data.shape[-1] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            t._accumulate(g[..., lo:hi])

    return Tensor(np.concatenate([t.data for t in tensors], axis=-1),
                  _parents=tuple(tensors), _backward=bwd)


def sum_(a, axis=None, keepdims=False):
    a = _wrap(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if axis is None:
            a._accumulate(np.broadcast_to(g, a.data.shape))
            return
        gg = g
        if not keepdims:
            gg = np.expand_dims(gg, axis)
        a._accumulate(np.broadcast_to(gg, a.data.shape))

    return Tensor(out, _parents=(a,), _backward=bwd)


def mean_(a, axis=None, keepdims=False):
    a = _wrap(a)
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def softmax_last(a):
    """Row softmax along the last axis."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        inner = (g * out).sum(axis=-1, keepdims=True)
        a._accumulate(out * (g - inner))

    return Tensor(out, _parents=(a,), _backward=bwd)


def unfold_last(a, size, stride):
    """Sliding windows over the last axis: [..., L] -> [..., n_windows, size]."""
    a = _wrap(a)
    length = a.data.shape[-1]
    if size > length:
        raise ShapeMismatch(f"window size {size} exceeds axis length {length}")
    offsets = np.arange(0, length - size + 1, stride)
    index = offsets[:, None] + np.arange(size)[None, :]

    def bwd(g):
        full = np.zeros_like(a.data)
        np.add.at(full, (Ellipsis, index), g)
        a._accumulate(full)

    return Tensor(a.data[..., index], _parents=(a,), _backward=bwd)


@dataclass(frozen=True)
class GradcheckReport:
    """Worst relative disagreement between analytic and numeric gradients."""

    max_rel_error: float
    tolerance: float
    worst_name: str
    worst_index: int
    n_scalars: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def require(self):
        if not self.passed:
            raise GradcheckFailure(
                f"gradient check failed: rel error {self.max_rel_error:.3e} "
                f"at {self.worst_name}[{self.worst_index}] "
                f"(tolerance {self.tolerance:.1e})",
                name=self.worst_name,
                index=self.worst_index,
                rel_error=self.max_rel_error,
            )
        return self


def gradcheck(forward, leaves, step=1e-6, tolerance=1e-5):
    """Compare reverse-mode gradients against central finite differences.

    ``forward`` rebuilds the graph from the leaves' current data and returns
    the scalar loss tensor. Every real scalar of every leaf (including the
    real/imag planes of complex parameters) is perturbed by ±``step``; the
    per-scalar relative error is |analytic - numeric| / max(1e-8,
    |analytic| + |numeric|).
    """
    for leaf in leaves:
        # reshape(-1) below must alias the payload for in-place perturbation
        if not leaf.data.flags["C_CONTIGUOUS"]:
            leaf.data = np.ascontiguousarray(leaf.data)
        leaf.grad = None
    forward().backward()
    analytic = []
    for leaf in leaves:
        g = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
        analytic.append(g.reshape(-1).copy())

    worst_err = 0.0
    worst_name = ""
    worst_index = -1
    total = 0
    for leaf, ana in zip(leaves, analytic):
        flat = leaf.data.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            f_plus = float(forward().data)
            flat[i] = saved - step
            f_minus = float(forward().data)
            flat[i] = saved
            numeric = (f_plus - f_minus) / (2.0 * step)
            err = abs(ana[i] - numeric) / max(1e-8, abs(ana[i]) + abs(numeric))
            if err > worst_err:
                worst_err = err
                worst_name = leaf.name or "<unnamed>"
                worst_index = i
            total += 1
    return GradcheckReport(worst_err, tolerance, worst_name, worst_index, total)
