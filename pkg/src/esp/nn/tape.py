"""Reverse-mode automatic differentiation over a small numpy op set.

Every value is a float64 `Tensor`; ops record their parents and a closure
that accumulates gradients. `backward()` runs the tape in reverse
topological order from a scalar loss. The op set is exactly what the model
zoo here needs (dense layers, gated bidirectional outputs, low-rank
attention, softmax heads, segment ops for message passing).
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() needs a scalar loss")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(_wrap(other), -1.0))

    def __rsub__(self, other):
        return add(_wrap(other), mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcasted gradient back to the parent shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _make(data, parents, backward) -> Tensor:
    needs = any(p.requires_grad or p._parents for p in parents)
    if not needs:
        return Tensor(data)
    return Tensor(data, parents=parents, backward=backward)


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data + b.data

    def backward(grad):
        a._accumulate(_unbroadcast(grad, a.data.shape))
        b._accumulate(_unbroadcast(grad, b.data.shape))

    return _make(out_data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data * b.data

    def backward(grad):
        a._accumulate(_unbroadcast(grad * b.data, a.data.shape))
        b._accumulate(_unbroadcast(grad * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data / b.data

    def backward(grad):
        a._accumulate(_unbroadcast(grad / b.data, a.data.shape))
        b._accumulate(_unbroadcast(-grad * a.data / (b.data * b.data), b.data.shape))

    return _make(out_data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data @ b.data

    def backward(grad):
        if a.data.ndim == 1 and b.data.ndim == 2:
            a._accumulate(grad @ b.data.T)
            b._accumulate(np.outer(a.data, grad))
        elif a.data.ndim == 2 and b.data.ndim == 1:
            a._accumulate(np.outer(grad, b.data))
            b._accumulate(a.data.T @ grad)
        else:
            a._accumulate(grad @ b.data.swapaxes(-1, -2))
            b._accumulate(a.data.swapaxes(-1, -2) @ grad)

    return _make(out_data, (a, b), backward)


def transpose(a) -> Tensor:
    a = _wrap(a)

    def backward(grad):
        a._accumulate(grad.T)

    return _make(a.data.T, (a,), backward)


def relu(a) -> Tensor:
    a = _wrap(a)
    mask = a.data > 0
    out_data = np.where(mask, a.data, 0.0)

    def backward(grad):
        a._accumulate(grad * mask)

    return _make(out_data, (a,), backward)


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    x = a.data
    out_data = np.where(
        x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x)))
    )

    def backward(grad):
        a._accumulate(grad * out_data * (1.0 - out_data))

    return _make(out_data, (a,), backward)


def exp(a) -> Tensor:
    a = _wrap(a)
    out_data = np.exp(a.data)

    def backward(grad):
        a._accumulate(grad * out_data)

    return _make(out_data, (a,), backward)


def log(a) -> Tensor:
    a = _wrap(a)
    out_data = np.log(a.data)

    def backward(grad):
        a._accumulate(grad / a.data)

    return _make(out_data, (a,), backward)


def sqrt(a) -> Tensor:
    a = _wrap(a)
    out_data = np.sqrt(a.data)

    def backward(grad):
        a._accumulate(grad * 0.5 / out_data)

    return _make(out_data, (a,), backward)


def clip(a, low=None, high=None) -> Tensor:
    """Clamp values; gradient is zero where the clamp is active."""
    a = _wrap(a)
    out_data = np.clip(a.data, low, high)
    mask = np.ones_like(a.data)
    if low is not None:
        mask = mask * (a.data > low)
    if high is not None:
        mask = mask * (a.data < high)

    def backward(grad):
        a._accumulate(grad * mask)

    return _make(out_data, (a,), backward)


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = _wrap(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(grad):
        g = grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.data.shape).copy())

    return _make(out_data, (a,), backward)


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = _wrap(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def concat(tensors, axis=-1) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(grad):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            index = [slice(None)] * grad.ndim
            index[axis if axis >= 0 else grad.ndim + axis] = slice(lo, hi)
            t._accumulate(grad[tuple(index)])

    return _make(out_data, tuple(tensors), backward)


def gather_rows(a, index) -> Tensor:
    """out[i] = a[index[i]]; scatter-add on the way back."""
    a = _wrap(a)
    index = np.asarray(index, dtype=np.int64)
    out_data = a.data[index]

    def backward(grad):
        acc = np.zeros_like(a.data)
        np.add.at(acc, index, grad)
        a._accumulate(acc)

    return _make(out_data, (a,), backward)


def segment_sum(a, segments, num_segments: int) -> Tensor:
    """Row-wise scatter-add: out[s] = sum of rows i with segments[i] == s."""
    a = _wrap(a)
    segments = np.asarray(segments, dtype=np.int64)
    out_data = np.zeros((num_segments,) + a.data.shape[1:])
    np.add.at(out_data, segments, a.data)

    def backward(grad):
        a._accumulate(grad[segments])

    return _make(out_data, (a,), backward)


def reverse_align(a, anchor_bins) -> Tensor:
    """Mirror each row around its anchor: out[b, j] = a[b, anchor_b - j].

    Entries whose mirrored index falls outside the row are zero. Used to let
    a reverse prediction head write fragment intensity at the neutral-loss
    position (anchor = precursor bin).
    """
    a = _wrap(a)
    anchors = np.atleast_1d(np.asarray(anchor_bins, dtype=np.int64))
    data = np.atleast_2d(a.data)
    n_bins = data.shape[1]
    if np.any(anchors < 0) or np.any(anchors >= n_bins):
        raise ValueError("anchor bin outside spectrum range")
    out_data = np.zeros_like(data)
    for row, anchor in enumerate(anchors):
        out_data[row, : anchor + 1] = data[row, anchor::-1]

    def backward(grad):
        g2 = np.atleast_2d(grad)
        acc = np.zeros_like(data)
        for row, anchor in enumerate(anchors):
            acc[row, : anchor + 1] = g2[row, anchor::-1]
        a._accumulate(acc.reshape(a.data.shape))

    return _make(out_data.reshape(a.data.shape), (a,), backward)


def softmax(a, axis=-1) -> Tensor:
    """Stable softmax along `axis` (the shift is a detached constant)."""
    a = _wrap(a)
    shift = np.max(a.data, axis=axis, keepdims=True)
    e = exp(add(a, Tensor(-shift)))
    return div(e, tsum(e, axis=axis, keepdims=True))


def dropout(a, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: kept units are scaled by 1/(1-rate)."""
    a = _wrap(a)
    if rate < 0.0 or rate >= 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if rate == 0.0:
        return a
    mask = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    return mul(a, Tensor(mask))
