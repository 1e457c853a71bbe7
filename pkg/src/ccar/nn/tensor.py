"""Reverse-mode autodiff over dense 4-D arrays.

Every value in the codec is a ``Tensor`` with shape (batch, channel, height,
width).  Ops record themselves onto an implicit tape (creation order);
``backward`` replays the tape in reverse, accumulating gradients additively at
fan-out.  float32 is the working precision; float64 is used by the
gradient-check harness.
"""

from __future__ import annotations

import itertools
import threading
from contextlib import contextmanager

import numpy as np

from ..errors import ShapeError

_state = threading.local()


def _grad_flag():
    return getattr(_state, "grad_enabled", True)


def _finite_flag():
    return getattr(_state, "finite_checks", False)


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference paths)."""
    prev = _grad_flag()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = prev


def grad_enabled():
    return _grad_flag()


def set_finite_checks(enabled):
    """When enabled, every created tensor is checked for NaN/Inf (this thread)."""
    prev = _finite_flag()
    _state.finite_checks = bool(enabled)
    return prev


class Tensor:
    """A 4-D array plus the bookkeeping needed for reverse-mode autodiff."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_order")

    _counter = itertools.count()

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        if arr.ndim != 4:
            raise ShapeError(f"tensors are 4-D (batch, channel, height, width); got shape {arr.shape}")
        if _finite_flag() and not np.isfinite(arr).all():
            raise FloatingPointError(f"non-finite values in tensor of shape {arr.shape}")
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self._order = next(Tensor._counter)

    # -- inspection ---------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}{flag})"

    # -- autodiff -----------------------------------------------------------

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self):
        """Backpropagate from this scalar through the recorded graph."""
        if self.data.size != 1:
            raise ShapeError("backward() requires a scalar loss tensor")
        nodes = _reachable(self)
        # Reverse creation order is exactly the recorded forward order reversed.
        nodes.sort(key=lambda t: t._order, reverse=True)
        self.grad = np.ones_like(self.data)
        for node in nodes:
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _reachable(root):
    seen = set()
    out = []
    stack = [root]
    while stack:
        t = stack.pop()
        if id(t) in seen:
            continue
        seen.add(id(t))
        out.append(t)
        stack.extend(t._parents)
    return out


def make_result(data, parents, backward):
    """Create an op output tensor, recording `backward` if gradients are needed.

    `backward(grad)` must route `grad` to the parents via accumulate_grad.
    """
    needs = _grad_flag() and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=needs)
    if needs:
        out._parents = tuple(parents)
        out._backward = backward
    return out


class Parameter(Tensor):
    """Trainable tensor with a dotted name path and Adam state."""

    __slots__ = ("name", "adam_m", "adam_v", "adam_step_count")

    def __init__(self, name, data):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.adam_m = np.zeros_like(self.data)
        self.adam_v = np.zeros_like(self.data)
        self.adam_step_count = 0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"
