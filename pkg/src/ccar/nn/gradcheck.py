"""Finite-difference verification of reverse-mode gradients.

Runs in 64-bit mode only: the truncation error of central differences at
h ~ 1e-5 is far below float32 resolution, so float64 closures are required.
"""

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckResult:
    max_rel_err: float
    worst_input: int
    worst_element: tuple

    def __str__(self):
        return (f"max rel err {self.max_rel_err:.3e} at input {self.worst_input} "
                f"element {self.worst_element}")


def grad_check(closure, inputs, h=1e-5):
    """Compare reverse-mode gradients of a scalar closure with central differences.

    closure() must rebuild the graph from `inputs` (a list of float64 tensors)
    and return a scalar Tensor.  Relative error uses max(1, |a|, |b|) as the
    denominator so near-zero gradients are judged on an absolute scale.
    """
    for i, t in enumerate(inputs):
        if t.dtype != np.float64:
            raise ValueError(f"grad_check input {i} must be float64, got {t.dtype}")
        t.requires_grad = True

    for t in inputs:
        t.zero_grad()
    out = closure()
    out.backward()
    analytic = [np.array(t.grad, copy=True) if t.grad is not None else np.zeros_like(t.data)
                for t in inputs]

    worst = GradCheckResult(0.0, -1, ())
    for i, t in enumerate(inputs):
        flat = t.data.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            f_plus = closure().item()
            flat[j] = orig - h
            f_minus = closure().item()
            flat[j] = orig
            fd = (f_plus - f_minus) / (2.0 * h)
            a = analytic[i].reshape(-1)[j]
            rel = abs(fd - a) / max(1.0, abs(fd), abs(a))
            if rel > worst.max_rel_err:
                idx = np.unravel_index(j, t.shape)
                worst = GradCheckResult(float(rel), i, tuple(int(v) for v in idx))
    return worst
