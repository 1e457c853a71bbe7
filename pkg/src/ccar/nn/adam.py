"""Adam with bias correction."""

import numpy as np

from ..errors import TrainingDiverged


class Adam:
    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self, lr):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        adam_step(self.params, lr, self.beta1, self.beta2, self.eps)


def adam_step(params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update over `params`, reading gradients from each .grad.

    Parameters with no gradient are skipped entirely (moments untouched
    except the step count stays in lock-step for updated parameters only).
    A NaN gradient aborts the whole step before any parameter is touched.
    """
    updates = []
    for p in params:
        if p.grad is None:
            continue
        if p.grad.shape != p.data.shape:
            raise ValueError(f"gradient shape {p.grad.shape} != parameter shape {p.data.shape} for {p.name}")
        if not np.isfinite(p.grad).all():
            raise TrainingDiverged(p.adam_step_count, f"NaN/Inf gradient in parameter {p.name!r}")
        updates.append(p)
    for p in updates:
        g = p.grad
        p.adam_step_count += 1
        t = p.adam_step_count
        p.adam_m += (1.0 - beta1) * (g - p.adam_m)
        p.adam_v += (1.0 - beta2) * (g * g - p.adam_v)
        m_hat = p.adam_m / (1.0 - beta1 ** t)
        v_hat = p.adam_v / (1.0 - beta2 ** t)
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype)
