"""Differentiable probability of noisy latents under a conditional Gaussian.

The training-time mass assigned to a value v with parameters (mu, sigma) is
Phi((v - mu + 1/2)/sigma) - Phi((v - mu - 1/2)/sigma).  Both CDF arguments are
evaluated through -|v - mu| so the difference never suffers cancellation in
the tails; probabilities are floored at 2^-50 before any log.
"""

import numpy as np
from scipy.special import ndtr

from ..nn.tensor import make_result
from ..nn import ops

SIGMA_MIN = 1e-4
PROB_FLOOR = 2.0 ** -50

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _npdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def gaussian_noisy_likelihood(y, mu, sigma):
    """Per-element probability tensor; differentiable w.r.t. y, mu and sigma.

    sigma is clamped below at 1e-4; gradients do not flow through active
    clamps or the probability floor.
    """
    if y.shape != mu.shape or y.shape != sigma.shape:
        raise ValueError(f"shape mismatch: y {y.shape}, mu {mu.shape}, sigma {sigma.shape}")
    sd = np.maximum(sigma.data, SIGMA_MIN)
    d = y.data - mu.data
    v = np.abs(d)
    upper_arg = (0.5 - v) / sd
    lower_arg = (-0.5 - v) / sd
    p = ndtr(upper_arg) - ndtr(lower_arg)
    floored = p < PROB_FLOOR
    out = np.maximum(p, PROB_FLOOR).astype(y.dtype)

    def backward(g):
        live = np.where(floored, 0.0, g)
        phi_u = _npdf(upper_arg)
        phi_l = _npdf(lower_arg)
        dd = (np.sign(d) * (phi_l - phi_u) / sd * live).astype(y.dtype)
        if y.requires_grad:
            y.accumulate_grad(dd)
        if mu.requires_grad:
            mu.accumulate_grad(-dd)
        if sigma.requires_grad:
            ds = (lower_arg * phi_l - upper_arg * phi_u) / sd * live
            ds = np.where(sigma.data < SIGMA_MIN, 0.0, ds).astype(sigma.dtype)
            sigma.accumulate_grad(ds)

    return make_result(out, (y, mu, sigma), backward)


def rate_bits(probabilities):
    """Total code length sum(-log2 p) in bits, as a differentiable scalar."""
    return ops.neg_log2_sum(probabilities)
