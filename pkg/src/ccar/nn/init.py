"""Seeded weight initializers."""

import numpy as np


def truncated_normal(shape, std, rng, bound=2.0):
    """Normal draws rescaled by std, with |draws| > bound resampled."""
    x = rng.standard_normal(shape)
    for _ in range(100):
        mask = np.abs(x) > bound
        if not mask.any():
            break
        x[mask] = rng.standard_normal(int(mask.sum()))
    return (x * std).astype(np.float64)


def conv_kernel(shape, fan_in, rng):
    """Truncated normal scaled by fan-in."""
    return truncated_normal(shape, 1.0 / np.sqrt(fan_in), rng)


def softplus_inverse(y):
    """x such that softplus(x) == y, for y > 0."""
    return float(np.log(np.expm1(y)))
