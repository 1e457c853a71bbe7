"""Image quality and rate bookkeeping."""

import math

import numpy as np

from .errors import ShapeError

PSNR_CAP = 99.0


def psnr(a, b):
    """PSNR in dB between two 8-bit images; identical images cap at 99 dB."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"psnr needs equal dims, got {a.shape} vs {b.shape}")
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(255.0 ** 2 / mse))


def bits_per_pixel(num_bytes, width, height):
    return num_bytes * 8.0 / (width * height)
