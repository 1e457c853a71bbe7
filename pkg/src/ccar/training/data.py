"""Patch pipeline and the synthetic texture corpus.

Patches are cut from source images after a random downscale by a factor in
[1, 2] (exact area averaging), then a uniform random crop.  The whole draw
sequence is a single seeded stream, so the batch sequence is reproducible
bit for bit regardless of how batches are consumed.
"""

from __future__ import annotations

import pathlib

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import ConfigError


# ---------------------------------------------------------------------------
# exact fractional-box downscaling
# ---------------------------------------------------------------------------

def _area_weights(src, dst):
    """(dst, src) row matrix: output i averages source cells overlapping
    [i*src/dst, (i+1)*src/dst)."""
    w = np.zeros((dst, src))
    step = src / dst
    for i in range(dst):
        a = i * step
        b = a + step
        lo = int(np.floor(a))
        hi = int(np.ceil(b))
        for j in range(lo, min(hi, src)):
            w[i, j] = min(b, j + 1) - max(a, j)
    return w / step


_weights_cache = {}


def area_resize(img, out_h, out_w):
    """Exact area-average resize of a (C, H, W) float array."""
    c, h, w = img.shape
    if (h, out_h) not in _weights_cache:
        _weights_cache[(h, out_h)] = _area_weights(h, out_h)
    if (w, out_w) not in _weights_cache:
        _weights_cache[(w, out_w)] = _area_weights(w, out_w)
    wr = _weights_cache[(h, out_h)]
    wc = _weights_cache[(w, out_w)]
    return np.einsum("ij,cjk,lk->cil", wr, img.astype(np.float64), wc, optimize=True)


# ---------------------------------------------------------------------------
# synthetic texture corpus
# ---------------------------------------------------------------------------

def _texture(rng, size):
    yy, xx = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size), indexing="ij")

    # Smoothed Gaussian field
    sigma = rng.uniform(2.0, 24.0)
    fieldv = gaussian_filter(rng.standard_normal((size, size)), sigma)
    fieldv /= max(np.abs(fieldv).max(), 1e-9)

    # Linear gradient in a random direction
    theta = rng.uniform(0, 2 * np.pi)
    grad = np.cos(theta) * xx + np.sin(theta) * yy
    grad = (grad - grad.min()) / max(np.ptp(grad), 1e-9) * 2.0 - 1.0

    # Checkerboard with random period and phase
    period = rng.uniform(6.0, 48.0)
    phase = rng.uniform(0, 2 * np.pi, size=2)
    checker = np.sign(np.sin(2 * np.pi * size * xx / period + phase[0]) *
                      np.sin(2 * np.pi * size * yy / period + phase[1]))

    signals = np.stack([fieldv, grad, checker])
    # Random mix into RGB with a dominant shared-luminance column: the
    # channels stay strongly correlated, which conditional models can exploit.
    mix = rng.uniform(-0.5, 0.5, size=(3, 3))
    mix[:, 0] += rng.uniform(0.5, 1.0)
    img = np.einsum("cs,shw->chw", mix, signals)
    img = img * rng.uniform(0.25, 0.5) + rng.uniform(0.3, 0.7)
    return np.clip(img, 0.0, 1.0)


def synthetic_textures(seed, count=512, size=256):
    """Seeded corpus of soft textures, gradients and checkerboards, as uint8."""
    out = np.empty((count, 3, size, size), dtype=np.uint8)
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        out[i] = np.round(_texture(rng, size) * 255.0).astype(np.uint8)
    return out


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

class DataPipeline:
    def __init__(self, images, patch_size, batch_size, seed, downscale_range=(1.0, 2.0)):
        self.images = [np.asarray(im) for im in images]
        for im in self.images:
            if im.ndim != 3 or im.shape[0] != 3 or im.dtype != np.uint8:
                raise ConfigError("pipeline sources must be uint8 (3, H, W) images")
        self.patch_size = patch_size
        self.batch_size = batch_size
        self.downscale_range = downscale_range
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 0xDA7A]))
        min_factor = downscale_range[0]
        self.eligible = [i for i, im in enumerate(self.images)
                         if min(im.shape[1], im.shape[2]) / min_factor >= patch_size]
        if not self.eligible:
            raise ConfigError(f"no source image supports {patch_size}px patches after downscaling")
        self.last_crops = []

    def _one_patch(self):
        idx = self.eligible[int(self.rng.integers(0, len(self.eligible)))]
        img = self.images[idx]
        h, w = img.shape[1], img.shape[2]
        lo, hi = self.downscale_range
        # Only factors that keep the image at least one patch large are usable.
        max_f = min(hi, h / self.patch_size, w / self.patch_size)
        f = self.rng.uniform(lo, max_f) if max_f > lo else lo
        out_h = max(self.patch_size, int(round(h / f)))
        out_w = max(self.patch_size, int(round(w / f)))
        small = area_resize(img.astype(np.float64) / 255.0, out_h, out_w)
        top = int(self.rng.integers(0, out_h - self.patch_size + 1))
        left = int(self.rng.integers(0, out_w - self.patch_size + 1))
        self.last_crops.append((idx, f, top, left))
        patch = small[:, top:top + self.patch_size, left:left + self.patch_size]
        return patch.astype(np.float32)

    def next_batch(self):
        self.last_crops = []
        return np.stack([self._one_patch() for _ in range(self.batch_size)])


def load_image_dir(path):
    """All PNG/PPM images under a directory, sorted by name."""
    from .. import imageio

    files = sorted(p for p in pathlib.Path(path).iterdir()
                   if p.suffix.lower() in (".png", ".ppm"))
    if not files:
        raise ConfigError(f"no .png/.ppm images in {path}")
    return [imageio.read_image(str(p)) for p in files]
