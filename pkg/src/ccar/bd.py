"""Bjontegaard-delta rate and rate-savings-vs-quality curves.

log2(bpp) is interpolated as a function of quality with shape-preserving
monotone piecewise-cubics (PCHIP); the BD integral is the exact integral of
the interpolant over the shared quality range.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError

MIN_POINTS = 4
MIN_OVERLAP_DB = 1.0


@dataclass(frozen=True)
class RdPoint:
    bpp: float
    psnr: float


class RdCurve:
    """>= 4 (bpp, quality) points, sorted by bpp, strictly increasing quality."""

    def __init__(self, points, label="", validate=True):
        pts = sorted((RdPoint(float(p[0]), float(p[1])) if not isinstance(p, RdPoint) else p
                      for p in points), key=lambda p: p.bpp)
        self.points = pts
        self.label = label
        if validate:
            self.validate()

    def validate(self):
        if len(self.points) < MIN_POINTS:
            raise ConfigError(f"curve needs >= {MIN_POINTS} points, got {len(self.points)}")
        qualities = [p.psnr for p in self.points]
        if any(b <= a for a, b in zip(qualities, qualities[1:])):
            raise ConfigError(f"curve quality must strictly increase with bpp: {qualities}")
        if any(p.bpp <= 0 for p in self.points):
            raise ConfigError("bpp values must be positive")

    @property
    def qualities(self):
        return np.array([p.psnr for p in self.points])

    @property
    def log_rates(self):
        return np.log2([p.bpp for p in self.points])

    def to_json(self):
        return json.dumps({"label": self.label,
                           "points": [{"bpp": p.bpp, "psnr": p.psnr} for p in self.points]},
                          indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls([(p["bpp"], p["psnr"]) for p in obj["points"]], label=obj.get("label", ""))


def _interpolant(curve):
    return PchipInterpolator(curve.qualities, curve.log_rates)


def _overlap(curve_a, curve_ref):
    lo = max(curve_a.qualities[0], curve_ref.qualities[0])
    hi = min(curve_a.qualities[-1], curve_ref.qualities[-1])
    if hi - lo < MIN_OVERLAP_DB:
        raise ConfigError(f"quality overlap [{lo:.2f}, {hi:.2f}] is under {MIN_OVERLAP_DB} dB")
    return lo, hi


def bd_rate(curve_a, curve_ref):
    """Average rate difference of curve_a vs curve_ref in percent; negative
    means curve_a needs less rate at equal quality."""
    curve_a.validate()
    curve_ref.validate()
    lo, hi = _overlap(curve_a, curve_ref)
    fa = _interpolant(curve_a)
    fr = _interpolant(curve_ref)
    mean_diff = (fa.integrate(lo, hi) - fr.integrate(lo, hi)) / (hi - lo)
    return 100.0 * (2.0 ** mean_diff - 1.0)


def rate_savings_curve(curve_a, curve_ref, quality_grid):
    """Savings(q) = 100 * (1 - bpp_a(q) / bpp_ref(q)) on the given grid."""
    curve_a.validate()
    curve_ref.validate()
    lo, hi = _overlap(curve_a, curve_ref)
    grid = np.asarray(quality_grid, dtype=np.float64)
    if grid.size and (grid.min() < lo - 1e-9 or grid.max() > hi + 1e-9):
        raise ConfigError(f"grid [{grid.min()}, {grid.max()}] outside overlap [{lo:.3f}, {hi:.3f}]")
    fa = _interpolant(curve_a)
    fr = _interpolant(curve_ref)
    savings = 100.0 * (1.0 - 2.0 ** (fa(grid) - fr(grid)))
    return [(float(q), float(s)) for q, s in zip(grid, savings)]


def shared_quality_grid(curve_a, curve_ref, n=9):
    lo, hi = _overlap(curve_a, curve_ref)
    return np.linspace(lo, hi, n)
