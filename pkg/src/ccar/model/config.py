"""Architecture hyperparameters, the channel slice layout, and the per-slice
transform depth rules."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

from ..errors import ConfigError

QUANT_MODES = ("noise", "mixed")


@dataclass(frozen=True)
class ModelConfig:
    """Everything that determines the network's shape.

    The defaults are the desk-scale configuration: they train in minutes on a
    CPU while exercising every code path.  ``full_size()`` gives the
    production-scale variant.
    """

    latent_depth: int = 32
    hyper_depth: int = 16
    hyper_out_depth: int = 32
    num_slices: int = 4
    slice_support: int | None = None  # None means num_slices - 1 (full support)
    lrp_enabled: bool = True
    train_quantization: str = "mixed"
    conv_base: int = 64

    def __post_init__(self):
        n, c = self.num_slices, self.latent_depth
        if not 1 <= n <= c:
            raise ConfigError(f"num_slices must be in [1, latent_depth]; got {n} with C={c}")
        k = self.support
        if not 0 <= k <= n - 1:
            raise ConfigError(f"slice_support must be in [0, num_slices-1]; got {k}")
        if self.train_quantization not in QUANT_MODES:
            raise ConfigError(f"train_quantization must be one of {QUANT_MODES}")
        for name in ("latent_depth", "hyper_depth", "hyper_out_depth", "conv_base"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")

    @property
    def support(self):
        return self.num_slices - 1 if self.slice_support is None else self.slice_support

    @classmethod
    def full_size(cls, high_rate=False):
        return cls(latent_depth=512 if high_rate else 320, hyper_depth=192,
                   hyper_out_depth=320, num_slices=10, conv_base=192)

    def canonical_items(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "slice_support":
                v = self.support
            out.append((f.name, v))
        return sorted(out)

    @property
    def config_hash(self):
        """32-byte digest covering every field; pins checkpoints to bitstreams."""
        text = "ccar-model-v1\n" + "".join(f"{k}={_fmt(v)}\n" for k, v in self.canonical_items())
        return hashlib.sha256(text.encode("utf-8")).digest()


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class SliceLayout:
    """Channel partition of the latent tensor with per-slice conditioning sets."""

    depths: tuple
    cond_sets: tuple  # cond_sets[i] = indices of earlier slices feeding slice i

    @property
    def num_slices(self):
        return len(self.depths)

    def offsets(self):
        out = [0]
        for d in self.depths:
            out.append(out[-1] + d)
        return out


def slice_layout(latent_depth, num_slices, support=None):
    """Split C channels into N slices of floor(C/N) channels, the last slice
    taking the remainder; slice i conditions on the first min(i, K) slices."""
    if not 1 <= num_slices <= latent_depth:
        raise ConfigError(f"cannot split {latent_depth} channels into {num_slices} slices")
    if support is None:
        support = num_slices - 1
    base = latent_depth // num_slices
    depths = [base] * (num_slices - 1)
    depths.append(latent_depth - base * (num_slices - 1))
    cond = [tuple(range(min(i, support))) for i in range(num_slices)]
    return SliceLayout(depths=tuple(depths), cond_sets=tuple(cond))


def layout_for(config):
    return slice_layout(config.latent_depth, config.num_slices, config.support)


def _round_half_up(x):
    import math

    return int(math.floor(x + 0.5))


def cc_depths(slice_index, layout, hyper_out_depth):
    """Input depth and the three conv output depths of slice i's conditional
    transforms (0-based index).

    Input = hyper feature depth plus the depths of the conditioning slices;
    the three conv outputs are linearly spaced from the input down to the
    slice depth.  The residual-prediction transform uses the same conv output
    depths but its input is wider by the current slice's depth.
    """
    if not 0 <= slice_index < layout.num_slices:
        raise ConfigError(f"slice index {slice_index} out of range")
    out_depth = layout.depths[slice_index]
    in_depth = hyper_out_depth + sum(layout.depths[j] for j in layout.cond_sets[slice_index])
    convs = tuple(_round_half_up(in_depth + (out_depth - in_depth) * k / 3.0) for k in (1, 2, 3))
    return in_depth, convs


def hyper_analysis_depths(config):
    c, hd = config.latent_depth, config.hyper_depth
    return (c, _round_half_up((c + hd) / 2.0), hd)


def hyper_synthesis_depths(config):
    hd, out = config.hyper_depth, config.hyper_out_depth
    return (hd, _round_half_up((hd + out) / 2.0), out)
