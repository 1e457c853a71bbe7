"""Training configuration, schedules, and the rate-distortion loss."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError
from ..nn import ops

# Learning-rate schedule as (fraction of total steps, rate) breakpoints; the
# production recipe scales down faithfully because only fractions are stored.
DEFAULT_LR_MILESTONES = ((0.0, 1e-4), (0.60, 3e-5), (0.72, 1e-5), (0.84, 3e-6), (0.96, 1e-6))
LAMBDA_WARM_FACTOR = 2.0
LAMBDA_WARM_FRACTION = 0.5


@dataclass(frozen=True)
class TrainConfig:
    lmbda: float = 0.01
    total_steps: int = 2000
    batch_size: int = 8
    patch_size: int = 64
    distortion: str = "mse"
    seed: int = 0
    lr_milestones: tuple = DEFAULT_LR_MILESTONES
    checkpoint_interval: int = 0  # 0: only the final checkpoint is written

    def __post_init__(self):
        if self.lmbda <= 0:
            raise ConfigError("lambda must be positive")
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")
        if self.patch_size % 64:
            raise ConfigError(f"patch_size must be divisible by 64, got {self.patch_size}")
        if self.distortion not in ("mse", "l1"):
            raise ConfigError(f"distortion must be 'mse' or 'l1', got {self.distortion!r}")
        fracs = [f for f, _ in self.lr_milestones]
        if fracs[0] != 0.0 or any(b <= a for a, b in zip(fracs, fracs[1:])) or fracs[-1] > 1.0:
            raise ConfigError(f"lr milestones must start at 0 and strictly increase within (0, 1]: {fracs}")


def lr_at(step, config):
    if not 0 <= step < config.total_steps:
        raise ValueError(f"step {step} outside [0, {config.total_steps})")
    frac = step / config.total_steps
    rate = config.lr_milestones[0][1]
    for f, r in config.lr_milestones:
        if frac >= f:
            rate = r
    return rate


def lambda_at(step, config):
    """2x lambda for the first half of training, the target lambda after."""
    if not 0 <= step < config.total_steps:
        raise ValueError(f"step {step} outside [0, {config.total_steps})")
    if step < LAMBDA_WARM_FRACTION * config.total_steps:
        return LAMBDA_WARM_FACTOR * config.lmbda
    return config.lmbda


def loss(rate_bits_total, distortion, lambda_effective, num_pixels):
    """rate/pixel + lambda * distortion, with distortion on the [0, 1] scale."""
    if num_pixels <= 0:
        raise ValueError("num_pixels must be positive")
    return ops.add(ops.scale(rate_bits_total, 1.0 / num_pixels),
                   ops.scale(distortion, lambda_effective))
