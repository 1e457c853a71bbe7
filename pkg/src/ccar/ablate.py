"""Ablation driver: sweep one architecture axis over the lambda grid, train a
desk-scale model per point, and emit RD curves plus rate-savings tables."""

import csv
import os
from dataclasses import replace

import numpy as np

from .bd import RdCurve, bd_rate, rate_savings_curve, shared_quality_grid
from .metrics import bits_per_pixel, psnr
from .model import CodecModel, ModelConfig, decode_image, encode_image
from .parallel import parallel_map
from .training import DataPipeline, TrainConfig, synthetic_textures, train

# Frozen desk-scale lambda grid for [0, 1]-scaled MSE; tuned once on the toy
# corpus to span roughly 0.1 - 1.5 bpp and kept fixed since.
LAMBDA_GRID = (0.001, 0.0025, 0.005, 0.01, 0.02)

AXES = {
    "num_slices": (1, 2, 4),
    "lrp": (False, True),
    "train_quantization": ("noise", "mixed"),
    "slice_support": (0, 1, 3),
    "hyper_out_depth": (8, 16, 32),
}

TRAIN_SEED = 7001
DATA_SEED = 4242
EVAL_SEED = 9100
EVAL_IMAGES = 20
EVAL_SIZE = 192


def desk_variant(axis, value, base=None):
    """The desk ModelConfig for one point on an ablation axis."""
    base = base or ModelConfig(num_slices=4, lrp_enabled=False, train_quantization="noise")
    if axis == "num_slices":
        return replace(base, num_slices=value, slice_support=None)
    if axis == "lrp":
        return replace(base, lrp_enabled=value)
    if axis == "train_quantization":
        return replace(base, train_quantization=value)
    if axis == "slice_support":
        return replace(base, slice_support=value)
    if axis == "hyper_out_depth":
        return replace(base, hyper_out_depth=value)
    raise ValueError(f"unknown ablation axis {axis!r}; choose from {sorted(AXES)}")


def eval_images(seed=EVAL_SEED, count=EVAL_IMAGES, size=EVAL_SIZE):
    return synthetic_textures(seed, count=count, size=size)


def train_point(config, lmbda, out_dir, steps, batch_size=4, seed=TRAIN_SEED, corpus=None):
    """Train one model; returns the trained CodecModel."""
    model = CodecModel(config, seed=seed)
    tcfg = TrainConfig(lmbda=lmbda, total_steps=steps, batch_size=batch_size,
                       patch_size=64, seed=seed)
    if corpus is None:
        corpus = synthetic_textures(DATA_SEED)
    pipeline = DataPipeline(corpus, tcfg.patch_size, tcfg.batch_size, tcfg.seed)
    train(model, tcfg, pipeline, out_dir)
    return model


def evaluate_model(model, images):
    """Mean (bpp, psnr) over a list of images; bpp from the full file size."""

    def one(img):
        bs, _, _ = encode_image(model, img)
        recon = decode_image(model, bs)
        return (bits_per_pixel(len(bs.to_bytes()), img.shape[2], img.shape[1]),
                psnr(img, recon))

    results = parallel_map(one, list(images))
    bpps = [r[0] for r in results]
    psnrs = [r[1] for r in results]
    return float(np.mean(bpps)), float(np.mean(psnrs))


def rd_curve_for(config, lambdas, out_dir, steps, images, label, batch_size=4):
    points = []
    for lam in lambdas:
        run_dir = os.path.join(out_dir, f"{label}_lmbda{lam:g}")
        model = train_point(config, lam, run_dir, steps, batch_size=batch_size)
        points.append(evaluate_model(model, images))
    return RdCurve(points, label=label)


def run_ablation(axis, out_dir, steps=1200, lambdas=LAMBDA_GRID, values=None, batch_size=4):
    """Train the axis sweep, write curves/BD/savings artifacts, return curves."""
    os.makedirs(out_dir, exist_ok=True)
    values = values if values is not None else AXES[axis]
    images = eval_images()
    curves = []
    for v in values:
        config = desk_variant(axis, v)
        label = f"{axis}={v}"
        curve = rd_curve_for(config, lambdas, out_dir, steps, images, label, batch_size=batch_size)
        with open(os.path.join(out_dir, f"curve_{axis}_{v}.json"), "w") as f:
            f.write(curve.to_json())
        curves.append(curve)

    ref = curves[0]
    with open(os.path.join(out_dir, f"bd_{axis}.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["variant", "reference", "bd_rate_percent"])
        for c in curves[1:]:
            w.writerow([c.label, ref.label, f"{bd_rate(c, ref):.4f}"])

    with open(os.path.join(out_dir, f"savings_{axis}.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["quality_db"] + [c.label for c in curves[1:]])
        grids = [shared_quality_grid(c, ref) for c in curves[1:]]
        lo = max(g[0] for g in grids)
        hi = min(g[-1] for g in grids)
        grid = np.linspace(lo, hi, 9)
        cols = [dict(rate_savings_curve(c, ref, grid)) for c in curves[1:]]
        for q in grid:
            w.writerow([f"{q:.3f}"] + [f"{col[float(q)]:.3f}" for col in cols])
    return curves
