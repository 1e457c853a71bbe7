"""The optimization loop: loss assembly, schedules, logging, checkpoints."""

import math
import os

import numpy as np

from ..checkpoint import save_checkpoint
from ..errors import TrainingDiverged
from ..nn import Adam, Tensor, set_finite_checks
from .config import lambda_at, loss, lr_at
from .configfile import write_config_file

CSV_HEADER = "step,loss,bpp,psnr,lr,lambda_eff"


def train(model, train_config, pipeline, out_dir, log_every=10, quiet=True):
    """Run the full schedule; returns the list of metric rows.

    Writes metrics.csv plus ckpt_final.ckpt (and numbered intermediates when
    checkpoint_interval > 0), each with a sidecar .cfg describing the model.
    Fully reproducible: (seed, configs) determine the checkpoint bytes.
    """
    os.makedirs(out_dir, exist_ok=True)
    opt = Adam(model.parameters())
    noise_rng = np.random.default_rng(np.random.SeedSequence([train_config.seed, 0x4015E]))
    num_pixels = train_config.batch_size * train_config.patch_size ** 2
    rows = []
    prev_checks = set_finite_checks(True)
    try:
        for step in range(train_config.total_steps):
            lr = lr_at(step, train_config)
            lam = lambda_at(step, train_config)
            batch = Tensor(pipeline.next_batch())
            out = model.forward_train(batch, noise_rng, distortion=train_config.distortion)
            step_loss = loss(out.total_rate_bits, out.distortion, lam, num_pixels)
            loss_val = step_loss.item()
            if not math.isfinite(loss_val):
                raise TrainingDiverged(step, f"loss is {loss_val}")
            opt.zero_grad()
            step_loss.backward()
            try:
                opt.step(lr)
            except TrainingDiverged as e:
                raise TrainingDiverged(step, str(e)) from e

            bpp = out.total_rate_bits.item() / num_pixels
            mse = float(np.mean((batch.data - out.x_hat.data) ** 2))
            psnr = 99.0 if mse == 0 else min(99.0, -10.0 * math.log10(mse))
            rows.append(f"{step},{loss_val!r},{bpp!r},{psnr!r},{lr!r},{lam!r}")
            if not quiet and (step % log_every == 0 or step == train_config.total_steps - 1):
                print(f"step {step:6d}  loss {loss_val:.4f}  bpp {bpp:.4f}  psnr {psnr:.2f}  lr {lr:g}")
            interval = train_config.checkpoint_interval
            if interval and (step + 1) % interval == 0 and step + 1 < train_config.total_steps:
                _write_checkpoint(model, train_config, os.path.join(out_dir, f"ckpt_{step + 1:07d}.ckpt"))
    finally:
        set_finite_checks(prev_checks)

    with open(os.path.join(out_dir, "metrics.csv"), "w") as f:
        f.write(CSV_HEADER + "\n")
        f.write("\n".join(rows) + "\n")
    _write_checkpoint(model, train_config, os.path.join(out_dir, "ckpt_final.ckpt"))
    return rows


def _write_checkpoint(model, train_config, path):
    save_checkpoint(path, model, include_adam_state=True)
    write_config_file(path + ".cfg", model.config, train_config)
