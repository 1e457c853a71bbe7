"""The complete codec network: analysis/synthesis, hyper transforms, per-slice
channel-conditional mu/sigma transforms, and latent residual prediction.

Layer stacks follow a fixed recipe scaled by the configured conv base width:
four 5x5 stride-2 convs with GDN between for analysis (IGDN and transposed
convs for synthesis), a three-layer hyper pair, and per-slice 3x3 stacks
whose intermediate depths interpolate linearly from input to slice depth.
"""

from dataclasses import dataclass

import numpy as np

from ..entropy import FactorizedDensity, gaussian_noisy_likelihood, rate_bits
from ..nn import ops
from ..nn.tensor import Tensor
from .config import cc_depths, hyper_analysis_depths, hyper_synthesis_depths, layout_for
from .layers import Conv, Gdn, Sequential

LRP_BOUND = 0.5  # predicted residual is 0.5 * tanh(raw): the true residual lies in (-1/2, 1/2]


@dataclass
class TrainStep:
    rate_y_bits: Tensor
    rate_z_bits: Tensor
    distortion: Tensor
    x_hat: Tensor

    @property
    def total_rate_bits(self):
        return ops.add(self.rate_y_bits, self.rate_z_bits)


class CodecModel:
    def __init__(self, config, seed=0, dtype=np.float32):
        self.config = config
        self.layout = layout_for(config)
        self.dtype = dtype
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        w, c = config.conv_base, config.latent_depth

        def conv(name, i, o, k, s):
            return Conv(name, i, o, k, s, rng, dtype=dtype)

        def deconv(name, i, o, k, s):
            return Conv(name, i, o, k, s, rng, transpose=True, dtype=dtype)

        self.analysis = Sequential([
            conv("analysis.conv0", 3, w, 5, 2), Gdn("analysis.gdn0", w, dtype=dtype),
            conv("analysis.conv1", w, w, 5, 2), Gdn("analysis.gdn1", w, dtype=dtype),
            conv("analysis.conv2", w, w, 5, 2), Gdn("analysis.gdn2", w, dtype=dtype),
            conv("analysis.conv3", w, c, 5, 2),
        ])
        self.synthesis = Sequential([
            deconv("synthesis.conv0", c, w, 5, 2), Gdn("synthesis.igdn0", w, inverse=True, dtype=dtype),
            deconv("synthesis.conv1", w, w, 5, 2), Gdn("synthesis.igdn1", w, inverse=True, dtype=dtype),
            deconv("synthesis.conv2", w, w, 5, 2), Gdn("synthesis.igdn2", w, inverse=True, dtype=dtype),
            deconv("synthesis.conv3", w, 3, 5, 2),
        ])

        ha = hyper_analysis_depths(config)
        self.hyper_analysis = Sequential([
            conv("hyper_analysis.conv0", c, ha[0], 3, 1), "relu",
            conv("hyper_analysis.conv1", ha[0], ha[1], 5, 2), "relu",
            conv("hyper_analysis.conv2", ha[1], ha[2], 5, 2),
        ])
        hs = hyper_synthesis_depths(config)
        hd = config.hyper_depth
        self.hyper_synthesis_mu = Sequential([
            deconv("hyper_synthesis_mu.conv0", hd, hs[0], 5, 2), "relu",
            deconv("hyper_synthesis_mu.conv1", hs[0], hs[1], 5, 2), "relu",
            conv("hyper_synthesis_mu.conv2", hs[1], hs[2], 3, 1), "relu",
        ])
        self.hyper_synthesis_sigma = Sequential([
            deconv("hyper_synthesis_sigma.conv0", hd, hs[0], 5, 2), "relu",
            deconv("hyper_synthesis_sigma.conv1", hs[0], hs[1], 5, 2), "relu",
            conv("hyper_synthesis_sigma.conv2", hs[1], hs[2], 3, 1), "relu",
        ])

        self.cc_mu = []
        self.cc_sigma = []
        self.lrp = []
        for i in range(self.layout.num_slices):
            in_depth, convs = cc_depths(i, self.layout, config.hyper_out_depth)
            self.cc_mu.append(self._slice_stack(f"cc_mu.{i}", in_depth, convs, rng))
            self.cc_sigma.append(self._slice_stack(f"cc_sigma.{i}", in_depth, convs, rng, final="exp"))
            if config.lrp_enabled:
                lrp_in = in_depth + self.layout.depths[i]
                self.lrp.append(self._slice_stack(f"lrp.{i}", lrp_in, convs, rng))

        self.hyper_density = FactorizedDensity("hyper_density", config.hyper_depth, rng=rng, dtype=dtype)

    def _slice_stack(self, name, in_depth, convs, rng, final=None):
        steps = [
            Conv(f"{name}.conv0", in_depth, convs[0], 3, 1, rng, dtype=self.dtype), "relu",
            Conv(f"{name}.conv1", convs[0], convs[1], 3, 1, rng, dtype=self.dtype), "relu",
            Conv(f"{name}.conv2", convs[1], convs[2], 3, 1, rng, dtype=self.dtype),
        ]
        if final:
            steps.append(final)
        return Sequential(steps)

    # -- parameters -----------------------------------------------------------

    def parameters(self):
        out = []
        for t in [self.analysis, self.synthesis, self.hyper_analysis,
                  self.hyper_synthesis_mu, self.hyper_synthesis_sigma]:
            out.extend(t.parameters())
        for stacks in (self.cc_mu, self.cc_sigma, self.lrp):
            for s in stacks:
                out.extend(s.parameters())
        out.extend(self.hyper_density.parameters())
        return out

    def parameter_map(self):
        return {p.name: p for p in self.parameters()}

    # -- shared slice machinery ------------------------------------------------

    def slice_params(self, i, mu_feat, sigma_feat, decoded):
        """Entropy parameters (mu_i, sigma_i) for slice i given the hyper
        features and the decoded earlier slices."""
        cond = [decoded[j] for j in self.layout.cond_sets[i]]
        mu = self.cc_mu[i](ops.concat_channels([mu_feat] + cond))
        sigma = self.cc_sigma[i](ops.concat_channels([sigma_feat] + cond))
        return mu, sigma

    def lrp_residual(self, i, mu_feat, decoded, y_pre):
        cond = [decoded[j] for j in self.layout.cond_sets[i]]
        raw = self.lrp[i](ops.concat_channels([mu_feat] + cond + [y_pre]))
        return ops.scale(ops.tanh(raw), LRP_BOUND)

    def decode_slice(self, i, mu_feat, decoded, y_pre):
        if self.config.lrp_enabled:
            return ops.add(y_pre, self.lrp_residual(i, mu_feat, decoded, y_pre))
        return y_pre

    # -- training forward -------------------------------------------------------

    def forward_train(self, x, rng, distortion="mse"):
        """One rate-distortion forward pass on a batch of [0, 1] patches.

        Rate terms always see noisy latents.  In "mixed" mode every tensor
        entering a synthesis-side transform (hyper synthesis, conditional
        transforms via the decoded slices, and the synthesis transform itself)
        is rounded with straight-through gradients instead.
        """
        if x.shape[2] % 64 or x.shape[3] % 64:
            from ..errors import ShapeError

            raise ShapeError(f"training patches must have spatial dims divisible by 64, got {x.shape}")
        mixed = self.config.train_quantization == "mixed"

        y = self.analysis(x)
        z = self.hyper_analysis(y)
        z_noisy = ops.quantize_noise(z, rng)
        z_dec = ops.quantize_ste(z) if mixed else z_noisy
        rate_z = rate_bits(self.hyper_density.likelihood(z_noisy))

        mu_feat = self.hyper_synthesis_mu(z_dec)
        sigma_feat = self.hyper_synthesis_sigma(z_dec)

        decoded = []
        rate_y = None
        for i, y_i in enumerate(ops.split_channels(y, self.layout.depths)):
            mu_i, sigma_i = self.slice_params(i, mu_feat, sigma_feat, decoded)
            y_noisy = ops.quantize_noise(y_i, rng)
            term = rate_bits(gaussian_noisy_likelihood(y_noisy, mu_i, sigma_i))
            rate_y = term if rate_y is None else ops.add(rate_y, term)
            if mixed:
                y_pre = ops.add(ops.quantize_ste(ops.sub(y_i, mu_i)), mu_i)
            else:
                y_pre = y_noisy
            decoded.append(self.decode_slice(i, mu_feat, decoded, y_pre))

        x_hat = self.synthesis(ops.concat_channels(decoded))
        err = ops.sub(x, x_hat)
        if distortion == "mse":
            d = ops.mean_all(ops.mul(err, err))
        elif distortion == "l1":
            d = ops.mean_all(ops.abs_(err))
        else:
            raise ValueError(f"unknown distortion {distortion!r}")
        return TrainStep(rate_y_bits=rate_y, rate_z_bits=rate_z, distortion=d, x_hat=x_hat)
