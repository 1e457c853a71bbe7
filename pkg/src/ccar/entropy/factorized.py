"""Deep factorized density for the hyper-latent.

One independent monotone CDF per channel, built from three hidden stages of
width 3 plus a sigmoid squash.  Each stage is u -> softplus(W) u + b followed
by u + tanh(a) * tanh(u); softplus keeps the linear maps nonnegative and
|tanh(a)| < 1 keeps the residual stage strictly increasing, so the composed
CDF is monotone by construction.  Biases and residual gains start at zero,
which pins C(0) = 1/2 at initialization.
"""

import numpy as np

from ..nn import ops
from ..nn.init import softplus_inverse
from ..nn.tensor import Parameter, Tensor, no_grad
from .tables import MAX_ALPHABET, TAIL_MASS, build_cdf_table


class FactorizedDensity:
    def __init__(self, name, channels, widths=(3, 3, 3), init_scale=10.0, rng=None, dtype=np.float32):
        self.channels = channels
        self.widths = tuple(widths)
        dims = (1,) + self.widths + (1,)
        step_scale = init_scale ** (1.0 / (len(dims) - 1))
        self.weights = []
        self.biases = []
        self.factors = []
        for k in range(len(dims) - 1):
            r_in, r_out = dims[k], dims[k + 1]
            base = softplus_inverse(1.0 / (step_scale * r_out))
            w0 = base + rng.uniform(-0.1, 0.1, size=(channels, r_out, r_in, 1))
            self.weights.append(Parameter(f"{name}.layer{k}.weight", w0.astype(dtype)))
            self.biases.append(Parameter(f"{name}.layer{k}.bias",
                                         np.zeros((1, channels * r_out, 1, 1), dtype=dtype)))
            if k < len(dims) - 2:
                self.factors.append(Parameter(f"{name}.layer{k}.factor",
                                              np.zeros((1, channels * r_out, 1, 1), dtype=dtype)))

    def parameters(self):
        out = []
        for k in range(len(self.weights)):
            out.append(self.weights[k])
            out.append(self.biases[k])
            if k < len(self.factors):
                out.append(self.factors[k])
        return out

    def cdf(self, x):
        """Monotone per-channel CDF evaluated elementwise on a (B, C, H, W) tensor."""
        u = x
        for k in range(len(self.weights)):
            u = ops.grouped_linear(u, ops.softplus(self.weights[k]))
            u = ops.add(u, self.biases[k])
            if k < len(self.factors):
                u = ops.add(u, ops.mul(ops.tanh(self.factors[k]), ops.tanh(u)))
        return ops.sigmoid(u)

    def likelihood(self, z):
        """p(z) = C(z + 1/2) - C(z - 1/2), floored at 2^-50."""
        upper = self.cdf(ops.add(z, 0.5))
        lower = self.cdf(ops.add(z, -0.5))
        return ops.clamp_min(ops.sub(upper, lower), 2.0 ** -50)

    # -- coding-time tables ---------------------------------------------------

    def cdf_values(self, grid):
        """CDF evaluated at each grid point for every channel; (C, len(grid))."""
        g = np.asarray(grid, dtype=np.float64)
        x = np.broadcast_to(g.reshape(1, 1, 1, -1), (1, self.channels, 1, g.size))
        with no_grad():
            out = self.cdf(Tensor(np.ascontiguousarray(x.astype(np.float32))))
        return out.data.reshape(self.channels, g.size).astype(np.float64)

    def integer_tables(self, max_half_width=2047):
        """One CdfTable per channel over the smallest alphabet holding all but
        < 2^-16 of the mass; outliers use the escape slot."""
        half = min(max_half_width, (MAX_ALPHABET - 2) // 2)
        edges = np.arange(-half, half + 2) - 0.5
        cdf = self.cdf_values(edges)
        pmf = np.diff(cdf, axis=1)
        tables = []
        for c in range(self.channels):
            left = cdf[c, :-1]
            right = 1.0 - cdf[c, 1:]
            lo_candidates = np.nonzero(left <= TAIL_MASS)[0]
            hi_candidates = np.nonzero(right <= TAIL_MASS)[0]
            lo = int(lo_candidates[-1]) if lo_candidates.size else 0
            hi = int(hi_candidates[0]) if hi_candidates.size else pmf.shape[1] - 1
            if hi < lo:
                lo = hi
            tables.append(build_cdf_table(pmf[c, lo:hi + 1], offset=lo - half, include_escape=True))
        return tables
