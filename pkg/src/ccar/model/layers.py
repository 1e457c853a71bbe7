"""Parameterized layers used by the codec transforms."""

import numpy as np

from ..nn import init, ops
from ..nn.tensor import Parameter

GDN_BETA_EPS = 1e-6
GDN_GAMMA_INIT = 0.1
GDN_GAMMA_OFFDIAG_RAW = -6.0


class Conv:
    """Strided conv or transposed conv with an optional activation tag."""

    def __init__(self, name, in_ch, out_ch, kernel_size, stride, rng, transpose=False, dtype=np.float32):
        self.stride = stride
        self.transpose = transpose
        shape = (in_ch, out_ch, kernel_size, kernel_size) if transpose else (out_ch, in_ch, kernel_size, kernel_size)
        fan_in = in_ch * kernel_size * kernel_size
        self.kernel = Parameter(f"{name}.kernel", init.conv_kernel(shape, fan_in, rng).astype(dtype))
        self.bias = Parameter(f"{name}.bias", np.zeros((1, out_ch, 1, 1), dtype=dtype))

    def parameters(self):
        return [self.kernel, self.bias]

    def __call__(self, x):
        if self.transpose:
            return ops.conv2d_transpose(x, self.kernel, self.bias, self.stride)
        return ops.conv2d(x, self.kernel, self.bias, self.stride)


class Gdn:
    """(Inverse) generalized divisive normalization.

    beta and gamma live as unconstrained raws mapped through softplus:
    beta = softplus(beta_raw) + 1e-6 > 0, gamma = softplus(gamma_raw) >= 0,
    with gamma starting near 0.1 * I.  The inverse form is an independent
    multiplicative layer with its own parameters, not an analytic inverse.
    """

    def __init__(self, name, channels, inverse=False, dtype=np.float32):
        self.inverse = inverse
        beta_raw = np.full((1, channels, 1, 1), init.softplus_inverse(1.0 - GDN_BETA_EPS), dtype=dtype)
        gamma_raw = np.full((channels, channels, 1, 1), GDN_GAMMA_OFFDIAG_RAW, dtype=dtype)
        diag = init.softplus_inverse(GDN_GAMMA_INIT)
        for i in range(channels):
            gamma_raw[i, i, 0, 0] = diag
        self.beta_raw = Parameter(f"{name}.beta", beta_raw)
        self.gamma_raw = Parameter(f"{name}.gamma", gamma_raw)

    def parameters(self):
        return [self.beta_raw, self.gamma_raw]

    def __call__(self, x):
        beta = ops.add(ops.softplus(self.beta_raw), GDN_BETA_EPS)
        gamma = ops.softplus(self.gamma_raw)
        if self.inverse:
            return ops.igdn(x, beta, gamma)
        return ops.gdn(x, beta, gamma)


class Sequential:
    """A list of layers/activations applied in order.

    Entries are either layer objects or the strings "relu" / "exp".
    """

    def __init__(self, steps):
        self.steps = steps

    def parameters(self):
        out = []
        for s in self.steps:
            if not isinstance(s, str):
                out.extend(s.parameters())
        return out

    def __call__(self, x):
        for s in self.steps:
            if s == "relu":
                x = ops.relu(x)
            elif s == "exp":
                x = ops.exp(x)
            elif isinstance(s, str):
                raise ValueError(f"unknown activation {s!r}")
            else:
                x = s(x)
        return x
