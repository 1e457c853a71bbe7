"""Differentiable ops: convolutions, (I)GDN, elementwise math, quantization
surrogates, channel plumbing, and reductions.

Convolutions use "same" padding with output size ceil(H/stride); the
transposed convolution is the exact adjoint of conv2d with the same geometry
(shared im2col/col2im helpers), so the inner-product identity holds by
construction.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..errors import ShapeError
from .tensor import Tensor, make_result

_LN2 = float(np.log(2.0))


def round_half_away(x):
    """Round half away from zero; the single rounding rule used everywhere."""
    x = np.asarray(x)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


# ---------------------------------------------------------------------------
# broadcasting arithmetic
# ---------------------------------------------------------------------------

def _unbroadcast(grad, shape):
    # Sum gradient over axes that were broadcast from size 1.
    for ax in range(4):
        if shape[ax] == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def _as_tensor(x, like):
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=like.dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1, 1, 1)
    return Tensor(arr)


def add(a, b):
    b = _as_tensor(b, a)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return make_result(a.data + b.data, (a, b), backward)


def sub(a, b):
    b = _as_tensor(b, a)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.shape))

    return make_result(a.data - b.data, (a, b), backward)


def mul(a, b):
    b = _as_tensor(b, a)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return make_result(a.data * b.data, (a, b), backward)


def div(a, b):
    b = _as_tensor(b, a)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return make_result(a.data / b.data, (a, b), backward)


def scale(a, c):
    c = float(c)

    def backward(g):
        a.accumulate_grad(g * np.asarray(c, dtype=a.dtype))

    return make_result(a.data * a.dtype.type(c), (a,), backward)


def neg(a):
    return scale(a, -1.0)


# ---------------------------------------------------------------------------
# elementwise nonlinearities
# ---------------------------------------------------------------------------

def relu(a):
    out = np.maximum(a.data, 0)

    def backward(g):
        # Subgradient at exactly 0 is 0.
        a.accumulate_grad(g * (a.data > 0))

    return make_result(out, (a,), backward)


def exp(a):
    out = np.exp(a.data)

    def backward(g):
        a.accumulate_grad(g * out)

    return make_result(out, (a,), backward)


def log(a):
    def backward(g):
        a.accumulate_grad(g / a.data)

    return make_result(np.log(a.data), (a,), backward)


def tanh(a):
    out = np.tanh(a.data)

    def backward(g):
        a.accumulate_grad(g * (1.0 - out * out))

    return make_result(out, (a,), backward)


def sigmoid(a):
    out = expit(a.data).astype(a.dtype, copy=False)

    def backward(g):
        a.accumulate_grad(g * out * (1.0 - out))

    return make_result(out, (a,), backward)


def softplus(a):
    out = np.logaddexp(a.dtype.type(0), a.data)

    def backward(g):
        a.accumulate_grad(g * expit(a.data).astype(a.dtype, copy=False))

    return make_result(out, (a,), backward)


def abs_(a):
    def backward(g):
        a.accumulate_grad(g * np.sign(a.data))

    return make_result(np.abs(a.data), (a,), backward)


def clamp_min(a, floor):
    floor = a.dtype.type(floor)
    out = np.maximum(a.data, floor)

    def backward(g):
        # Gradient flows wherever the clamp is inactive (>= keeps the boundary alive).
        a.accumulate_grad(g * (a.data >= floor))

    return make_result(out, (a,), backward)


# ---------------------------------------------------------------------------
# quantization surrogates
# ---------------------------------------------------------------------------

def quantize_noise(y, rng):
    """y + U(-1/2, 1/2) iid per element; gradient is the identity."""
    u = rng.random(size=y.shape, dtype=np.float32).astype(y.dtype) - y.dtype.type(0.5)

    def backward(g):
        y.accumulate_grad(g)

    return make_result(y.data + u, (y,), backward)


def quantize_ste(y):
    """Round half away from zero in the forward pass; identity gradient."""

    def backward(g):
        y.accumulate_grad(g)

    return make_result(round_half_away(y.data), (y,), backward)


# ---------------------------------------------------------------------------
# channel plumbing
# ---------------------------------------------------------------------------

def concat_channels(tensors):
    if not tensors:
        raise ShapeError("concat_channels needs at least one tensor")
    out = np.concatenate([t.data for t in tensors], axis=1)
    offsets = np.cumsum([0] + [t.shape[1] for t in tensors])

    def backward(g):
        for t, off in zip(tensors, offsets):
            if t.requires_grad:
                t.accumulate_grad(g[:, off:off + t.shape[1]])

    return make_result(out, tuple(tensors), backward)


def split_channels(x, depths):
    if sum(depths) != x.shape[1]:
        raise ShapeError(f"split depths {depths} do not sum to channel count {x.shape[1]}")
    parts = []
    off = 0
    for d in depths:
        lo = off
        off += d

        def backward(g, lo=lo, d=d):
            full = np.zeros_like(x.data)
            full[:, lo:lo + d] = g
            x.accumulate_grad(full)

        parts.append(make_result(np.ascontiguousarray(x.data[:, lo:lo + d]), (x,), backward))
    return parts


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def sum_all(a):
    out = np.asarray(a.data.sum(), dtype=a.dtype).reshape(1, 1, 1, 1)

    def backward(g):
        a.accumulate_grad(np.broadcast_to(g.reshape(()), a.shape).astype(a.dtype))

    return make_result(out, (a,), backward)


def mean_all(a):
    n = a.data.size
    out = np.asarray(a.data.mean(), dtype=a.dtype).reshape(1, 1, 1, 1)

    def backward(g):
        a.accumulate_grad(np.broadcast_to(g.reshape(()) / n, a.shape).astype(a.dtype))

    return make_result(out, (a,), backward)


def neg_log2_sum(p):
    """Sum of -log2(p), accumulated in float64; the rate term in bits."""
    total = -np.log(p.data.astype(np.float64)).sum() / _LN2

    def backward(g):
        p.accumulate_grad((-g.reshape(()) / (_LN2 * p.data.astype(np.float64))).astype(p.dtype))

    return make_result(np.asarray(total, dtype=p.dtype).reshape(1, 1, 1, 1), (p,), backward)


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def _same_geometry(size, k, stride):
    out = -(-size // stride)
    pad = max((out - 1) * stride + k - size, 0)
    return out, pad // 2, pad - pad // 2


def _im2col(xp, k, stride, out_h, out_w):
    # (B, C, Hp, Wp) -> contiguous (B, C*k*k, out_h*out_w)
    b, c = xp.shape[:2]
    s = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, c, k, k, out_h, out_w),
        strides=(s[0], s[1], s[2], s[3], s[2] * stride, s[3] * stride),
    )
    return view.reshape(b, c * k * k, out_h * out_w)


def _col2im(cols, b, c, k, stride, hp, wp, out_h, out_w, dtype):
    # Adjoint of _im2col: scatter-add columns back into the padded plane.
    out = np.zeros((b, c, hp, wp), dtype=dtype)
    d = cols.reshape(b, c, k, k, out_h, out_w)
    for i in range(k):
        for j in range(k):
            out[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += d[:, :, i, j]
    return out


def _check_conv_args(x, kernel, stride):
    if stride not in (1, 2):
        raise ShapeError(f"stride must be 1 or 2, got {stride}")
    if x.shape[2] < 1 or x.shape[3] < 1:
        raise ShapeError(f"non-positive spatial dims {x.shape[2:]}")
    if kernel.shape[2] != kernel.shape[3]:
        raise ShapeError(f"kernel must be square, got {kernel.shape}")


def conv2d(x, kernel, bias, stride=1):
    """Strided 2-D convolution with "same" padding: out = ceil(in / stride).

    kernel: (out_ch, in_ch, k, k); bias: (1, out_ch, 1, 1).
    """
    _check_conv_args(x, kernel, stride)
    out_ch, in_ch, k, _ = kernel.shape
    if x.shape[1] != in_ch:
        raise ShapeError(f"conv2d channel mismatch: input has {x.shape[1]}, kernel expects {in_ch}")
    b, _, h, w = x.shape
    out_h, pt, pb = _same_geometry(h, k, stride)
    out_w, pl, pr = _same_geometry(w, k, stride)
    xp = np.pad(x.data, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    cols = _im2col(xp, k, stride, out_h, out_w)
    w2 = kernel.data.reshape(out_ch, in_ch * k * k)
    y = np.matmul(w2, cols).reshape(b, out_ch, out_h, out_w)
    y += bias.data

    def backward(g):
        gf = g.reshape(b, out_ch, out_h * out_w)
        if bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=(0, 2, 3)).reshape(bias.shape))
        if kernel.requires_grad:
            dw = np.matmul(gf, cols.transpose(0, 2, 1)).sum(axis=0)
            kernel.accumulate_grad(dw.reshape(kernel.shape))
        if x.requires_grad:
            dcols = np.matmul(w2.T, gf)
            dxp = _col2im(dcols, b, in_ch, k, stride, xp.shape[2], xp.shape[3], out_h, out_w, x.dtype)
            x.accumulate_grad(dxp[:, :, pt:pt + h, pl:pl + w])

    return make_result(y, (x, kernel, bias), backward)


def conv2d_transpose(x, kernel, bias, stride=1):
    """Adjoint of conv2d with the same geometry; output dims = input * stride.

    kernel: (in_ch, out_ch, k, k); bias: (1, out_ch, 1, 1).  For all a, b:
    <conv2d(a, K), b> == <a, conv2d_transpose(b, K)> (bias excluded).
    """
    _check_conv_args(x, kernel, stride)
    in_ch, out_ch, k, _ = kernel.shape
    if x.shape[1] != in_ch:
        raise ShapeError(f"conv2d_transpose channel mismatch: input has {x.shape[1]}, kernel expects {in_ch}")
    b, _, h, w = x.shape
    oh, ow = h * stride, w * stride
    # Geometry of the conv this op is adjoint to: (oh, ow) -> (h, w).
    _, pt, pb = _same_geometry(oh, k, stride)
    _, pl, pr = _same_geometry(ow, k, stride)
    hp, wp = oh + pt + pb, ow + pl + pr
    k2 = kernel.data.reshape(in_ch, out_ch * k * k)
    xf = x.data.reshape(b, in_ch, h * w)
    cols = np.matmul(k2.T, xf)
    yp = _col2im(cols, b, out_ch, k, stride, hp, wp, h, w, x.dtype)
    y = np.ascontiguousarray(yp[:, :, pt:pt + oh, pl:pl + ow])
    y += bias.data

    def backward(g):
        gp = np.pad(g, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
        gcols = _im2col(gp, k, stride, h, w)
        if bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=(0, 2, 3)).reshape(bias.shape))
        if kernel.requires_grad:
            dk = np.matmul(xf, gcols.transpose(0, 2, 1)).sum(axis=0)
            kernel.accumulate_grad(dk.reshape(kernel.shape))
        if x.requires_grad:
            dx = np.matmul(k2, gcols).reshape(b, in_ch, h, w)
            x.accumulate_grad(dx)

    return make_result(y, (x, kernel, bias), backward)


# ---------------------------------------------------------------------------
# generalized divisive normalization
# ---------------------------------------------------------------------------

def _channel_mix(matrix, planes):
    # (C, C) x (B, C, H, W) -> (B, C, H, W), contracted over channels via BLAS.
    b, c, h, w = planes.shape
    return np.matmul(matrix, planes.reshape(b, c, h * w)).reshape(b, c, h, w)


def _channel_outer(a, b):
    # sum over batch and spatial of a_i * b_j -> (C, C) via BLAS.
    bb, c, h, w = a.shape
    af = a.reshape(bb, c, h * w)
    bf = b.reshape(bb, c, h * w)
    return np.matmul(af, bf.transpose(0, 2, 1)).sum(axis=0)


def gdn(x, beta, gamma):
    """z_i = x_i / (beta_i + sum_j gamma_ij |x_j|), per spatial position.

    beta: (1, C, 1, 1) strictly positive; gamma: (C, C, 1, 1) nonnegative.
    """
    c = x.shape[1]
    if beta.shape != (1, c, 1, 1) or gamma.shape != (c, c, 1, 1):
        raise ShapeError(f"gdn parameter shapes {beta.shape}/{gamma.shape} do not match {c} channels")
    gm = gamma.data.reshape(c, c)
    ax = np.abs(x.data)
    den = _channel_mix(gm, ax) + beta.data
    z = x.data / den

    def backward(g):
        s = g * z / den
        if x.requires_grad:
            dx = g / den - np.sign(x.data) * _channel_mix(gm.T, s)
            x.accumulate_grad(dx)
        if beta.requires_grad:
            beta.accumulate_grad(-s.sum(axis=(0, 2, 3)).reshape(beta.shape))
        if gamma.requires_grad:
            gamma.accumulate_grad(-_channel_outer(s, ax).reshape(gamma.shape))

    return make_result(z, (x, beta, gamma), backward)


def igdn(x, beta, gamma):
    """Multiplicative inverse-GDN form: z_i = x_i * (beta_i + sum_j gamma_ij |x_j|)."""
    c = x.shape[1]
    if beta.shape != (1, c, 1, 1) or gamma.shape != (c, c, 1, 1):
        raise ShapeError(f"igdn parameter shapes {beta.shape}/{gamma.shape} do not match {c} channels")
    gm = gamma.data.reshape(c, c)
    ax = np.abs(x.data)
    den = _channel_mix(gm, ax) + beta.data
    z = x.data * den

    def backward(g):
        t = g * x.data
        if x.requires_grad:
            dx = g * den + np.sign(x.data) * _channel_mix(gm.T, t)
            x.accumulate_grad(dx)
        if beta.requires_grad:
            beta.accumulate_grad(t.sum(axis=(0, 2, 3)).reshape(beta.shape))
        if gamma.requires_grad:
            gamma.accumulate_grad(_channel_outer(t, ax).reshape(gamma.shape))

    return make_result(z, (x, beta, gamma), backward)


# ---------------------------------------------------------------------------
# per-channel grouped linear map (factorized density building block)
# ---------------------------------------------------------------------------

def grouped_linear(x, weight):
    """Independent linear map per channel group.

    x: (B, C*r_in, H, W) seen as C groups of width r_in;
    weight: (C, r_out, r_in, 1); output (B, C*r_out, H, W).
    """
    c, r_out, r_in, _ = weight.shape
    b, ch, h, w = x.shape
    if ch != c * r_in:
        raise ShapeError(f"grouped_linear: input channels {ch} != {c} groups x {r_in}")
    xr = x.data.reshape(b, c, r_in, h * w)
    w3 = weight.data.reshape(c, r_out, r_in)
    y = np.matmul(w3, xr).reshape(b, c * r_out, h, w)

    def backward(g):
        gr = g.reshape(b, c, r_out, h * w)
        if x.requires_grad:
            dx = np.matmul(w3.transpose(0, 2, 1), gr).reshape(x.shape)
            x.accumulate_grad(dx)
        if weight.requires_grad:
            dw = np.matmul(gr, xr.transpose(0, 1, 3, 2)).sum(axis=0)
            weight.accumulate_grad(dw.reshape(weight.shape))

    return make_result(y, (x, weight), backward)
