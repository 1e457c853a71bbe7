"""Image encode / decode / progressive decode / sampling.

The encoder reconstructs every slice exactly the way the decoder will: both
sides run the same transform code on the same integers, so the encoder-side
reconstruction is bit-identical to decoder output.  Symbols are s =
round(y - mu); reconstruction adds mu back.  Out-of-alphabet symbols are
coded as the table's escape slot followed by an Exp-Golomb bypass of the
zigzagged symbol value.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..entropy import ScaleTable
from ..errors import ConfigHashMismatch, ImageTooSmall, MalformedBitstream, ShapeError
from ..nn import no_grad, ops
from ..nn.tensor import Tensor
from ..rangecoder import RangeDecoder, RangeEncoder, unzigzag, zigzag
from .bitstream import FLAG_LRP, Bitstream

TILE = 64  # analysis stride (16) x hyper stride (4)

_LOG2_TOTAL = 16.0  # log2 of the CDF total

_SHARED_SCALE_TABLE = None


@dataclass
class CodingStats:
    """Analytic code lengths under the quantized tables, per segment."""

    hyper_bits: float = 0.0
    slice_bits: list = field(default_factory=list)
    escapes: int = 0

    @property
    def total_bits(self):
        return self.hyper_bits + sum(self.slice_bits)


def _tables_for(model):
    """ScaleTable plus per-channel hyper tables, rebuilt deterministically
    from the current parameters (tables are never serialized)."""
    global _SHARED_SCALE_TABLE
    if _SHARED_SCALE_TABLE is None:
        _SHARED_SCALE_TABLE = ScaleTable()
    key = tuple(p.data.tobytes() for p in model.hyper_density.parameters())
    cached = getattr(model, "_hyper_table_cache", None)
    if cached is None or cached[0] != key:
        cached = (key, model.hyper_density.integer_tables())
        model._hyper_table_cache = cached
    return _SHARED_SCALE_TABLE, cached[1]


def pad_to_tiles(img):
    """Reflect-pad (edge-inclusive) H and W up to multiples of 64."""
    c, h, w = img.shape
    ph = (-h) % TILE
    pw = (-w) % TILE
    if ph > h or pw > w:
        raise ImageTooSmall(f"{w}x{h} image cannot be reflect-padded to a multiple of {TILE}")
    if ph or pw:
        img = np.pad(img, ((0, 0), (0, ph), (0, pw)), mode="symmetric")
    return img


def _to_float(img_u8):
    img = np.asarray(img_u8)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ShapeError(f"expected (3, H, W) image, got {img.shape}")
    return img.astype(np.float32) / np.float32(255.0)


def _to_u8(x01):
    return ops.round_half_away(np.clip(x01, 0.0, 1.0) * 255.0).astype(np.uint8)


def _code_plane(enc, values, tables_per_element, stats_accum):
    """Encode integer values in flat order, escaping out-of-alphabet ones."""
    bits = 0.0
    escapes = 0
    for v, table in zip(values.tolist(), tables_per_element):
        idx = table.index_for(v)
        enc.encode_symbol(idx, table)
        bits += _LOG2_TOTAL - math.log2(table.count(idx))
        if idx == table.escape_index:
            z = zigzag(int(v))
            enc.encode_bypass(z)
            bits += 2 * (z + 1).bit_length() - 1  # each bypass bit costs exactly 1 bit
            escapes += 1
    stats_accum.append((bits, escapes))


def _decode_plane(dec, tables_per_element):
    out = np.empty(len(tables_per_element), dtype=np.int64)
    for i, table in enumerate(tables_per_element):
        idx = dec.decode_symbol(table)
        if idx == table.escape_index:
            out[i] = unzigzag(dec.decode_bypass())
        else:
            out[i] = table.value_for(idx)
    return out


def _t(arr):
    return Tensor(np.ascontiguousarray(arr))


class _EncoderSource:
    """Symbol source that quantizes y against mu and range-codes the result."""

    def __init__(self, model, y, scale_table):
        self.y = y
        self.scale_table = scale_table
        self.segments = []
        self.stats = []
        self.symbols_per_slice = []
        self.offsets = model.layout.offsets()

    def symbols(self, i, mu, sigma):
        lo, hi = self.offsets[i], self.offsets[i + 1]
        s = ops.round_half_away(self.y[:, lo:hi] - mu).astype(np.int64)
        levels = self.scale_table.level_for(sigma).reshape(-1)
        tables = [self.scale_table.tables[l] for l in levels]
        enc = RangeEncoder()
        acc = []
        _code_plane(enc, s.reshape(-1), tables, acc)
        self.segments.append(enc.flush())
        self.stats.append(acc[0])
        self.symbols_per_slice.append(s)
        return s


class _DecoderSource:
    """Symbol source that range-decodes each slice from its segment."""

    def __init__(self, segments, scale_table, layout):
        self.segments = segments
        self.scale_table = scale_table
        self.depths = layout.depths
        self.symbols_per_slice = []

    def symbols(self, i, mu, sigma):
        levels = self.scale_table.level_for(sigma).reshape(-1)
        tables = [self.scale_table.tables[l] for l in levels]
        dec = RangeDecoder(self.segments[i])
        s = _decode_plane(dec, tables).reshape(mu.shape)
        self.symbols_per_slice.append(s)
        return s


def _reconstruct_latents(model, z_hat, source, num_slices=None):
    """Shared slice loop: identical arithmetic on encoder and decoder sides.

    Returns (decoded slices as arrays, mu per slice) for the first
    `num_slices` slices (default: all).
    """
    n = model.layout.num_slices if num_slices is None else num_slices
    mu_feat = model.hyper_synthesis_mu(_t(z_hat))
    sigma_feat = model.hyper_synthesis_sigma(_t(z_hat))
    decoded = []
    mus = []
    for i in range(n):
        mu_i, sigma_i = model.slice_params(i, mu_feat, sigma_feat, decoded)
        s = source.symbols(i, mu_i.data, sigma_i.data)
        y_pre = _t(s.astype(model.dtype) + mu_i.data)
        decoded.append(model.decode_slice(i, mu_feat, decoded, y_pre))
        mus.append(mu_i)
    return decoded, mus, (mu_feat, sigma_feat)


def _fill_remaining_modes(model, mu_feat, sigma_feat, decoded, start):
    """Progressive fill: missing slices take their conditional mode (the mean),
    propagated sequentially so filled slices feed later conditional transforms."""
    for i in range(start, model.layout.num_slices):
        mu_i, _sigma_i = model.slice_params(i, mu_feat, sigma_feat, decoded)
        decoded.append(model.decode_slice(i, mu_feat, decoded, mu_i))
    return decoded


def _code_hyper(z_hat_int, tables):
    enc = RangeEncoder()
    acc = []
    c = z_hat_int.shape[1]
    flat = z_hat_int.reshape(-1)
    per_elem = []
    spatial = z_hat_int.shape[2] * z_hat_int.shape[3]
    for ch in range(c):
        per_elem.extend([tables[ch]] * spatial)
    _code_plane(enc, flat, per_elem, acc)
    return enc.flush(), acc[0]


def _decode_hyper(segment, tables, shape):
    dec = RangeDecoder(segment)
    c = shape[1]
    spatial = shape[2] * shape[3]
    per_elem = []
    for ch in range(c):
        per_elem.extend([tables[ch]] * spatial)
    return _decode_plane(dec, per_elem).reshape(shape)


def encode_latents(model, y, z_hat_int):
    """Entropy-code rounded hyper-latents plus latent slices.

    y: (1, C, h, w) float latent; z_hat_int: (1, hd, h/4, w/4) rounded ints.
    Returns (hyper segment, slice segments, CodingStats, decoded slice arrays,
    symbols per slice).  Exposed separately from encode_image so causality can
    be probed with doctored latents.
    """
    scale_table, hyper_tables = _tables_for(model)
    with no_grad():
        hyper_seg, hyper_stats = _code_hyper(z_hat_int, hyper_tables)
        source = _EncoderSource(model, np.asarray(y, dtype=model.dtype), scale_table)
        decoded, _mus, _feats = _reconstruct_latents(model, z_hat_int.astype(model.dtype), source)
    stats = CodingStats(hyper_bits=hyper_stats[0],
                        slice_bits=[b for b, _ in source.stats],
                        escapes=hyper_stats[1] + sum(e for _, e in source.stats))
    return hyper_seg, source.segments, stats, decoded, source.symbols_per_slice


def encode_image(model, img_u8):
    """Encode an 8-bit (3, H, W) image.

    Returns (Bitstream, encoder-side reconstruction as u8, CodingStats); the
    reconstruction is bit-identical to what decode_image will produce.
    """
    img = _to_float(img_u8)
    true_h, true_w = img.shape[1], img.shape[2]
    padded = pad_to_tiles(img)
    with no_grad():
        x = _t(padded[None])
        y = model.analysis(x)
        z = model.hyper_analysis(y)
        z_hat_int = ops.round_half_away(z.data).astype(np.int64)
        hyper_seg, slice_segs, stats, decoded, _syms = encode_latents(model, y.data, z_hat_int)
        x_hat = model.synthesis(ops.concat_channels(decoded))
    bs = Bitstream(
        config_hash=model.config.config_hash,
        width=true_w,
        height=true_h,
        num_slices=model.layout.num_slices,
        flags=FLAG_LRP if model.config.lrp_enabled else 0,
        hyper_segment=hyper_seg,
        slice_segments=slice_segs,
    )
    recon = _to_u8(x_hat.data[0, :, :true_h, :true_w])
    return bs, recon, stats


def decode_latents(model, bs):
    """Decode all slices of a bitstream; returns (decoded arrays, symbols)."""
    _check_stream(model, bs)
    with no_grad():
        scale_table, hyper_tables = _tables_for(model)
        ph, pw = _padded_dims(bs)
        z_shape = (1, model.config.hyper_depth, ph // TILE, pw // TILE)
        z_hat_int = _decode_hyper(bs.hyper_segment, hyper_tables, z_shape)
        source = _DecoderSource(bs.slice_segments, scale_table, model.layout)
        decoded, _mus, _feats = _reconstruct_latents(model, z_hat_int.astype(model.dtype), source)
    return [d.data for d in decoded], source.symbols_per_slice


def _check_stream(model, bs):
    if bs.config_hash != model.config.config_hash:
        raise ConfigHashMismatch(
            f"bitstream config hash {bs.config_hash.hex()[:12]} does not match "
            f"checkpoint config {model.config.config_hash.hex()[:12]}")
    if bs.num_slices != model.layout.num_slices or bs.lrp_flag != model.config.lrp_enabled:
        raise MalformedBitstream("header slice/flag fields disagree with the model config")


def _padded_dims(bs):
    ph = -(-bs.height // TILE) * TILE
    pw = -(-bs.width // TILE) * TILE
    return ph, pw


def _decode_to_slices(model, bs, k):
    scale_table, hyper_tables = _tables_for(model)
    ph, pw = _padded_dims(bs)
    z_shape = (1, model.config.hyper_depth, ph // TILE, pw // TILE)
    z_hat_int = _decode_hyper(bs.hyper_segment, hyper_tables, z_shape)
    source = _DecoderSource(bs.slice_segments, scale_table, model.layout)
    decoded, _mus, (mu_feat, sigma_feat) = _reconstruct_latents(
        model, z_hat_int.astype(model.dtype), source, num_slices=k)
    decoded = _fill_remaining_modes(model, mu_feat, sigma_feat, decoded, k)
    return decoded


def _synthesize(model, decoded, bs):
    x_hat = model.synthesis(ops.concat_channels(decoded))
    return _to_u8(x_hat.data[0, :, :bs.height, :bs.width])


def decode_image(model, bs):
    """Decode a bitstream to an 8-bit (3, H, W) image."""
    _check_stream(model, bs)
    with no_grad():
        decoded = _decode_to_slices(model, bs, model.layout.num_slices)
        return _synthesize(model, decoded, bs)


def progressive_decode(model, bs, k):
    """Reconstruct from the hyperprior plus the first k slices (k = 0 uses the
    hyper segment only); the remaining slices are filled with their
    conditional modes."""
    _check_stream(model, bs)
    n = model.layout.num_slices
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, {n}], got {k}")
    with no_grad():
        decoded = _decode_to_slices(model, bs, k)
        return _synthesize(model, decoded, bs)


class _SamplerSource:
    """Symbol source drawing from the per-element conditional tables, or
    short-circuiting to the mode (symbol 0 <=> the mean)."""

    def __init__(self, scale_table, rng, mode_latents):
        self.scale_table = scale_table
        self.rng = rng
        self.mode_latents = mode_latents

    def symbols(self, i, mu, sigma):
        if self.mode_latents:
            return np.zeros(mu.shape, dtype=np.int64)
        levels = self.scale_table.level_for(sigma).reshape(-1)
        draws = self.rng.integers(0, 1 << 16, size=levels.size)
        return _draw_from_tables(self.scale_table.tables, levels, draws).reshape(mu.shape)


def _draw_from_tables(tables, levels, draws):
    out = np.empty(levels.size, dtype=np.int64)
    for lvl in np.unique(levels):
        table = tables[lvl]
        mask = levels == lvl
        idx = np.searchsorted(table.cum_array, draws[mask], side="right") - 1
        if table.escape_index is not None:
            # An escape draw (probability 2^-16-ish) maps to the most likely symbol.
            mode = int(np.argmax(np.diff(table.cum_array[:-1])))
            idx = np.where(idx == table.escape_index, mode, idx)
        out[mask] = idx + table.offset
    return out


def sample_symbols(table, rng, n):
    """Draw n integer symbols from one CdfTable by inverse CDF."""
    draws = rng.integers(0, 1 << 16, size=n)
    return _draw_from_tables([table], np.zeros(n, dtype=np.int64), draws)


def sample_image(model, height, width, seed, z_hat=None, mode_latents=False):
    """Generate an image from the model's learned distributions.

    z_hat: optional integer hyper-latent (e.g. from hyper_latent_of) to
    condition on instead of drawing one from the factorized model.
    """
    if height % TILE or width % TILE:
        raise ShapeError(f"sample dims must be multiples of {TILE}, got {width}x{height}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    scale_table, hyper_tables = _tables_for(model)
    with no_grad():
        if z_hat is None:
            zh, zw = height // TILE, width // TILE
            planes = []
            for table in hyper_tables:
                planes.append(sample_symbols(table, rng, zh * zw).reshape(zh, zw))
            z_hat = np.stack(planes)[None]
        else:
            z_hat = np.asarray(z_hat, dtype=np.int64)
            if z_hat.shape[2] * TILE != height or z_hat.shape[3] * TILE != width:
                raise ShapeError(f"given hyper-latent implies {z_hat.shape[3] * TILE}x"
                                 f"{z_hat.shape[2] * TILE}, asked for {width}x{height}")
        source = _SamplerSource(scale_table, rng, mode_latents)
        decoded, _mus, _ = _reconstruct_latents(model, z_hat.astype(model.dtype), source)
        x_hat = model.synthesis(ops.concat_channels(decoded))
    return _to_u8(x_hat.data[0])


def hyper_latent_of(model, img_u8):
    """The rounded hyper-latent of a real image (for conditioned sampling)."""
    padded = pad_to_tiles(_to_float(img_u8))
    with no_grad():
        y = model.analysis(_t(padded[None]))
        z = model.hyper_analysis(y)
    return ops.round_half_away(z.data).astype(np.int64)
