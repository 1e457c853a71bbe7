"""Versioned binary checkpoints.

Layout (little-endian):
  magic "CCKP" | version u16 | config hash 32 bytes | parameter count u32
  per parameter: name length u16 | name utf-8 | shape 4 x u32 | f32 data
  optimizer flag u8; if 1, per parameter: step u64 | first moment f32 | second moment f32
"""

import struct

import numpy as np

from .errors import ConfigHashMismatch, MalformedBitstream

MAGIC = b"CCKP"
VERSION = 1


def save_checkpoint(path, model, include_adam_state=False):
    params = model.parameters()
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<H", VERSION)
    blob += model.config.config_hash
    blob += struct.pack("<I", len(params))
    for p in params:
        name = p.name.encode("utf-8")
        blob += struct.pack("<H", len(name))
        blob += name
        blob += struct.pack("<4I", *p.shape)
        blob += np.ascontiguousarray(p.data, dtype="<f4").tobytes()
    blob += struct.pack("<B", 1 if include_adam_state else 0)
    if include_adam_state:
        for p in params:
            blob += struct.pack("<Q", p.adam_step_count)
            blob += np.ascontiguousarray(p.adam_m, dtype="<f4").tobytes()
            blob += np.ascontiguousarray(p.adam_v, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(bytes(blob))


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise MalformedBitstream("checkpoint truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path, model, load_adam_state=False, strict_hash=True):
    """Load parameters (and optionally Adam state) into an existing model.

    The stored config hash must match the model's config unless strict_hash
    is disabled (used only by tooling that inspects foreign checkpoints).
    """
    with open(path, "rb") as f:
        r = _Reader(f.read())
    if r.take(4) != MAGIC:
        raise MalformedBitstream(f"{path}: not a checkpoint file (bad magic)")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise MalformedBitstream(f"{path}: unsupported checkpoint version {version}")
    stored_hash = bytes(r.take(32))
    if strict_hash and stored_hash != model.config.config_hash:
        raise ConfigHashMismatch(
            f"{path}: checkpoint was written for a different model config "
            f"({stored_hash.hex()[:12]} != {model.config.config_hash.hex()[:12]})")
    (count,) = r.unpack("<I")
    by_name = model.parameter_map()
    if count != len(by_name):
        raise MalformedBitstream(f"{path}: checkpoint has {count} parameters, model expects {len(by_name)}")
    order = []
    for _ in range(count):
        (nlen,) = r.unpack("<H")
        name = r.take(nlen).decode("utf-8")
        shape = r.unpack("<4I")
        n = int(np.prod(shape))
        data = np.frombuffer(r.take(4 * n), dtype="<f4").reshape(shape)
        p = by_name.get(name)
        if p is None:
            raise MalformedBitstream(f"{path}: unknown parameter {name!r}")
        if p.shape != shape:
            raise MalformedBitstream(f"{path}: parameter {name!r} has shape {shape}, model expects {p.shape}")
        p.data = data.astype(p.dtype)
        order.append(p)
    (flag,) = r.unpack("<B")
    if flag not in (0, 1):
        raise MalformedBitstream(f"{path}: bad optimizer-state flag {flag}")
    if flag == 1:
        for p in order:
            (step,) = r.unpack("<Q")
            m = np.frombuffer(r.take(4 * p.size), dtype="<f4").reshape(p.shape)
            v = np.frombuffer(r.take(4 * p.size), dtype="<f4").reshape(p.shape)
            if load_adam_state:
                p.adam_step_count = step
                p.adam_m = m.astype(p.dtype)
                p.adam_v = v.astype(p.dtype)
    if r.pos != len(r.data):
        raise MalformedBitstream(f"{path}: {len(r.data) - r.pos} trailing bytes")
    return stored_hash
