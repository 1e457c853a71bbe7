"""Bitstream container: header + hyper segment + one segment per slice.

Layout (little-endian):
  magic "CCAR" | version u16 | config hash 32 bytes | width u32 | height u32
  | num_slices u8 | flags u8 (bit 0: residual prediction)
  | hyper segment: length u32 + bytes | per slice: length u32 + bytes
"""

import struct
from dataclasses import dataclass

from ..errors import MalformedBitstream

MAGIC = b"CCAR"
VERSION = 1
FLAG_LRP = 0x01


@dataclass
class Bitstream:
    config_hash: bytes
    width: int
    height: int
    num_slices: int
    flags: int
    hyper_segment: bytes
    slice_segments: list

    HEADER_BYTES = 4 + 2 + 32 + 4 + 4 + 1 + 1

    @property
    def lrp_flag(self):
        return bool(self.flags & FLAG_LRP)

    def payload_bytes(self):
        """Entropy-coded bytes only (all segments, no header/length fields)."""
        return len(self.hyper_segment) + sum(len(s) for s in self.slice_segments)

    def total_bytes(self):
        return self.HEADER_BYTES + 4 * (1 + len(self.slice_segments)) + self.payload_bytes()

    def to_bytes(self):
        out = bytearray()
        out += MAGIC
        out += struct.pack("<H", VERSION)
        out += self.config_hash
        out += struct.pack("<IIBB", self.width, self.height, self.num_slices, self.flags)
        out += struct.pack("<I", len(self.hyper_segment))
        out += self.hyper_segment
        for seg in self.slice_segments:
            out += struct.pack("<I", len(seg))
            out += seg
        return bytes(out)

    @classmethod
    def from_bytes(cls, data):
        if len(data) < cls.HEADER_BYTES:
            raise MalformedBitstream(f"stream of {len(data)} bytes is shorter than the header")
        if data[:4] != MAGIC:
            raise MalformedBitstream("bad magic; not a codec bitstream")
        (version,) = struct.unpack_from("<H", data, 4)
        if version != VERSION:
            raise MalformedBitstream(f"unsupported bitstream version {version}")
        config_hash = bytes(data[6:38])
        width, height, num_slices, flags = struct.unpack_from("<IIBB", data, 38)
        pos = cls.HEADER_BYTES

        def segment():
            nonlocal pos
            if pos + 4 > len(data):
                raise MalformedBitstream("truncated segment length")
            (n,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if pos + n > len(data):
                raise MalformedBitstream("truncated segment")
            seg = bytes(data[pos:pos + n])
            pos += n
            return seg

        hyper = segment()
        slices = [segment() for _ in range(num_slices)]
        if pos != len(data):
            raise MalformedBitstream(f"{len(data) - pos} trailing bytes")
        return cls(config_hash=config_hash, width=width, height=height,
                   num_slices=num_slices, flags=flags,
                   hyper_segment=hyper, slice_segments=slices)
