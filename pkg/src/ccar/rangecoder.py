"""Byte-wise integer range coder over 16-bit CDF tables.

Integer-only arithmetic throughout: a 32-bit range renormalized at 2^24, a
low accumulator whose carries propagate into already-emitted bytes, and a
4-byte flush/prime window.  The encoder and decoder mirror each other
operation for operation, so identical table sequences round-trip exactly on
any platform.
"""

from bisect import bisect_right

from .errors import MalformedBitstream

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF
CDF_BITS = 16

# Fixed half/half table for bypass (raw bit) coding.
_BYPASS_CUM = (0, 1 << 15, 1 << 16)


class RangeEncoder:
    def __init__(self):
        self._low = 0
        self._range = _MASK32
        self._out = bytearray()
        self._closed = False

    def _encode_interval(self, cum_lo, cum_hi):
        r = self._range >> CDF_BITS
        self._low += r * cum_lo
        self._range = r * (cum_hi - cum_lo)
        if self._low > _MASK32:
            # Carry ripples back through any 0xFF run in the emitted bytes.
            i = len(self._out) - 1
            while self._out[i] == 0xFF:
                self._out[i] = 0
                i -= 1
            self._out[i] += 1
            self._low &= _MASK32
        while self._range < _TOP:
            self._out.append((self._low >> 24) & 0xFF)
            self._low = (self._low << 8) & _MASK32
            self._range <<= 8

    def encode_symbol(self, index, table):
        if self._closed:
            raise ValueError("encoder already flushed")
        cum = table.cum
        if not 0 <= index < len(cum) - 1:
            raise ValueError(f"symbol index {index} invalid for table with {len(cum) - 1} symbols")
        self._encode_interval(cum[index], cum[index + 1])

    def encode_bypass(self, value):
        """Order-0 Exp-Golomb bits pushed through the coder half/half."""
        if value < 0:
            raise ValueError(f"bypass value must be nonnegative, got {value}")
        n = value + 1
        nbits = n.bit_length()
        for _ in range(nbits - 1):
            self._encode_interval(_BYPASS_CUM[0], _BYPASS_CUM[1])
        for i in range(nbits - 1, -1, -1):
            bit = (n >> i) & 1
            self._encode_interval(_BYPASS_CUM[bit], _BYPASS_CUM[bit + 1])

    def flush(self):
        """Emit the remaining state as exactly four terminator bytes."""
        if self._closed:
            raise ValueError("encoder already flushed")
        self._closed = True
        for _ in range(4):
            self._out.append((self._low >> 24) & 0xFF)
            self._low = (self._low << 8) & _MASK32
        return bytes(self._out)


class RangeDecoder:
    def __init__(self, data):
        if len(data) < 4:
            raise MalformedBitstream(f"segment of {len(data)} bytes is shorter than the 4-byte window")
        self._data = data
        self._pos = 4
        self._code = int.from_bytes(data[:4], "big")
        self._range = _MASK32

    def _decode_interval(self, cum):
        r = self._range >> CDF_BITS
        v = self._code // r
        if v > 0xFFFF:
            v = 0xFFFF
        index = bisect_right(cum, v) - 1
        self._code -= r * cum[index]
        self._range = r * (cum[index + 1] - cum[index])
        while self._range < _TOP:
            if self._pos >= len(self._data):
                raise MalformedBitstream("range decoder ran past the end of its segment")
            self._code = (self._code << 8) | self._data[self._pos]
            self._pos += 1
            self._range <<= 8
        return index

    def decode_symbol(self, table):
        return self._decode_interval(table.cum)

    def decode_bypass(self):
        zeros = 0
        while self._decode_interval(_BYPASS_CUM) == 0:
            zeros += 1
            if zeros > 64:
                raise MalformedBitstream("bypass prefix exceeds 64 zero bits")
        n = 1
        for _ in range(zeros):
            n = (n << 1) | self._decode_interval(_BYPASS_CUM)
        return n - 1

    @property
    def consumed(self):
        return self._pos


def zigzag(value):
    """Signed int -> nonnegative int: 0, -1, 1, -2, 2 ... -> 0, 1, 2, 3, 4 ..."""
    return 2 * value if value >= 0 else -2 * value - 1


def unzigzag(value):
    return value // 2 if value % 2 == 0 else -(value + 1) // 2
