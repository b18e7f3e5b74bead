"""Bit-level I/O and LEB128 varints for the container format."""

from __future__ import annotations

__all__ = ["BitWriter", "BitReader", "write_uleb128", "read_uleb128"]


class BitWriter:
    """MSB-first bit accumulator backed by a bytearray."""

    def __init__(self):
        self.buf = bytearray()
        self._acc = 0
        self._nbits = 0
        self.bit_length = 0

    def write_bit(self, bit: int):
        self._acc = (self._acc << 1) | (bit & 1)
        self._nbits += 1
        self.bit_length += 1
        if self._nbits == 8:
            self.buf.append(self._acc)
            self._acc = 0
            self._nbits = 0

    def write_bits(self, value: int, width: int):
        """Write ``width`` bits of ``value``, most significant first."""
        for shift in range(width - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def getvalue(self) -> bytes:
        """Zero-pad to a byte boundary and return the bytes."""
        out = bytearray(self.buf)
        if self._nbits:
            out.append(self._acc << (8 - self._nbits))
        return bytes(out)


class BitReader:
    """MSB-first bit reader over a bytes object.

    ``read_bit`` raises EOFError past the end; ``read_bit_or_zero`` returns 0
    instead (arithmetic-decoder semantics, where trailing zeros are implied).
    """

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0  # bit position

    def __len__(self):
        return 8 * len(self.data)

    @property
    def remaining(self) -> int:
        return 8 * len(self.data) - self.pos

    def read_bit(self) -> int:
        if self.pos >= 8 * len(self.data):
            raise EOFError("bit stream exhausted")
        byte = self.data[self.pos >> 3]
        bit = (byte >> (7 - (self.pos & 7))) & 1
        self.pos += 1
        return bit

    def read_bit_or_zero(self) -> int:
        if self.pos >= 8 * len(self.data):
            self.pos += 1
            return 0
        return self.read_bit()


def write_uleb128(value: int) -> bytes:
    """Unsigned LEB128 encoding of a non-negative integer."""
    if value < 0:
        raise ValueError("uleb128 encodes non-negative integers")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def read_uleb128(data: bytes, offset: int = 0):
    """Decode an unsigned LEB128 integer; returns (value, next_offset)."""
    value = 0
    shift = 0
    pos = offset
    while True:
        if pos >= len(data):
            raise EOFError("truncated uleb128")
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise ValueError("uleb128 value too large")
