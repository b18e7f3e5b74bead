"""Elias gamma and delta codes for positive integers.

Gamma is the default record code: its length 2*floor(log2 x) + 1 satisfies
len(x) <= 2 log2(1 + x) + 1, which is all the codelength analysis needs.
Delta is provided as the denser alternative for large values.
"""

from __future__ import annotations

from .bits import BitReader, BitWriter

__all__ = [
    "gamma_encode",
    "gamma_decode",
    "delta_encode",
    "delta_decode",
    "gamma_length",
    "delta_length",
    "EliasDecodeError",
]


class EliasDecodeError(ValueError):
    """Malformed or truncated Elias codeword."""


def _check_positive(x: int):
    if x < 1:
        raise ValueError(f"Elias codes encode integers >= 1, got {x}")


def gamma_length(x: int) -> int:
    _check_positive(x)
    return 2 * (x.bit_length() - 1) + 1


def delta_length(x: int) -> int:
    _check_positive(x)
    nbits = x.bit_length()
    return gamma_length(nbits) + nbits - 1


def gamma_encode(x: int, out: BitWriter):
    """Unary length prefix (zeros), then the binary digits of x."""
    _check_positive(x)
    width = x.bit_length()
    for _ in range(width - 1):
        out.write_bit(0)
    out.write_bits(x, width)


def gamma_decode(reader: BitReader) -> int:
    zeros = 0
    try:
        while True:
            bit = reader.read_bit()
            if bit:
                break
            zeros += 1
            if zeros > 63:
                raise EliasDecodeError("gamma prefix too long")
        value = 1
        for _ in range(zeros):
            value = (value << 1) | reader.read_bit()
    except EOFError as exc:
        raise EliasDecodeError("truncated gamma codeword") from exc
    return value


def delta_encode(x: int, out: BitWriter):
    """Gamma-coded bit-length, then the binary digits of x without the lead 1."""
    _check_positive(x)
    width = x.bit_length()
    gamma_encode(width, out)
    if width > 1:
        out.write_bits(x & ((1 << (width - 1)) - 1), width - 1)


def delta_decode(reader: BitReader) -> int:
    width = gamma_decode(reader)
    if width > 63:
        raise EliasDecodeError("delta width too large")
    value = 1
    try:
        for _ in range(width - 1):
            value = (value << 1) | reader.read_bit()
    except EOFError as exc:
        raise EliasDecodeError("truncated delta codeword") from exc
    return value
