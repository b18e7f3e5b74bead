"""The auto-censuring codec: censoring transform, container format, exact
codelength accounting, and the reference mixture model.

Encoding splits a sequence over {1, 2, ...} into:

* the record stream ``C_E``: Elias-gamma codewords of the record increments
  ``rec_j - rec_{j-1} + 1`` terminated by the codeword of 1, and
* the mixture stream ``C_M``: the censored sequence (records replaced by the
  escape symbol 0) plus a final 0 terminator, arithmetically coded under the
  add-half mixture over the alphabet seen so far.

The container layout is ``b"ACC1" | uleb128(len(C_E) in bytes) | C_E padded
to a byte | C_M``.  Reported lengths are exact payload bit counts; the magic
and varint are accounted separately as header bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _coder
from .bits import BitReader, BitWriter, read_uleb128, write_uleb128
from .elias import EliasDecodeError, gamma_decode, gamma_encode, gamma_length

__all__ = [
    "MAGIC",
    "InvalidSymbolError",
    "CorruptContainerError",
    "CensoredTranscript",
    "CoderState",
    "EncodeReport",
    "censor",
    "uncensor",
    "ac_encode",
    "ac_decode",
    "kt_logprob",
    "kt_logprob_sequential",
    "mixture_logprob",
    "fixed_alphabet_logprob",
    "telescoping_rhs",
    "ml_product_logloss",
    "censored_logloss",
]

MAGIC = b"ACC1"

# model totals must fit the coder's frequency budget (quarter of the range)
_MAX_TOTAL = (1 << 30) + 1


class InvalidSymbolError(ValueError):
    """Input symbol outside {1, 2, ...} (0 is the reserved escape)."""


class CorruptContainerError(ValueError):
    """Container failed structural validation or decoding."""


@dataclass(frozen=True)
class CensoredTranscript:
    """A sequence split into records and the censored stream."""

    records: np.ndarray  # strictly increasing record values
    censored: np.ndarray  # 0 where the original symbol was a record
    running_max: np.ndarray

    @property
    def n(self) -> int:
        return int(self.censored.shape[0])


def censor(seq) -> CensoredTranscript:
    """Split ``seq`` into records and the censored stream.

    A symbol is a record when it strictly exceeds the running maximum of the
    prefix before it; records are replaced by the escape symbol 0.
    """
    x = np.asarray(seq, dtype=np.int64)
    if x.ndim != 1 or x.shape[0] == 0:
        raise ValueError("need a non-empty 1-d sequence")
    if x.min() < 1:
        raise InvalidSymbolError("symbols must be >= 1 (0 is the escape symbol)")
    running = np.maximum.accumulate(x)
    prev = np.empty_like(running)
    prev[0] = 0
    prev[1:] = running[:-1]
    is_record = x > prev
    censored = np.where(is_record, 0, x)
    return CensoredTranscript(
        records=x[is_record].copy(), censored=censored, running_max=running
    )


def uncensor(records, censored) -> np.ndarray:
    """Inverse of :func:`censor`: substitute the j-th record at the j-th 0."""
    records = np.asarray(records, dtype=np.int64)
    censored = np.asarray(censored, dtype=np.int64)
    out = censored.copy()
    zeros = np.flatnonzero(censored == 0)
    if zeros.shape[0] != records.shape[0]:
        raise ValueError(
            f"{zeros.shape[0]} escapes vs {records.shape[0]} records"
        )
    out[zeros] = records
    return out


class CoderState:
    """Reference sequential mixture model (the oracle for the compiled coder).

    Tracks position i, running maximum m and per-symbol counts; emits exact
    rational coding probabilities.  Symbol 0 is the escape.
    """

    def __init__(self):
        self.i = 0
        self.m = 0
        self.counts = {}

    def mixture_prob(self, symbol: int) -> Fraction:
        """(n_i^j + 1/2) / (i + (m+1)/2) for 1 <= j <= m; the escape gets
        numerator 1/2.  Probabilities over {0, ..., m} sum to 1."""
        denom = 2 * self.i + self.m + 1
        if symbol == 0:
            return Fraction(1, denom)
        if not 1 <= symbol <= self.m:
            raise InvalidSymbolError(
                f"symbol {symbol} exceeds the current alphabet (m={self.m})"
            )
        return Fraction(2 * self.counts.get(symbol, 0) + 1, denom)

    def update(self, symbol: int):
        """Account one original symbol.  A record extends the alphabet and
        increments its own count (never the escape's)."""
        if symbol < 1:
            raise InvalidSymbolError("symbols must be >= 1")
        if symbol > self.m:
            self.m = symbol
        self.counts[symbol] = self.counts.get(symbol, 0) + 1
        self.i += 1

    def step_prob(self, symbol: int) -> Fraction:
        """Probability of the censored emission for ``symbol``, then update."""
        emitted = 0 if symbol > self.m else symbol
        p = self.mixture_prob(emitted)
        self.update(symbol)
        return p


@dataclass(frozen=True)
class EncodeReport:
    """Exact per-run accounting."""

    n: int
    num_records: int
    max_symbol: int
    ce_bits: int
    cm_bits: int
    header_bits: int
    ideal_cm_bits: float  # exact -log2 Q^{n+1}(censored, 0)
    minus_ln_q_censored: float  # -ln Q^n(censored), terminator excluded

    @property
    def total_payload_bits(self) -> int:
        return self.ce_bits + self.cm_bits


def _encode_records(records: np.ndarray) -> tuple[bytes, int]:
    out = BitWriter()
    prev = 0
    for r in records:
        gamma_encode(int(r) - prev + 1, out)
        prev = int(r)
    gamma_encode(1, out)
    return out.getvalue(), out.bit_length


def _decode_records(ce: bytes) -> np.ndarray:
    reader = BitReader(ce)
    records = []
    prev = 0
    while True:
        try:
            v = gamma_decode(reader)
        except EliasDecodeError as exc:
            raise CorruptContainerError(f"record stream: {exc}") from exc
        if v == 1:
            return np.asarray(records, dtype=np.int64)
        prev = prev + v - 1
        records.append(prev)


def ac_encode(seq) -> tuple[bytes, EncodeReport]:
    """Encode a sequence over {1, 2, ...}; returns (container bytes, report)."""
    tr = censor(seq)
    n = tr.n
    m_n = int(tr.running_max[-1])
    if 2 * n + m_n + 1 > _MAX_TOTAL:
        raise ValueError("sequence too long/large for the coder's 30-bit budget")
    ce, ce_bits = _encode_records(tr.records)
    out = np.empty(5 * (n + 2) + 16, dtype=np.uint8)
    status, cm_bits, ideal_bits = _coder.encode_censored(tr.censored, tr.records, out)
    if status != _coder.STATUS_OK:  # pragma: no cover - sizing is worst-case safe
        raise RuntimeError(f"encoder kernel failed with status {status}")
    cm = out[: (cm_bits + 7) // 8].tobytes()
    header = MAGIC + write_uleb128(len(ce))
    report = EncodeReport(
        n=n,
        num_records=int(tr.records.shape[0]),
        max_symbol=m_n,
        ce_bits=ce_bits,
        cm_bits=int(cm_bits),
        header_bits=8 * len(header),
        ideal_cm_bits=float(ideal_bits),
        minus_ln_q_censored=(float(ideal_bits) - math.log2(2 * n + m_n + 1))
        * math.log(2.0),
    )
    return header + ce + cm, report


def ac_decode(data: bytes) -> np.ndarray:
    """Decode a container produced by :func:`ac_encode`."""
    if len(data) < len(MAGIC) + 1 or data[: len(MAGIC)] != MAGIC:
        raise CorruptContainerError("bad magic")
    try:
        ce_len, off = read_uleb128(data, len(MAGIC))
    except (EOFError, ValueError) as exc:
        raise CorruptContainerError(f"bad header varint: {exc}") from exc
    if off + ce_len > len(data):
        raise CorruptContainerError("record stream extends past container end")
    ce = data[off : off + ce_len]
    cm = np.frombuffer(data[off + ce_len :], dtype=np.uint8)
    records = _decode_records(ce)
    if records.shape[0] == 0:
        raise CorruptContainerError("container holds no records (empty input?)")
    out0 = np.empty(1024, dtype=np.int64)
    status, n, out = _coder.decode_censored(cm, records, out0)
    if status == _coder.STATUS_SYMBOL_CAP:
        raise CorruptContainerError("mixture stream did not terminate")
    if n == 0:
        raise CorruptContainerError("mixture stream decoded to nothing")
    return out[:n].copy()


# -- reference log-probabilities and bounds ----------------------------------


def _ln_double_factorial_odd(c) -> np.ndarray:
    """ln((2c-1)!!) = lnGamma(2c+1) - c ln 2 - lnGamma(c+1), elementwise."""
    from scipy.special import gammaln

    c = np.asarray(c, dtype=np.float64)
    return gammaln(2.0 * c + 1.0) - c * math.log(2.0) - gammaln(c + 1.0)


def kt_logprob(censored, alphabet_size: int) -> float:
    """ln KT_A(censored): the literal add-half mixture over a fixed alphabet
    {0, ..., A-1}, with counts taken from the censored string itself.

    Closed form via log-gamma:
    sum_s [lnG(c_s + 1/2) - lnG(1/2)] + lnG(A/2) - lnG(n + A/2).
    """
    from scipy.special import gammaln

    x = np.asarray(censored, dtype=np.int64)
    n = x.shape[0]
    if n == 0:
        return 0.0
    if x.min() < 0 or x.max() >= alphabet_size:
        raise ValueError("censored symbols must lie in [0, alphabet_size)")
    counts = np.bincount(x)
    counts = counts[counts > 0].astype(np.float64)
    half = alphabet_size / 2.0
    return float(
        np.sum(gammaln(counts + 0.5) - gammaln(0.5))
        + gammaln(half)
        - gammaln(n + half)
    )


def kt_logprob_sequential(censored, alphabet_size: int) -> float:
    """Sequential-product route to ln KT_A, for cross-checking the closed form."""
    counts = {}
    total = 0.0
    for i, s in enumerate(censored):
        s = int(s)
        if not 0 <= s < alphabet_size:
            raise ValueError("censored symbols must lie in [0, alphabet_size)")
        c = counts.get(s, 0)
        total += math.log((c + 0.5) / (i + alphabet_size / 2.0))
        counts[s] = c + 1
    return total


def mixture_logprob(seq) -> float:
    """ln Q^n(censored(seq)): the coding probability of the censored stream,
    terminator excluded, via exact count identities (no sequential product).

    -ln Q = sum_{i=0}^{n-1} ln(2i + 1 + m_i) - sum_v ln((2 c_v - 1)!!)
    where c_v are symbol counts in the *original* sequence.
    """
    x = np.asarray(seq, dtype=np.int64)
    tr = censor(x)
    i = np.arange(x.shape[0], dtype=np.float64)
    m_i = np.concatenate(([0], tr.running_max[:-1])).astype(np.float64)
    denom = float(np.sum(np.log(2.0 * i + 1.0 + m_i)))
    counts = np.bincount(x)
    counts = counts[counts > 0]
    numer = float(np.sum(_ln_double_factorial_odd(counts)))
    return numer - denom


def fixed_alphabet_logprob(seq) -> float:
    """ln of the mixture that codes the censored stream with the same counts
    as the coder but over the full final alphabet {0, ..., M_n} from step 1
    on (the first, forced escape keeps probability 1).

    This is the fixed-alphabet reference whose gap to ln Q^n telescopes to
    -sum_{i=1}^{n-1} ln((2i+1+M_n)/(2i+1+M_i)) exactly.  It is *not* the
    literal KT probability of the censored string (see kt_logprob): the two
    differ whenever a record value recurs, because the coder counts record
    occurrences under the record's own symbol while the censored string
    shows an escape.
    """
    x = np.asarray(seq, dtype=np.int64)
    tr = censor(x)
    n = x.shape[0]
    m_n = float(tr.running_max[-1])
    i = np.arange(1, n, dtype=np.float64)
    denom = float(np.sum(np.log(2.0 * i + 1.0 + m_n)))
    counts = np.bincount(x)
    counts = counts[counts > 0]
    numer = float(np.sum(_ln_double_factorial_odd(counts)))
    return numer - denom


def telescoping_rhs(running_max) -> float:
    """sum_{i=1}^{n-1} ln((2i+1+M_n)/(2i+1+M_i)), the alphabet-growth gain."""
    m = np.asarray(running_max, dtype=np.float64)
    n = m.shape[0]
    if n <= 1:
        return 0.0
    i = np.arange(1.0, n)
    return float(np.sum(np.log((2.0 * i + 1.0 + m[-1]) / (2.0 * i + 1.0 + m[:-1]))))


def ml_product_logloss(censored) -> float:
    """Empirical-entropy codelength of the censored string, in bits:
    -sum_s c_s log2(c_s / n)."""
    x = np.asarray(censored, dtype=np.int64)
    n = x.shape[0]
    if n == 0:
        return 0.0
    counts = np.bincount(x)
    counts = counts[counts > 0].astype(np.float64)
    return float(-np.sum(counts * np.log2(counts / n)))


def censored_logloss(seq, pmf) -> float:
    """Ideal codelength of the censored stream under a known source, in bits.

    ``pmf`` must expose ``pmf(k)`` and ``tail_above(m)`` (mass of symbols
    > m); escapes are charged -log2 of the tail above the previous maximum.
    Returns ``math.inf`` when an observed symbol has zero mass.
    """
    tr = censor(seq)
    total = 0.0
    for idx in range(tr.n):
        s = int(tr.censored[idx])
        if s == 0:
            prev_m = int(tr.running_max[idx - 1]) if idx else 0
            q = pmf.tail_above(prev_m)
        else:
            q = pmf.pmf(s)
        if q <= 0.0:
            return math.inf
        total -= math.log2(q)
    return total
