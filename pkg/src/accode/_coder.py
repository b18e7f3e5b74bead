"""Compiled hot loops for the censored-mixture arithmetic coder.

The coder is a 32-bit binary arithmetic coder with Witten-Neal-Cleary
renormalization (the carry-free low/high formulation).  Model frequencies
are exact integers: symbol j has weight 2*n_i^j + 1, the escape symbol 0 has
weight 1, and the total is 2i + m_i + 1, so encoder and decoder evolve
identical models with no rounding drift.  Cumulative weights live in a
Fenwick tree indexed by symbol (0 = escape), sized once from the largest
record, which both sides know before coding starts.

Everything here operates on int64 arrays; the friendly API wraps it in
codec.py.
"""

import numpy as np
from numba import njit

MASK = (1 << 32) - 1
TOP = 1 << 31
SECOND = 1 << 30
HALF_MASK = MASK >> 1

STATUS_OK = 0
STATUS_OUTPUT_OVERFLOW = -1
STATUS_SYMBOL_CAP = -2

_SYMBOL_CAP = 1 << 31


@njit(cache=True)
def _fen_add(tree, sym, delta):
    j = sym + 1
    size = tree.shape[0] - 1
    while j <= size:
        tree[j] += delta
        j += j & (-j)


@njit(cache=True)
def _fen_prefix(tree, sym):
    # cumulative weight of symbols strictly below `sym`
    acc = 0
    j = sym
    while j > 0:
        acc += tree[j]
        j -= j & (-j)
    return acc


@njit(cache=True)
def _fen_find(tree, topbit, value):
    # largest symbol s with prefix(s) <= value; returns (s, prefix(s))
    pos = 0
    rem = value
    bit = topbit
    size = tree.shape[0] - 1
    while bit > 0:
        nxt = pos + bit
        if nxt <= size and tree[nxt] <= rem:
            rem -= tree[nxt]
            pos = nxt
        bit >>= 1
    return pos, value - rem


@njit(cache=True)
def encode_censored(cens, records, out):
    """Arithmetically encode the censored stream plus the 0 terminator.

    Returns (status, nbits, ideal_bits) where ideal_bits is the exact
    ideal codelength -log2 Q^{n+1}(censored, 0) accumulated with Neumaier
    compensation.
    """
    n = cens.shape[0]
    nrec = records.shape[0]
    cap = 1
    if nrec > 0:
        cap = records[nrec - 1] + 1  # alphabet 0..max_record
    topbit = 1
    while (topbit << 1) <= cap:
        topbit <<= 1
    tree = np.zeros(cap + 1, dtype=np.int64)
    counts = np.zeros(cap, dtype=np.int64)
    _fen_add(tree, 0, 1)  # escape weight

    low = np.int64(0)
    high = np.int64(MASK)
    pending = 0
    bitbuf = 0
    bitcnt = 0
    pos = 0
    nout = out.shape[0]

    m = 0
    total = 1  # 2i + m + 1
    rec_idx = 0

    ideal = 0.0
    comp = 0.0

    status = STATUS_OK
    for idx in range(n + 1):
        if idx < n:
            sym = cens[idx]
        else:
            sym = 0  # terminator

        if sym == 0:
            lo = 0
            w = 1
        else:
            lo = _fen_prefix(tree, sym)
            w = 2 * counts[sym] + 1

        # ideal codelength, compensated
        term = np.log2(total) - np.log2(w)
        t = ideal + term
        if abs(ideal) >= abs(term):
            comp += (ideal - t) + term
        else:
            comp += (term - t) + ideal
        ideal = t

        # interval update
        rng = high - low + 1
        high = low + (rng * (lo + w)) // total - 1
        low = low + (rng * lo) // total

        while True:
            if ((low ^ high) & TOP) == 0:
                bit = low >> 31
                bitbuf = (bitbuf << 1) | bit
                bitcnt += 1
                if bitcnt == 8:
                    if pos >= nout:
                        return STATUS_OUTPUT_OVERFLOW, 0, 0.0
                    out[pos] = bitbuf
                    pos += 1
                    bitbuf = 0
                    bitcnt = 0
                inv = 1 - bit
                while pending > 0:
                    bitbuf = (bitbuf << 1) | inv
                    bitcnt += 1
                    if bitcnt == 8:
                        if pos >= nout:
                            return STATUS_OUTPUT_OVERFLOW, 0, 0.0
                        out[pos] = bitbuf
                        pos += 1
                        bitbuf = 0
                        bitcnt = 0
                    pending -= 1
                low = (low << 1) & MASK
                high = ((high << 1) & MASK) | 1
            elif (low & ~high & SECOND) != 0:
                pending += 1
                low = (low << 1) & HALF_MASK
                high = ((high << 1) & HALF_MASK) | TOP | 1
            else:
                break

        # model update (not after the terminator)
        if idx < n:
            if sym == 0:
                rec = records[rec_idx]
                rec_idx += 1
                for j in range(m + 1, rec + 1):
                    _fen_add(tree, j, 1)
                _fen_add(tree, rec, 2)
                counts[rec] = 1
                m = rec
            else:
                _fen_add(tree, sym, 2)
                counts[sym] += 1
            total = 2 * (idx + 1) + m + 1

    # finish: a single 1 bit pins the value to the half point of [low, high]
    bitbuf = (bitbuf << 1) | 1
    bitcnt += 1
    if bitcnt == 8:
        if pos >= nout:
            return STATUS_OUTPUT_OVERFLOW, 0, 0.0
        out[pos] = bitbuf
        pos += 1
        bitbuf = 0
        bitcnt = 0
    nbits = pos * 8 + bitcnt
    if bitcnt > 0:
        if pos >= nout:
            return STATUS_OUTPUT_OVERFLOW, 0, 0.0
        out[pos] = bitbuf << (8 - bitcnt)
        pos += 1
    return status, nbits, ideal + comp


@njit(cache=True)
def decode_censored(cm, records, out0):
    """Decode the mixture stream back to the original symbols.

    ``out0`` is an initial output buffer; a grown copy is returned when it
    fills up.  Returns (status, n, out) with out[:n] the decoded sequence.
    Decoding stops at the first escape after all records are consumed.
    """
    nrec = records.shape[0]
    cap = 1
    if nrec > 0:
        cap = records[nrec - 1] + 1
    topbit = 1
    while (topbit << 1) <= cap:
        topbit <<= 1
    tree = np.zeros(cap + 1, dtype=np.int64)
    counts = np.zeros(cap, dtype=np.int64)
    _fen_add(tree, 0, 1)

    nbits = cm.shape[0] * 8
    bitpos = 0
    code = np.int64(0)
    for _ in range(32):
        bit = 0
        if bitpos < nbits:
            bit = (cm[bitpos >> 3] >> (7 - (bitpos & 7))) & 1
        bitpos += 1
        code = ((code << 1) | bit) & MASK

    low = np.int64(0)
    high = np.int64(MASK)
    m = 0
    total = 1
    rec_idx = 0

    out = out0
    n = 0

    while True:
        rng = high - low + 1
        value = ((code - low + 1) * total - 1) // rng
        sym, lo = _fen_find(tree, topbit, value)
        if sym == 0:
            w = 1
        else:
            w = 2 * counts[sym] + 1

        high = low + (rng * (lo + w)) // total - 1
        low = low + (rng * lo) // total

        while True:
            if ((low ^ high) & TOP) == 0:
                low = (low << 1) & MASK
                high = ((high << 1) & MASK) | 1
                bit = 0
                if bitpos < nbits:
                    bit = (cm[bitpos >> 3] >> (7 - (bitpos & 7))) & 1
                bitpos += 1
                code = ((code << 1) | bit) & MASK
            elif (low & ~high & SECOND) != 0:
                low = (low << 1) & HALF_MASK
                high = ((high << 1) & HALF_MASK) | TOP | 1
                bit = 0
                if bitpos < nbits:
                    bit = (cm[bitpos >> 3] >> (7 - (bitpos & 7))) & 1
                bitpos += 1
                code = (code & TOP) | ((code << 1) & HALF_MASK) | bit
            else:
                break

        if sym == 0:
            if rec_idx == nrec:
                break  # terminator
            value_out = records[rec_idx]
            rec_idx += 1
            for j in range(m + 1, value_out + 1):
                _fen_add(tree, j, 1)
            _fen_add(tree, value_out, 2)
            counts[value_out] = 1
            m = value_out
        else:
            value_out = sym
            counts[sym] += 1
            _fen_add(tree, sym, 2)

        if n >= out.shape[0]:
            grown = np.empty(out.shape[0] * 2, dtype=np.int64)
            grown[: out.shape[0]] = out
            out = grown
        out[n] = value_out
        n += 1
        if n >= _SYMBOL_CAP:
            return STATUS_SYMBOL_CAP, n, out
        total = 2 * n + m + 1

    return STATUS_OK, n, out
