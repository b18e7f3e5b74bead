"""Seeded samplers for memoryless sources inside envelope classes.

The RNG is numpy's Philox counter-based generator (a named, documented
64-bit algorithm), seeded through ``SeedSequence`` so that per-trial streams
come from its ``spawn`` split and are reproducible independently of worker
scheduling.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .envelope import (
    EnvelopeDistribution,
    GeometricEnvelope,
    PoissonEnvelope,
    SubExponentialEnvelope,
)

__all__ = [
    "SourceModel",
    "geometric_source",
    "weibull_source",
    "poisson_source",
    "envelope_source",
    "make_generator",
    "spawn_seeds",
    "sample_iid",
    "sample_max_renyi",
    "membership_check",
]

_TAIL_EPS = 1e-18


def make_generator(seed) -> np.random.Generator:
    """Philox generator from an integer seed or a SeedSequence."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))

def spawn_seeds(seed: int, count: int):
    """Independent child seeds for per-trial streams (order-stable)."""
    return np.random.SeedSequence(seed).spawn(count)


class SourceModel:
    """A pmf over {1, 2, ...} with sampling and envelope-membership support.

    ``log_pmf`` must be evaluable for arbitrarily large k (it backs the
    analytic part of the membership check); ``tail_above(m)`` is P(X > m).
    """

    def __init__(self, name: str, params: dict, log_pmf, log_tail_above,
                 declared_envelope: Optional[EnvelopeDistribution] = None):
        self.name = name
        self.params = dict(params)
        self._log_pmf = log_pmf
        self._log_tail_above = log_tail_above
        self.declared_envelope = declared_envelope
        self._cdf_table = None
        total = self.tail_above(0)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {total}, not 1")

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"SourceModel({self.name}: {inner})"

    def log_pmf(self, k: int) -> float:
        if k < 1:
            return -math.inf
        return self._log_pmf(k)

    def pmf(self, k: int) -> float:
        return math.exp(self.log_pmf(k)) if k >= 1 else 0.0

    def tail_above(self, m: int) -> float:
        """P(X > m)."""
        if m < 1:
            return 1.0
        return math.exp(self._log_tail_above(m))

    @property
    def entropy_bits(self) -> float:
        """Shannon entropy in bits, summed to negligible tail."""
        total = 0.0
        k = 1
        while True:
            p = self.pmf(k)
            if p > 0.0:
                total -= p * math.log2(p)
            if self.tail_above(k) < _TAIL_EPS and k > 1:
                return total
            k += 1
            if k > 10_000_000:  # pragma: no cover - defensive
                raise RuntimeError("entropy sum did not converge")

    def _table(self) -> np.ndarray:
        if self._cdf_table is None:
            cdf = []
            acc = 0.0
            k = 1
            while True:
                acc = 1.0 - self.tail_above(k)
                cdf.append(acc)
                if 1.0 - acc < _TAIL_EPS:
                    break
                k += 1
                if k > 1_000_000:  # pragma: no cover - defensive
                    raise RuntimeError("cdf table did not converge")
            self._cdf_table = np.asarray(cdf)
        return self._cdf_table

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF sampling: binary search in the precomputed table,
        linear continuation on the (sub machine precision) analytic tail."""
        cdf = self._table()
        u = rng.random(n)
        idx = np.searchsorted(cdf, u, side="right")
        out = idx + 1
        over = idx >= cdf.shape[0]
        if np.any(over):  # pragma: no cover - tail mass < 1e-18
            for pos in np.flatnonzero(over):
                k = cdf.shape[0] + 1
                while self.tail_above(k) > 1.0 - u[pos]:
                    k += 1
                out[pos] = k
        return out.astype(np.int64)


def sample_iid(model: SourceModel, n: int, seed) -> np.ndarray:
    """Deterministic n-sample of the model under the named generator."""
    if n < 1:
        raise ValueError("need n >= 1")
    return model.sample(n, make_generator(seed))


# -- bundled families ---------------------------------------------------------


def geometric_source(p: float, envelope_scale: float = 1.0) -> SourceModel:
    """P(X = k) = p (1-p)^(k-1) on k >= 1; mean 1/p.

    The declared envelope is the geometric envelope with ratio (1-p) scaled
    so it dominates the pmf (exactly tight at envelope_scale = 1).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0,1)")
    q = 1.0 - p
    lp, lq = math.log(p), math.log(q)
    env = EnvelopeDistribution(
        GeometricEnvelope(ratio=q, scale=min(1.0 / q, envelope_scale * p / q))
    )
    return SourceModel(
        "geometric",
        {"p": p},
        lambda k: lp + (k - 1) * lq,
        lambda m: m * lq,
        declared_envelope=env,
    )


def weibull_source(alpha: float, beta: float, margin: float = 1.1) -> SourceModel:
    """Discrete Weibull: P(X = k) proportional to exp(-(k/beta)^alpha), k >= 1.

    Declared envelope: the sub-exponential envelope with the same shape and
    scale and gamma = margin / Z (Z the normalizer), the least gamma > 1/Z
    still giving a valid envelope.
    """
    if alpha < 1.0 or beta <= 0.0:
        raise ValueError("need alpha >= 1, beta > 0")
    raw = SubExponentialEnvelope(alpha, beta, 2.0)  # borrow its tail machinery
    log_z = raw.log_mass_from(1) - math.log(2.0)
    gamma = max(margin * math.exp(-log_z), 1.05)
    env = EnvelopeDistribution(SubExponentialEnvelope(alpha, beta, gamma))
    return SourceModel(
        "weibull",
        {"alpha": alpha, "beta": beta},
        lambda k: -((k / beta) ** alpha) - log_z,
        lambda m: raw.log_mass_from(m + 1) - math.log(2.0) - log_z,
        declared_envelope=env,
    )


def poisson_source(lam: float, envelope_scale: float = 1.05) -> SourceModel:
    """Unit-shifted Poisson: P(X = k) = e^-lam lam^(k-1)/(k-1)!, k >= 1."""
    if lam <= 0.0:
        raise ValueError("need lam > 0")
    raw = PoissonEnvelope(lam, scale=envelope_scale)
    env = EnvelopeDistribution(raw)
    return SourceModel(
        "poisson",
        {"lam": lam},
        lambda k: raw.log_mass(k) - math.log(envelope_scale),
        lambda m: raw.log_mass_from(m + 1) - math.log(envelope_scale),
        declared_envelope=env,
    )


def envelope_source(env: EnvelopeDistribution) -> SourceModel:
    """The envelope distribution itself as a source (always a member)."""

    def log_pmf(k: int) -> float:
        p = env.mass(k)
        return math.log(p) if p > 0.0 else -math.inf

    return SourceModel(
        "envelope",
        {"envelope": repr(env.envelope)},
        log_pmf,
        env.log_tail,
        declared_envelope=env,
    )


# -- order statistics ----------------------------------------------------------


def sample_max_renyi(env: EnvelopeDistribution, n: int, size: int, seed,
                     block: int = 4096) -> np.ndarray:
    """Samples of U_c(exp(E_nn)) where E_nn = sum_i Exp_i / (n+1-i).

    By the exponential-spacings representation E_nn is the maximum of n unit
    exponentials, so the output is distributed as the maximum of n draws
    from the continuous envelope distribution.
    """
    if n < 1 or size < 1:
        raise ValueError("need n >= 1 and size >= 1")
    rng = make_generator(seed)
    weights = 1.0 / np.arange(n, 0, -1, dtype=np.float64)  # 1/n, ..., 1/1
    e_max = np.empty(size)
    for start in range(0, size, block):
        stop = min(start + block, size)
        exps = rng.standard_exponential((stop - start, n))
        e_max[start:stop] = exps @ weights
    # vector inverse of the piecewise-linear hazard
    top = float(np.max(e_max))
    k = env.l_f
    while env._hazard_int(k) < top:
        k += 1
    hs = np.asarray(env._h)
    idx = np.searchsorted(hs, e_max, side="left")  # first h[j] >= value
    idx = np.clip(idx, 1, hs.shape[0] - 1)
    h0 = hs[idx - 1]
    h1 = hs[idx]
    frac = np.where(h1 > h0, (e_max - h0) / np.where(h1 > h0, h1 - h0, 1.0), 1.0)
    base = env.l_f - 1
    exact = hs[idx] == e_max
    return np.where(exact, base + idx, base + idx - 1 + frac)


# -- membership -----------------------------------------------------------------


def membership_check(model: SourceModel, env, K: int):
    """Check pmf(k) <= f(k) for k = 1..K, then log-mass domination on a
    geometric grid of larger k (analytic-tail spot check).

    Returns (ok, first_violation_or_None, checked_up_to).
    """
    envelope = env.envelope if isinstance(env, EnvelopeDistribution) else env
    checked = K
    for k in range(1, K + 1):
        lp = model.log_pmf(k)
        if lp - envelope.log_mass(k) > 1e-12:
            return False, k, checked
    k = K
    for _ in range(12):
        k *= 2
        checked = k
        lp = model.log_pmf(k)
        if lp == -math.inf:
            continue
        if lp - envelope.log_mass(k) > 1e-12:
            return False, k, checked
    return True, None, checked
