"""Envelope functions over the positive integers and their derived distributions.

An envelope is a summable function f : {1, 2, ...} -> [0, inf) with
sum(f) >= 1.  It induces a probability distribution with lower endpoint
``l_f = max{k : sum_{j>=k} f(j) >= 1}``, tail ``tail(k) = sum_{j>k} f(j)``
for k >= l_f (and 1 below), a piecewise-linear cumulative hazard built on
the integer values ``-ln tail(k)``, and the quantile-like inverses U (integer
valued) and U_c (real valued) of ``1/tail``.

All distribution objects are immutable after construction and cache the
integer hazard values they have already computed.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

__all__ = [
    "InvalidEnvelopeError",
    "GeometricEnvelope",
    "SubExponentialEnvelope",
    "PoissonEnvelope",
    "TabulatedEnvelope",
    "EnvelopeDistribution",
    "parse_envelope_file",
    "format_envelope_file",
]

# Relative tolerance for summability / monotonicity checks on tabulated input.
NUMERIC_TOL = 1e-9

_LOG_EPS = -45.0  # e^-45 ~ 3e-20: below double precision relative to the head term


class InvalidEnvelopeError(ValueError):
    """The candidate envelope is not summable to at least 1, or is malformed."""


def _log1mexp(x: float) -> float:
    """ln(1 - e^-x) for x > 0, stable for both small and large x."""
    if x <= 0.0:
        raise ValueError("log1mexp requires x > 0")
    if x < math.log(2.0):
        return math.log(-math.expm1(-x))
    return math.log1p(-math.exp(-x))


class GeometricEnvelope:
    """f(k) = scale * ratio^k for k >= 1."""

    def __init__(self, ratio: float, scale: float = 1.0):
        if not 0.0 < ratio < 1.0:
            raise InvalidEnvelopeError(f"geometric ratio must be in (0,1), got {ratio}")
        if scale <= 0.0:
            raise InvalidEnvelopeError(f"geometric scale must be > 0, got {scale}")
        if scale * ratio > 1.0 + NUMERIC_TOL:
            raise InvalidEnvelopeError("geometric envelope has f(1) > 1")
        self.ratio = float(ratio)
        self.scale = float(scale)

    def __repr__(self):
        return f"GeometricEnvelope(ratio={self.ratio}, scale={self.scale})"

    def log_mass(self, k: int) -> float:
        """ln f(k)."""
        return math.log(self.scale) + k * math.log(self.ratio)

    def log_mass_from(self, k: int) -> float:
        """ln sum_{j>=k} f(j), exact geometric series."""
        return (
            math.log(self.scale)
            + k * math.log(self.ratio)
            - _log1mexp(-math.log(self.ratio))
        )


class SubExponentialEnvelope:
    """f(k) = gamma * exp(-(k/beta)^alpha) with alpha >= 1, beta > 0, gamma > 1.

    For large gamma the first few f(k) may exceed 1; the raw values are kept
    (only the induced distribution is used downstream), matching the usual
    parametric definition of the family.
    """

    def __init__(self, alpha: float, beta: float, gamma: float):
        if alpha < 1.0:
            raise InvalidEnvelopeError(f"alpha must be >= 1, got {alpha}")
        if beta <= 0.0:
            raise InvalidEnvelopeError(f"beta must be > 0, got {beta}")
        if gamma <= 1.0:
            raise InvalidEnvelopeError(f"gamma must be > 1, got {gamma}")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.gamma = float(gamma)

    def __repr__(self):
        return (
            f"SubExponentialEnvelope(alpha={self.alpha}, beta={self.beta}, "
            f"gamma={self.gamma})"
        )

    @property
    def kappa(self) -> float:
        """1 / (1 - exp(-alpha / beta^alpha)), the tail-domination constant."""
        return 1.0 / -math.expm1(-self.alpha / self.beta**self.alpha)

    def log_mass(self, k: int) -> float:
        return math.log(self.gamma) - (k / self.beta) ** self.alpha

    def log_mass_from(self, k: int) -> float:
        # Head term dominates; successive exponents grow by at least
        # alpha * k^(alpha-1) / beta^alpha, so the series is at worst geometric.
        head = -((k / self.beta) ** self.alpha)
        acc = 1.0
        j = k + 1
        while True:
            t = -((j / self.beta) ** self.alpha) - head
            if t < _LOG_EPS:
                # bound the remainder by a geometric series with the local ratio
                prev = -(((j - 1) / self.beta) ** self.alpha) - head
                q = math.exp(t - prev)
                if q < 1.0:
                    acc += math.exp(t) / (1.0 - q)
                break
            acc += math.exp(t)
            j += 1
            if j - k > 1_000_000:  # pragma: no cover - defensive
                raise InvalidEnvelopeError("sub-exponential tail sum did not converge")
        return math.log(self.gamma) + head + math.log(acc)


class PoissonEnvelope:
    """f(k) = scale * e^-lam * lam^(k-1) / (k-1)! for k >= 1 (unit-shifted Poisson)."""

    def __init__(self, lam: float, scale: float = 1.0):
        if lam <= 0.0:
            raise InvalidEnvelopeError(f"lambda must be > 0, got {lam}")
        if scale < 1.0 - NUMERIC_TOL:
            raise InvalidEnvelopeError("poisson envelope needs scale >= 1 to sum to 1")
        self.lam = float(lam)
        self.scale = float(scale)

    def __repr__(self):
        return f"PoissonEnvelope(lam={self.lam}, scale={self.scale})"

    def _log_pois(self, i: int) -> float:
        return -self.lam + i * math.log(self.lam) - math.lgamma(i + 1)

    def log_mass(self, k: int) -> float:
        return math.log(self.scale) + self._log_pois(k - 1)

    def log_mass_from(self, k: int) -> float:
        """ln(scale * P(N >= k-1)) for N ~ Poisson(lam)."""
        m = k - 1
        if m <= 0:
            return math.log(self.scale)
        if m <= self.lam + 1.0:
            # complement of a short lower sum; the tail here is >= P(N >= lam+1)
            # which is bounded away from 0, so the complement is well conditioned
            terms = [self._log_pois(i) for i in range(m)]
            hi = max(terms)
            low = hi + math.log(sum(math.exp(t - hi) for t in terms))
            return math.log(self.scale) + _log1mexp(-low)
        # upper sum, terms decay at least geometrically for i >= lam
        head = self._log_pois(m)
        acc = 1.0
        i = m + 1
        while True:
            t = self._log_pois(i) - head
            if t < _LOG_EPS:
                q = self.lam / i
                if q < 1.0:
                    acc += math.exp(t) / (1.0 - q)
                break
            acc += math.exp(t)
            i += 1
        return math.log(self.scale) + head + math.log(acc)


class TabulatedEnvelope:
    """Explicit f(1..K) values continued beyond the table with a geometric tail.

    ``f(K + j) = values[K-1] * tail_ratio^j`` for j >= 1, so the hazard rate is
    eventually constant at -ln(tail_ratio) and the support is infinite.
    """

    def __init__(self, values, tail_ratio: float):
        values = tuple(float(v) for v in values)
        if not values:
            raise InvalidEnvelopeError("tabulated envelope needs at least one value")
        for i, v in enumerate(values):
            if not 0.0 <= v <= 1.0:
                raise InvalidEnvelopeError(f"f({i + 1}) = {v} outside [0, 1]")
        if not 0.0 < tail_ratio < 1.0:
            raise InvalidEnvelopeError(f"tail ratio must be in (0,1), got {tail_ratio}")
        if values[-1] <= 0.0:
            raise InvalidEnvelopeError("last tabulated value must be positive")
        self.values = values
        self.tail_ratio = float(tail_ratio)
        # suffix[i] = sum of values[i:]
        suffix = [0.0] * (len(values) + 1)
        for i in range(len(values) - 1, -1, -1):
            suffix[i] = suffix[i + 1] + values[i]
        self._suffix = suffix
        self._tail_beyond = values[-1] * tail_ratio / (1.0 - tail_ratio)

    def __repr__(self):
        return (
            f"TabulatedEnvelope(K={len(self.values)}, tail_ratio={self.tail_ratio})"
        )

    def log_mass(self, k: int) -> float:
        K = len(self.values)
        if k <= K:
            v = self.values[k - 1]
            return math.log(v) if v > 0.0 else -math.inf
        return math.log(self.values[-1]) + (k - K) * math.log(self.tail_ratio)

    def log_mass_from(self, k: int) -> float:
        K = len(self.values)
        if k <= K:
            return math.log(self._suffix[k - 1] + self._tail_beyond)
        # pure geometric beyond the table
        return (
            math.log(self.values[-1])
            + (k - K) * math.log(self.tail_ratio)
            - _log1mexp(-math.log(self.tail_ratio))
        )


def parse_envelope_file(text: str) -> TabulatedEnvelope:
    """Parse the tabulated format: one ``k value`` pair per line, then
    ``tail geometric <rate>``.  Indices must be contiguous from 1."""
    values = []
    tail_ratio = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "tail":
            if len(parts) != 3 or parts[1] != "geometric":
                raise InvalidEnvelopeError(f"line {lineno}: malformed tail spec")
            tail_ratio = float(parts[2])
            continue
        if len(parts) != 2:
            raise InvalidEnvelopeError(f"line {lineno}: expected 'k value'")
        k, v = int(parts[0]), float(parts[1])
        if k != len(values) + 1:
            raise InvalidEnvelopeError(f"line {lineno}: indices must be 1,2,... got {k}")
        values.append(v)
    if tail_ratio is None:
        raise InvalidEnvelopeError("missing 'tail geometric <rate>' line")
    return TabulatedEnvelope(values, tail_ratio)


def format_envelope_file(env: TabulatedEnvelope) -> str:
    lines = [f"{k} {v!r}" for k, v in enumerate(env.values, start=1)]
    lines.append(f"tail geometric {env.tail_ratio!r}")
    return "\n".join(lines) + "\n"


@dataclass
class EnvelopeDistribution:
    """Distribution view of an envelope: tails, hazard, quantiles.

    ``hazard_at`` values are cached per integer offset from ``l_f - 1``; the
    cache only ever grows, so sharing an instance across threads is safe in
    the usual CPython-append sense (no entry is ever mutated once written).
    """

    envelope: object
    l_f: int = field(init=False)
    b: float = field(init=False)
    _h: list = field(init=False, repr=False)  # h[j] = hazard at (l_f - 1 + j)

    def __post_init__(self):
        env = self.envelope
        total = env.log_mass_from(1)
        if not math.isfinite(total) or total < math.log1p(-NUMERIC_TOL):
            raise InvalidEnvelopeError(
                f"envelope mass sums to {math.exp(total):.12g} < 1"
            )
        k = 1
        while env.log_mass_from(k + 1) >= math.log1p(-NUMERIC_TOL):
            k += 1
            if k > 10_000_000:  # pragma: no cover - defensive
                raise InvalidEnvelopeError("lower endpoint search did not terminate")
        self.l_f = k
        self._h = [0.0, -env.log_mass_from(k + 1)]
        self.b = self._h[1]
        if not self.b > 0.0:
            raise InvalidEnvelopeError("tail at the lower endpoint is not below 1")

    # -- integer-level views ------------------------------------------------

    def _hazard_int(self, k: int) -> float:
        """Cumulative hazard at integer k >= l_f - 1."""
        j = k - (self.l_f - 1)
        h = self._h
        while j >= len(h):
            nxt = -self.envelope.log_mass_from(self.l_f - 1 + len(h) + 1)
            if nxt < h[-1]:
                nxt = h[-1]  # clamp float noise; tails are non-increasing
            h.append(nxt)
        return h[j]

    def log_tail(self, k: int) -> float:
        """ln tail(k), with tail(k) = 1 for k < l_f."""
        if k < self.l_f:
            return 0.0
        return -self._hazard_int(k)

    def tail(self, k: int) -> float:
        """tail(k) = 1 - F(k) = sum_{j>k} f(j), clipped to 1 below l_f."""
        return math.exp(self.log_tail(k))

    def cdf(self, k: int) -> float:
        return -math.expm1(self.log_tail(k))

    def mass(self, k: int) -> float:
        """Probability mass of the envelope distribution at integer k."""
        if k < self.l_f:
            return 0.0
        if k == self.l_f:
            return -math.expm1(-self.b)
        return self.tail(k - 1) - self.tail(k)

    # -- continuous hazard --------------------------------------------------

    def hazard(self, t: float) -> float:
        """Piecewise-linear cumulative hazard at real t >= l_f - 1."""
        lo = self.l_f - 1
        if t < lo - 1e-12:
            raise ValueError(f"hazard domain starts at {lo}, got {t}")
        t = max(t, float(lo))
        k = int(math.floor(t))
        if k == t:
            return self._hazard_int(k)
        h0 = self._hazard_int(k)
        h1 = self._hazard_int(k + 1)
        return h0 + (t - k) * (h1 - h0)

    def log_tail_c(self, t: float) -> float:
        """ln of the continuous tail: -hazard(t) for t >= l_f - 1, else 0."""
        if t <= self.l_f - 1:
            return 0.0
        return -self.hazard(t)

    def tail_c(self, t: float) -> float:
        return math.exp(self.log_tail_c(t))

    def cdf_c(self, t: float) -> float:
        return -math.expm1(self.log_tail_c(t))

    def hazard_rate(self, k: int) -> float:
        """Slope of the hazard on [k, k+1), i.e. ln(tail(k)/tail(k+1))."""
        if k < self.l_f - 1:
            raise ValueError(f"hazard rate domain starts at {self.l_f - 1}")
        return self._hazard_int(k + 1) - self._hazard_int(k)

    def hazard_nondecreasing(self, K: int, tol: float = NUMERIC_TOL):
        """Check that the hazard rate is non-decreasing up to K.

        Returns ``(True, None)`` or ``(False, k)`` with k the first integer
        where the rate on [k, k+1) drops below the rate on [k-1, k).
        """
        if K < self.l_f:
            raise ValueError("K must be at least the lower endpoint")
        prev = self.hazard_rate(self.l_f - 1)
        for k in range(self.l_f, K):
            cur = self.hazard_rate(k)
            if cur < prev - tol * max(1.0, abs(prev)):
                return False, k
            prev = max(prev, cur)
        return True, None

    # -- quantiles ------------------------------------------------------------

    def _first_int_hazard_ge(self, target: float) -> int:
        """Smallest integer k with hazard(k) >= target (target > 0)."""
        lo = self.l_f - 1
        # gallop in offset space, then bisect on the cached table
        step = 1
        hi = lo + 1
        while self._hazard_int(hi) < target:
            step <<= 1
            hi = lo + step
            if step > 1 << 60:  # pragma: no cover - defensive
                raise OverflowError("quantile search diverged (hazard bounded?)")
        base = self.l_f - 1
        j = bisect_left(self._h, target, lo=max(1, hi - step + 1 - base), hi=hi - base)
        return base + j

    def quantile_U(self, t: float) -> int:
        """U(t) = inf{integer x : 1/tail(x) >= t}, for t > 1."""
        if not t > 1.0:
            raise ValueError(f"quantile domain is t > 1, got {t}")
        return self.quantile_U_ln(math.log(t))

    def quantile_U_ln(self, ln_t: float) -> int:
        if not ln_t > 0.0:
            raise ValueError(f"quantile domain is ln t > 0, got {ln_t}")
        return self._first_int_hazard_ge(ln_t)

    def quantile_Uc(self, t: float) -> float:
        """U_c(t) = inf{x : 1/tail_c(x) >= t}: per-segment inverse hazard."""
        if not t > 1.0:
            raise ValueError(f"quantile domain is t > 1, got {t}")
        return self.quantile_Uc_ln(math.log(t))

    def quantile_Uc_ln(self, ln_t: float) -> float:
        if not ln_t > 0.0:
            raise ValueError(f"quantile domain is ln t > 0, got {ln_t}")
        k = self._first_int_hazard_ge(ln_t)
        h1 = self._hazard_int(k)
        if h1 == ln_t:
            return float(k)
        h0 = self._hazard_int(k - 1)
        return (k - 1) + (ln_t - h0) / (h1 - h0)

    # -- exact integral of U_c (per hazard segment) ---------------------------

    def integral_uc_over_x(self, t: float) -> float:
        """Exact ``integral_1^t U_c(x)/x dx`` by trapezoids in s = ln x.

        On s in [hazard(k), hazard(k+1)] the integrand U_c(e^s) is affine, so
        the per-segment trapezoid rule is exact.  Independent of the adaptive
        quadrature used elsewhere; feeds diagnostics and identity tests.
        """
        if not t > 1.0:
            raise ValueError(f"domain is t > 1, got {t}")
        ln_t = math.log(t)
        total = 0.0
        k = self.l_f - 1
        # walk segments [hazard(k), hazard(k+1)] until ln_t is covered;
        # the first segment starts at hazard(l_f - 1) = 0 exactly
        u_left = float(k)
        h_left = 0.0
        while h_left < ln_t:
            h_right = self._hazard_int(k + 1)
            if h_right <= h_left:
                k += 1
                u_left = float(k)
                continue
            if h_right >= ln_t:
                u_right = k + (ln_t - h_left) / (h_right - h_left)
                total += (ln_t - h_left) * (u_left + u_right) / 2.0
                break
            total += (h_right - h_left) * (u_left + (k + 1)) / 2.0
            k += 1
            u_left = float(k)
            h_left = h_right
        return total

    # -- diagnostics ----------------------------------------------------------

    def analytic_diagnostics(self, grid, kappas=(2.0, 10.0)) -> dict:
        """Slow-variation, concavity and integral-domination diagnostics.

        Returns a dict with: ``slow_variation`` mapping kappa -> list of
        U_c(kappa*t)/U_c(t) over the grid; ``concavity_second_differences``
        of s -> U_c(e^s) on an even s-grid; ``integral_ratio`` the values of
        U_c(t) ln U_c(t) / integral_1^t U_c(x)/x dx over the grid.
        """
        grid = sorted(float(t) for t in grid)
        if grid and grid[0] <= 1.0:
            raise ValueError("diagnostic grid must have t > 1")
        out = {"slow_variation": {}, "integral_ratio": [], "concavity_second_differences": []}
        for kap in kappas:
            out["slow_variation"][kap] = [
                self.quantile_Uc(kap * t) / self.quantile_Uc(t) for t in grid
            ]
        for t in grid:
            uc = self.quantile_Uc(t)
            denom = self.integral_uc_over_x(t)
            out["integral_ratio"].append(
                uc * math.log(uc) / denom if uc > 1.0 and denom > 0.0 else math.nan
            )
        if grid:
            s_hi = math.log(grid[-1])
            m = 64
            ds = s_hi / m
            us = [self.quantile_Uc_ln(ds * (i + 1)) for i in range(m)]
            out["concavity_second_differences"] = [
                us[i + 1] - 2.0 * us[i] + us[i - 1] for i in range(1, m - 1)
            ]
        return out
