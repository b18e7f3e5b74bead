"""Redundancy and entropy quantities for envelope classes.

Everything here is deterministic numerics on an ``EnvelopeDistribution``:
the minimax-redundancy integral, the change-of-variable identity that links
it to the tail of the envelope, the sub-exponential closed form, metric
entropy bounds, the expected Elias-length bound and the per-sequence
pointwise redundancy bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .envelope import EnvelopeDistribution

__all__ = [
    "RedundancyReport",
    "adaptive_simpson",
    "redundancy_integral",
    "identity_rhs",
    "subexp_asymptote",
    "entropy_bounds",
    "elias_length_bound",
    "pointwise_bound",
    "harmonic",
    "log_unit_ball_volume",
]

LOG2E = math.log2(math.e)
EULER_GAMMA = 0.5772156649015328606


@dataclass(frozen=True)
class RedundancyReport:
    """Theory numbers for one horizon n."""

    n: float
    integral_bits: float
    asymptote_bits: Optional[float]
    elias_bound_bits: float
    entropy_bounds_nats: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.integral_bits < 0.0:
            raise ValueError("integral_bits must be >= 0")
        if self.entropy_bounds_nats is not None:
            lo, hi = self.entropy_bounds_nats
            if lo > hi:
                raise ValueError("entropy lower bound exceeds upper bound")


def adaptive_simpson(f, a: float, b: float, rel_tol: float = 1e-8,
                     max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with a relative-error target.

    Plain recursive bisection with the 15x Richardson acceptance test; the
    absolute budget is distributed over subintervals, with a floor so that
    integrals through zero still terminate.
    """
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = max(abs(whole) * rel_tol, 1e-300)

    def rec(a, fa, m, fm, b, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        half = 0.5 * tol
        return rec(a, fa, lm, flm, m, fm, left, half, depth + 1) + rec(
            m, fm, rm, frm, b, fb, right, half, depth + 1
        )

    return rec(a, fa, m, fm, b, fb, whole, tol, 0)


def redundancy_integral(env: EnvelopeDistribution, n: float,
                        rel_tol: float = 1e-8) -> float:
    """log2(e) * integral_1^n U_c(x)/(2x) dx, in bits.

    Substitutes s = ln x and runs adaptive Simpson on s -> U_c(e^s)/2; the
    integrand is concave and piecewise affine between hazard breakpoints, so
    the quadrature converges quickly.  Kept independent of the exact
    per-segment evaluation in :meth:`EnvelopeDistribution.integral_uc_over_x`
    so the two can cross-check each other.
    """
    if not n > 1.0:
        raise ValueError(f"redundancy integral needs n > 1, got {n}")
    ln_n = math.log(n)
    val = adaptive_simpson(lambda s: env.quantile_Uc_ln(s) if s > 0.0 else float(env.l_f - 1),
                           0.0, ln_n, rel_tol=rel_tol)
    return LOG2E * 0.5 * val


def identity_rhs(env: EnvelopeDistribution, t: float) -> float:
    """integral_0^{U_c(t)} ln(t * tail_c(x)) / 2 dx, in nats.

    The integrand is affine in x on every hazard segment (ln tail_c = -hazard
    is piecewise linear), so each segment is integrated exactly by the
    trapezoid rule.  Below l_f - 1 the tail is 1 and the integrand is
    constant ln(t)/2.
    """
    if not t > 1.0:
        raise ValueError(f"identity domain is t > 1, got {t}")
    ln_t = math.log(t)
    upper = env.quantile_Uc_ln(ln_t)
    lo = env.l_f - 1
    total = 0.0
    if upper <= lo:
        return 0.5 * ln_t * upper
    if lo > 0:
        total += 0.5 * ln_t * lo
    k = lo
    while k < upper:
        right = min(k + 1.0, upper)
        g_left = ln_t - env.hazard(k)
        g_right = ln_t - env.hazard(right)
        total += (right - k) * (g_left + g_right) / 4.0
        k += 1.0
    return total


def subexp_asymptote(alpha: float, beta: float, n: float) -> float:
    """alpha/(2(alpha+1)) * beta * ln(2)^(1/alpha) * log2(n)^(1+1/alpha), bits."""
    if alpha < 1.0 or beta <= 0.0:
        raise ValueError("need alpha >= 1 and beta > 0")
    if not n > 1.0:
        raise ValueError("need n > 1")
    log2n = math.log2(n)
    return (
        alpha / (2.0 * (alpha + 1.0))
        * beta
        * math.log(2.0) ** (1.0 / alpha)
        * log2n ** (1.0 + 1.0 / alpha)
    )


def log_unit_ball_volume(m: int) -> float:
    """ln Vol(B_m) for the m-dimensional Euclidean unit ball.

    Standard formula pi^(m/2) / Gamma(m/2 + 1) via log-gamma.
    """
    if m < 0:
        raise ValueError("dimension must be >= 0")
    return 0.5 * m * math.log(math.pi) - math.lgamma(0.5 * m + 1.0)


def entropy_bounds(env: EnvelopeDistribution, eps: float) -> Tuple[float, float]:
    """Volume-comparison bounds on the Hellinger metric entropy, in nats.

    With N = U(16/eps^2) and l = l_f + 1:

    upper = sum_{k=l}^{N} ln(8 sqrt(tail(k-1)) / eps) - ln Vol(B_N)
            + (N - l_f)/sqrt(1 - e^-b) + l_f ln(8/eps)
            + sum_{k=1}^{l_f} ln(min(1, sqrt(f(k))) + eps/4)
    lower = sum_{k=l}^{N} ln(sqrt(tail(k-1) (1 - e^-b)) / eps)
            - ln Vol(B_{N - l_f})

    The mass values entering the head product are capped at 1: the packing
    lives inside the unit ball, so coordinates never exceed 1 even when the
    raw envelope function does.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0,1), got {eps}")
    n_eps = env.quantile_U(16.0 / eps**2)
    l_f = env.l_f
    if n_eps <= l_f:
        raise ValueError(
            f"eps={eps} too coarse: U(16/eps^2)={n_eps} does not exceed l_f={l_f}"
        )
    ln_eps = math.log(eps)
    one_m_eb = -math.expm1(-env.b)

    upper = 0.0
    lower = 0.0
    for k in range(l_f + 1, n_eps + 1):
        half_ln_tail = 0.5 * env.log_tail(k - 1)
        upper += math.log(8.0) + half_ln_tail - ln_eps
        lower += half_ln_tail + 0.5 * math.log(one_m_eb) - ln_eps
    upper -= log_unit_ball_volume(n_eps)
    lower -= log_unit_ball_volume(n_eps - l_f)
    upper += (n_eps - l_f) / math.sqrt(one_m_eb)
    upper += l_f * (math.log(8.0) - ln_eps)
    for k in range(1, l_f + 1):
        sqrt_f = math.exp(min(0.0, 0.5 * env.envelope.log_mass(k)))
        upper += math.log(sqrt_f + eps / 4.0)
    return lower, upper


def harmonic(n: int) -> float:
    """n-th harmonic number; exact summation up to 10^6, Euler-Maclaurin beyond."""
    if n < 1:
        raise ValueError(f"harmonic needs n >= 1, got {n}")
    if n <= 1_000_000:
        return math.fsum(1.0 / i for i in range(1, n + 1))
    inv = 1.0 / n
    inv2 = inv * inv
    return (
        math.log(n)
        + EULER_GAMMA
        + 0.5 * inv
        - inv2 / 12.0
        + inv2 * inv2 / 120.0
    )


def elias_length_bound(env: EnvelopeDistribution, n: int, rho: float = 2.0) -> float:
    """(2 log2 e + rho) * (U_c(e^{H_n}) + 1): expected record-stream bits, in bits."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return (2.0 * LOG2E + rho) * (env.quantile_Uc_ln(harmonic(n)) + 1.0)


def pointwise_bound(seq: Sequence[int]) -> float:
    """Per-sequence redundancy bound, in nats.

    With M_i the running maxima and i0 = max(1, floor(M_n / 4)):
    M_n (ln M_n + 10)/2 + (ln n)/2 + sum_{i=i0}^{n-1} M_i / (2i + 1).
    """
    if len(seq) == 0:
        raise ValueError("sequence must be non-empty")
    n = len(seq)
    m = 0
    maxima = []
    for x in seq:
        if x < 1:
            raise ValueError(f"symbols must be >= 1, got {x}")
        if x > m:
            m = x
        maxima.append(m)
    m_n = maxima[-1]
    i0 = max(1, m_n // 4)
    tail_sum = math.fsum(maxima[i - 1] / (2.0 * i + 1.0) for i in range(i0, n))
    return 0.5 * m_n * (math.log(m_n) + 10.0) + 0.5 * math.log(n) + tail_sum
