"""Expectations for the coverage-depth urn model.

Covers the normal approximation to the number of recovered strands after K
reads, inversion to the smallest sufficient K, the single-rate variance
profile and its peak, and the classical coupon-collector / Dixie-cup results
including the general waiting-time integral for arbitrary channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, optimize, special

from .channel import ChannelDistribution, LogNormalParams, mean_p
from .errors import (AccuracyError, DomainError, InfeasibleError, NoPeakError, SizeError,
                     UnreachableTargetError)

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class CodePlan:
    """An [n, m] MDS code plus the per-strand read threshold ``a``."""

    n: int
    m: int
    a: int = 1

    def __post_init__(self):
        if not 1 <= self.m <= self.n:
            raise DomainError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.a < 1:
            raise DomainError(f"retrieval threshold must be >= 1, got {self.a}")

    @property
    def rate(self) -> float:
        return self.m / self.n

    @classmethod
    def from_rate(cls, n: int, rate: float, a: int = 1) -> "CodePlan":
        if not 0 < rate <= 1:
            raise DomainError(f"code rate must lie in (0, 1], got {rate}")
        return cls(n, max(1, int(round(rate * n))), a)


@dataclass(frozen=True)
class RecoveredDistribution:
    mean: float
    variance: float
    K: float
    n: int

    @property
    def alpha(self) -> float:
        return self.K / self.n


def _occupancy_moments(K, rates, exact):
    e = np.exp(-K * rates)
    if exact:
        mean = math.fsum(-np.expm1(K * np.log1p(-rates)))
    else:
        mean = math.fsum(-np.expm1(-K * rates))
    var = math.fsum(e - e * e) - K * math.fsum(rates * e) ** 2
    return mean, var


def recovered_distribution(K: float, channel: ChannelDistribution, exact: bool = False) -> RecoveredDistribution:
    """Mean and variance of the number of strands seen at least once in K reads.

    The mean uses ``1 - exp(-K p_i)`` per strand, or ``1 - (1 - p_i)**K``
    with ``exact=True``; the variance always uses the Poissonized formula.
    A log-normal channel contributes the single rate ``mean_p`` per strand.
    """
    if K < 0:
        raise DomainError(f"K must be >= 0, got {K}")
    mean, var = _occupancy_moments(K, channel.rates(), exact)
    return RecoveredDistribution(mean, var, K, channel.n)


def recovered_distribution_uniform(alpha: float, n: int) -> RecoveredDistribution:
    if alpha < 0 or n < 1:
        raise DomainError("need alpha >= 0 and n >= 1")
    e = math.exp(-alpha)
    return RecoveredDistribution(-n * math.expm1(-alpha), n * (e - e * e - alpha * e * e), alpha * n, n)


@dataclass(frozen=True)
class MinReads:
    K: int
    n: int
    m: int
    expected_recovered: float

    @property
    def alpha(self) -> float:
        return self.K / self.n

    @property
    def mds_length(self) -> float:
        """Code length n*m/E[N] that K reads would fully decode."""
        if self.expected_recovered == 0:
            return math.inf
        return self.n * self.m / self.expected_recovered


def invert_min_reads(channel: ChannelDistribution, target: Union[CodePlan, int],
                     exact: bool = False) -> MinReads:
    """Smallest integer K whose expected recovered-strand count reaches m."""
    if isinstance(target, CodePlan):
        if target.a != 1:
            raise DomainError("read-count inversion is for the noiseless channel (a = 1)")
        if target.n != channel.n:
            raise DomainError("plan and channel disagree on n")
        m = target.m
    else:
        m = int(target)
        if not 0 <= m <= channel.n:
            raise DomainError(f"need 0 <= m <= n, got {m}")
    if m == 0:
        return MinReads(0, channel.n, 0, 0.0)
    rates = channel.rates()
    positive = int(np.count_nonzero(rates > 0))
    if m > positive:
        raise InfeasibleError(f"only {positive} strands have non-zero read probability; cannot recover {m}")
    if m == positive:
        raise UnreachableTargetError(f"expected recovered count stays below {m} for every finite K")

    def mean(K):
        return _occupancy_moments(K, rates, exact)[0]

    hi = 1
    while mean(hi) < m:
        hi *= 2
        if hi > 2**62:
            raise UnreachableTargetError("target not reached before K = 2**62")
    lo = hi // 2  # mean(lo) < m, or lo == 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mean(mid) >= m:
            hi = mid
        else:
            lo = mid
    return MinReads(hi, channel.n, m, mean(hi))


# single-rate variance profile


def variance_profile(K: float, params: LogNormalParams, n: int) -> float:
    if K <= 0:
        raise DomainError("K must be positive")
    p = mean_p(params)
    x = K * p
    e1 = math.exp(-x)
    e2 = e1 * e1
    return e1 - e2 - (n / K) * x * x * e2


def variance_profile_derivative(K: float, params: LogNormalParams, n: int) -> float:
    if K <= 0:
        raise DomainError("K must be positive")
    p = mean_p(params)
    x = K * p
    e1 = math.exp(-x)
    e2 = e1 * e1
    return p * (-e1 + 2 * e2 - n * p * e2 * (1 - 2 * x))


def variance_peak(params: LogNormalParams, n: int) -> float:
    """K at which the variance profile peaks.

    With ``x = K*mean_p`` and ``c = n*mean_p`` the derivative has the sign of
    ``2 - c + 2cx - exp(x)``, which is concave in x and maximal at
    ``x = ln(2c)``. Beyond that point it decreases monotonically, so a local
    maximum of f exists iff it is positive there, and it is unique.
    """
    p = mean_p(params)
    c = n * p
    x_lo = math.log(2 * c) if 2 * c > 1 else 0.0
    k_lo = max(x_lo / p, 1e-9 / p)
    if variance_profile_derivative(k_lo, params, n) <= 0:
        raise NoPeakError(f"variance profile has no interior maximum (n*mean_p = {c:.4g})")
    k_hi = 2 * k_lo + 1 / p
    while variance_profile_derivative(k_hi, params, n) >= 0:
        k_hi *= 2
        if k_hi * p > 1e3:
            raise NoPeakError("no sign change of the derivative found")
    return optimize.brentq(variance_profile_derivative, k_lo, k_hi, args=(params, n),
                           xtol=1e-12 * k_hi, rtol=4 * np.finfo(float).eps, maxiter=500)


# classical results


def harmonic(k: int) -> float:
    if k < 0:
        raise DomainError("harmonic number of a negative integer")
    if k > 10**6:
        raise SizeError("direct harmonic summation limited to k <= 1e6")
    return math.fsum(1.0 / np.arange(1, k + 1)) if k else 0.0


def coupon_expectation_exact(n: int, m: int) -> float:
    """Expected draws to see m of n equally likely coupons: ``n (H_n - H_{n-m})``."""
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got m={m}, n={n}")
    if n > 10**6:
        raise SizeError("direct harmonic summation limited to n <= 1e6")
    return n * math.fsum(1.0 / np.arange(n - m + 1, n + 1))


def coupon_asymptotic(m: int) -> float:
    return m * math.log(m) + EULER_GAMMA * m


def dixie_asymptotic(m: int, a: int) -> float:
    """Leading terms of the Dixie-cup waiting time, ``m ln m + m(a-1) ln ln m``.

    The additive ``m*C_a`` term has no closed form and is left out, so this
    underestimates the true expectation by roughly that amount.
    """
    if m < 3:
        raise DomainError("need m >= 3 for ln ln m")
    if a < 1:
        raise DomainError("need a >= 1")
    return m * math.log(m) + m * (a - 1) * math.log(math.log(m))


# general channels


GENERAL_N_CAP = 500


def _incomplete_survival(r, p, m, a):
    """P(fewer than m strands have a reads) at Poisson time(s) r.

    Each strand's factor is rescaled by exp(-p_i r); with sum(p) = 1 this
    cancels the exp(-r) weight, leaving ``A_i + v B_i`` with A_i the Poisson
    CDF at a-1 and B_i = 1 - A_i. Coefficients of v^q, q < m, are carried
    through the product; higher ones never feed back into them.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    coef = np.zeros((r.size, m))
    coef[:, 0] = 1.0
    for pi in p:
        lam = pi * r
        A = special.pdtr(a - 1, lam)[:, None]
        B = special.pdtrc(a - 1, lam)[:, None]
        shifted = np.zeros_like(coef)
        shifted[:, 1:] = coef[:, :-1]
        coef = coef * A + shifted * B
    return coef.sum(axis=1)


def _tail_integral_bound(r, p, a):
    # integral over [r, inf) of sum_i P(Poisson(p_i s) < a) ds
    return float(sum(special.pdtr(j, p * r) @ (1.0 / p) for j in range(a)))


def expected_K_general(channel: ChannelDistribution, plan: CodePlan, cap: int = GENERAL_N_CAP,
                       rtol: float = 1e-9, tail_mass: float = 1e-12) -> float:
    """Expected reads until m of n strands have a reads, for arbitrary p.

    Integrates the survival probability of the Poissonized waiting time
    ``sum_{q<m} int_0^inf [v^q] prod_i (e_{a-1}(p_i r) + v(e^{p_i r} - e_{a-1}(p_i r))) e^{-r} dr``
    over ``[0, r_max]``, where the mass beyond ``r_max`` is below ``tail_mass``.
    """
    p = channel.probabilities()
    if plan.n != p.size:
        raise DomainError("plan and channel disagree on n")
    if np.any(p <= 0):
        raise DomainError("all strand probabilities must be positive")
    if p.size > cap:
        raise SizeError(f"n = {p.size} exceeds the cap of {cap} for the general expectation")
    m, a = plan.m, plan.a
    r_max = float(m * a)
    while _tail_integral_bound(r_max, p, a) > tail_mass:
        r_max *= 2
    # panel edges at multiples of the typical waiting scale keep quad adaptive
    edges = np.linspace(0.0, r_max, 1 + min(64, max(4, int(r_max / (m * a)) * 4)))
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(lambda r: _incomplete_survival(r, p, m, a)[0], lo, hi,
                                epsabs=tail_mass, epsrel=rtol, limit=200)
        total += val
        err += e
    err += tail_mass
    if err > max(1e3 * rtol * total, 1e-8):
        raise AccuracyError(f"quadrature error {err:.3g} too large for estimate {total:.6g}",
                            estimate=total, error_bound=err)
    return total
