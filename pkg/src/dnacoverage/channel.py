"""Channel probability distributions and the post-PCR log-normal channel model.

A channel assigns each designed strand the probability that a single
sequencing read comes from it. After ``t`` PCR cycles strand ``i`` has
expected abundance ``c_i * (1 + r_i)**t``; normalising gives the per-read
proportions, whose spread across strands is summarised by a log-normal law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .errors import DomainError, InsufficientDataError

SUM_TOL = 1e-9


@dataclass(frozen=True)
class LogNormalParams:
    """Location/scale of ``ln(p)``; ``p ~ LN(mu, sigma**2)``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise DomainError(f"non-finite log-normal parameters ({self.mu}, {self.sigma})")
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")


# Fitted proportion distributions for 10/30/60 PCR cycles; the "sample" column
# is the direct fit of one dataset, "pop" the MLE population estimate.
PRESETS = {
    "pcr10-sample": LogNormalParams(-9.71, 0.86),
    "pcr10-pop": LogNormalParams(-9.72, 0.74),
    "pcr30-sample": LogNormalParams(-9.91, 0.98),
    "pcr30-pop": LogNormalParams(-9.86, 0.96),
    "pcr60-sample": LogNormalParams(-10.38, 1.11),
    "pcr60-pop": LogNormalParams(-10.25, 1.38),
}
PRESET_NAMES = tuple(PRESETS) + ("uniform",)
DATASET_STRANDS = 11520


def preset_params(name: str, n: int = DATASET_STRANDS) -> LogNormalParams:
    """Look up a named parameter set. ``uniform`` is the sigma=0 point mass at 1/n."""
    if name == "uniform":
        return LogNormalParams(-math.log(n), 0.0)
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None


@dataclass(frozen=True)
class PcrModel:
    c: np.ndarray
    r: np.ndarray
    t: int

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if c.ndim != 1 or c.shape != r.shape or c.size == 0:
            raise DomainError("c and r must be non-empty vectors of equal length")
        if np.any(~np.isfinite(c)) or np.any(c <= 0):
            raise DomainError("initial copy numbers must be positive")
        if np.any(~np.isfinite(r)) or np.any(r <= -1):
            raise DomainError("amplification efficiencies must exceed -1")
        if int(self.t) != self.t or self.t < 0:
            raise DomainError(f"cycle count must be a non-negative integer, got {self.t}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", int(self.t))

    @property
    def n(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class ChannelDistribution:
    """Per-read strand sampling law.

    Use the :meth:`uniform`, :meth:`lognormal` and :meth:`empirical`
    constructors rather than the raw initializer.
    """

    kind: str
    n: int
    params: Optional[LogNormalParams] = None
    p: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("uniform", "lognormal", "empirical"):
            raise DomainError(f"unknown channel kind {self.kind!r}")
        if self.n < 1:
            raise DomainError("strand count must be >= 1")
        if self.kind == "lognormal" and self.params is None:
            raise DomainError("lognormal channel needs params")
        if self.kind == "empirical":
            p = np.asarray(self.p, dtype=float)
            if p.ndim != 1 or p.size != self.n:
                raise DomainError("probability vector has wrong shape")
            if np.any(~np.isfinite(p)) or np.any(p < 0):
                raise DomainError("probabilities must be finite and non-negative")
            if abs(math.fsum(p) - 1.0) > SUM_TOL:
                raise DomainError(f"probabilities sum to {math.fsum(p)!r}, not 1")
            p.setflags(write=False)
            object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, n: int) -> "ChannelDistribution":
        return cls("uniform", int(n))

    @classmethod
    def lognormal(cls, params: LogNormalParams, n: int) -> "ChannelDistribution":
        return cls("lognormal", int(n), params=params)

    @classmethod
    def empirical(cls, p) -> "ChannelDistribution":
        p = np.asarray(p, dtype=float)
        return cls("empirical", p.size, p=p)

    def rates(self) -> np.ndarray:
        """Per-strand read rates.

        For the log-normal variant every strand gets the common rate
        ``mean_p(params)``, so the rates need not sum to one.
        """
        if self.kind == "uniform":
            return np.full(self.n, 1.0 / self.n)
        if self.kind == "lognormal":
            return np.full(self.n, mean_p(self.params))
        return self.p

    def probabilities(self) -> np.ndarray:
        """A normalised probability vector, which a log-normal channel does not have."""
        if self.kind == "lognormal":
            raise DomainError("lognormal channel has no fixed probability vector; call realize()")
        return self.rates()

    def realize(self, rng: np.random.Generator) -> "ChannelDistribution":
        """Draw a concrete empirical channel.

        Log-normal channels get n i.i.d. LN(mu, sigma^2) weights divided by
        their sum; other kinds are returned unchanged.
        """
        if self.kind != "lognormal":
            return self
        return ChannelDistribution.empirical(lognormal_weights(self.params, self.n, rng))


def lognormal_weights(params: LogNormalParams, n: int, rng: np.random.Generator) -> np.ndarray:
    w = rng.lognormal(params.mu, params.sigma, size=n)
    return w / w.sum()


def expected_copy_number(c_i: float, r_i: float, t: int) -> float:
    if c_i <= 0 or r_i <= -1 or t < 0:
        raise DomainError(f"invalid PCR inputs c={c_i}, r={r_i}, t={t}")
    try:
        v = c_i * (1.0 + r_i) ** t
    except OverflowError:
        v = math.inf
    if not math.isfinite(v):
        raise OverflowError(f"copy number overflows after {t} cycles")
    return v


def expected_proportions(model: PcrModel) -> np.ndarray:
    # log-space with max subtraction: (1+r)^t overflows for t >~ 700
    logv = np.log(model.c) + model.t * np.log1p(model.r)
    w = np.exp(logv - logv.max())
    return w / w.sum()


def proportion_moments(p) -> tuple[float, float]:
    """Mean and population variance across strands."""
    p = np.asarray(p, dtype=float)
    return float(p.mean()), float(p.var())


def lognormal_from_moments(mean_p: float, var_p: float) -> LogNormalParams:
    if not mean_p > 0:
        raise DomainError(f"mean must be positive, got {mean_p}")
    if var_p < 0:
        raise DomainError(f"variance must be non-negative, got {var_p}")
    s2 = math.log1p(var_p / mean_p**2)
    return LogNormalParams(math.log(mean_p) - 0.5 * s2, math.sqrt(s2))


def lognormal_moments(params: LogNormalParams) -> tuple[float, float]:
    s2 = params.sigma**2
    mean = math.exp(params.mu + s2 / 2)
    return mean, math.expm1(s2) * mean**2


def channel_from_pcr(model: PcrModel) -> ChannelDistribution:
    """Moment-matched log-normal channel for a PCR model.

    A single strand (or identical strands) has zero spread and yields the
    degenerate sigma = 0 channel.
    """
    mean, var = proportion_moments(expected_proportions(model))
    return ChannelDistribution.lognormal(lognormal_from_moments(mean, var), model.n)


def mean_p(params: LogNormalParams) -> float:
    return math.exp(params.mu + params.sigma**2 / 2)


def mean_inv_p(params: LogNormalParams) -> float:
    return math.exp(-params.mu + params.sigma**2 / 2)


@dataclass(frozen=True)
class FitReport:
    params: LogNormalParams
    n_samples: int
    ks_statistic: float
    log_domain_mean: float
    log_domain_var: float
    n_strands: Optional[int] = None
    n_dropped: int = 0

    def as_dict(self) -> dict:
        d = {
            "mu": self.params.mu,
            "sigma": self.params.sigma,
            "n_samples": self.n_samples,
            "ks_statistic": self.ks_statistic,
            "log_domain_mean": self.log_domain_mean,
            "log_domain_var": self.log_domain_var,
        }
        if self.n_strands is not None:
            d["n_strands"] = self.n_strands
            d["n_dropped"] = self.n_dropped
        return d


def mle_fit(proportions) -> FitReport:
    """Maximum-likelihood log-normal fit with a log-domain KS statistic.

    The variance estimate divides by the sample size, not ``size - 1``.
    """
    x = np.asarray(proportions, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {x.size}")
    if np.any(~(x > 0)):
        raise DomainError("log-normal fit requires strictly positive observations")
    logs = np.log(x)
    mu = float(logs.mean())
    var = float(np.mean((logs - mu) ** 2))
    sigma = math.sqrt(var)
    # relative floor: a constant sample leaves only rounding noise in var
    if sigma <= 1e-12 * max(1.0, abs(mu)):
        sigma, var, ks = 0.0, 0.0, 0.0
    else:
        ks = float(stats.kstest(logs, "norm", args=(mu, sigma)).statistic)
    return FitReport(LogNormalParams(mu, sigma), int(x.size), ks, mu, var)


# synthesis copy-number samplers for Problem-1 style simulations


def sample_copy_numbers(n: int, rng: np.random.Generator, dist: str = "lognormal",
                        mean: float = 100.0, spread: float = 0.5) -> np.ndarray:
    """Draw initial copy numbers.

    ``spread`` is sigma of ln(c) for ``lognormal`` and the coefficient of
    variation for ``negbin``; it is ignored for ``constant``.
    """
    if mean <= 0:
        raise DomainError("mean copy number must be positive")
    if dist == "constant":
        return np.full(n, float(mean))
    if dist == "lognormal":
        return rng.lognormal(math.log(mean) - spread**2 / 2, spread, size=n)
    if dist == "negbin":
        if spread <= 0:
            return np.full(n, float(mean))
        # var = mean + mean^2/k  ->  cv^2 = 1/mean + 1/k
        inv_k = spread**2 - 1.0 / mean
        if inv_k <= 0:
            return rng.poisson(mean, size=n).clip(min=1).astype(float)
        k = 1.0 / inv_k
        return rng.negative_binomial(k, k / (k + mean), size=n).clip(min=1).astype(float)
    raise DomainError(f"unknown copy-number distribution {dist!r}")


def sample_efficiencies(n: int, rng: np.random.Generator, low: float = 0.80,
                        high: float = 1.10) -> np.ndarray:
    if not -1 < low <= high:
        raise DomainError(f"bad efficiency bounds [{low}, {high}]")
    return rng.uniform(low, high, size=n)


def sample_pcr_model(n: int, t: int, rng: np.random.Generator, copy_dist: str = "lognormal",
                     copy_mean: float = 100.0, copy_spread: float = 0.5,
                     r_low: float = 0.80, r_high: float = 1.10) -> PcrModel:
    c = sample_copy_numbers(n, rng, copy_dist, copy_mean, copy_spread)
    r = sample_efficiencies(n, rng, r_low, r_high)
    return PcrModel(c, r, t)
