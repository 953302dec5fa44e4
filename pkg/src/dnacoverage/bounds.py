"""Lower bounds on read counts for the noisy (a > 1) log-normal channel.

Both bounds scale ``E[1/p] = exp(-mu + sigma^2/2)``. Natural logs are used
throughout; the ``log 2`` factor in K2 is the constant ``ln 2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special, stats

from .analytic import CodePlan
from .channel import LogNormalParams, mean_inv_p, mean_p
from .errors import DomainError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class BoundReport:
    k_reads: float
    alpha: float
    kind: str
    prob_bound: Optional[float] = None
    inputs: dict = field(default_factory=dict)
    flags: tuple = ()

    def as_dict(self) -> dict:
        d = {"kind": self.kind, "k_reads": self.k_reads, "alpha": self.alpha,
             "prob_bound": self.prob_bound, "flags": list(self.flags)}
        d.update(self.inputs)
        return d


def _echo(params, plan, **extra):
    d = {"mu": params.mu, "sigma": params.sigma, "n": plan.n, "m": plan.m, "a": plan.a, "R": plan.rate}
    d.update(extra)
    return d


def _check_rate(plan):
    if plan.m >= plan.n:
        raise DomainError(f"code rate must be < 1, got R = {plan.rate}")


def k1_lower(params: LogNormalParams, plan: CodePlan, beta: float) -> BoundReport:
    """Read count below which decoding succeeds with probability at most
    ``exp(-beta) * (1 + m/(n-m))``.

    The bound is stated for beta > 1 and a > 1; smaller values are evaluated
    anyway and flagged. A negative bracket is clamped to zero and flagged.
    """
    _check_rate(plan)
    if beta < 0 or not math.isfinite(beta):
        raise DomainError(f"beta must be finite and >= 0, got {beta}")
    flags = []
    if plan.a == 1:
        warnings.warn("K1 is stated for a > 1; evaluating with a = 1")
        flags.append("a-below-hypothesis")
    if beta <= 1:
        flags.append("beta-below-hypothesis")
    k = mean_inv_p(params) * (-math.log1p(-plan.rate) - beta)
    if k < 0:
        k = 0.0
        flags.append("clamped")
    prob = math.exp(-beta) * (1 + plan.m / (plan.n - plan.m))
    return BoundReport(k, k / plan.n, "K1", prob, _echo(params, plan, beta=beta), tuple(flags))


def k2_factor(a: int, rate: float) -> float:
    """Bracket of K2 divided by E[1/p]: an upper estimate of ``(a-1) * -W_{-1}(-x)``."""
    L = -math.log1p(-rate)
    return (a - 1) + LN2 * L + (a - 1) * math.sqrt(2 * LN2 * L / (a - 1))


def k2_lower(params: LogNormalParams, plan: CodePlan) -> BoundReport:
    _check_rate(plan)
    if plan.a <= 1:
        raise DomainError("K2 requires a retrieval threshold a > 1")
    k = mean_inv_p(params) * k2_factor(plan.a, plan.rate)
    return BoundReport(k, k / plan.n, "K2", None, _echo(params, plan))


def lemma1_condition(K: float, params: LogNormalParams, plan: CodePlan) -> bool:
    """Sufficient condition for at most n - m strands having fewer than a reads in expectation."""
    if plan.a <= 1:
        raise DomainError("the condition needs a > 1")
    if not K > (plan.a - 1) * mean_inv_p(params):
        return False
    y = K * mean_p(params) / (plan.a - 1)
    rhs = math.exp(-1) * (1 - plan.rate) ** (LN2 / (plan.a - 1))
    return y * math.exp(-y) <= rhs


def binomial_tail_q(K: int, p: float, a: int) -> float:
    """P(Binomial(K, p) <= a-1), i.e. a strand still has fewer than a reads."""
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    if a < 1:
        raise DomainError("a must be >= 1")
    if a - 1 >= K:
        return 1.0
    j = np.arange(a)
    logs = stats.binom.logpmf(j, K, p)
    return float(min(1.0, math.exp(special.logsumexp(logs))))


def kl_divergence(x: float, y: float) -> float:
    """Binary KL divergence D(x || y) in bits, with 0 log 0 = 0."""
    if not 0 <= x <= 1:
        raise DomainError("x must lie in [0, 1]")
    if not 0 <= y <= 1:
        raise DomainError("y must lie in [0, 1]")
    total = 0.0
    for u, v in ((x, y), (1 - x, 1 - y)):
        if u > 0:
            if v == 0:
                return math.inf
            total += u * math.log2(u / v)
    return max(total, 0.0)


def chernoff_tail_q(K: int, p: float, a: int) -> float:
    """Chernoff bound on :func:`binomial_tail_q`, ``2**(-K * D((a-1)/K || p))``.

    With D in bits this is ``exp(-K D ln 2)``. Returns 1 when (a-1)/K >= p,
    where the lower-tail bound is vacuous.
    """
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    if a - 1 >= K:
        return 1.0
    x = (a - 1) / K
    if x >= p:
        return 1.0
    return math.exp(-K * kl_divergence(x, p) * LN2)


def uniform_sandwich(n: int, plan: CodePlan, epsilon: float) -> tuple[float, float]:
    """Bracket on E[K_a/n] for the uniform channel.

    The O(1/n^2) correction of the lower end is dropped.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    if n < 3:
        raise DomainError("need n >= 3")
    _check_rate(plan)
    L = -math.log1p(-plan.rate)
    upper = (L + plan.a * math.log(math.log(n)) + 2 * math.log(plan.a + 1)) * (1 + 2 * epsilon)
    return L, upper
