"""Seeded urn simulation of sequential sequencing reads.

Each trial throws reads one at a time into ``n`` strand urns according to a
channel and records the first read count at which ``m`` strands hold at
least ``a`` reads. Trial ``i`` draws from its own Philox stream keyed by
``(seed, i)``, so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .analytic import CodePlan
from .channel import ChannelDistribution, expected_proportions, sample_pcr_model
from .errors import DegenerateResultError, DomainError

CHANNEL_KEY = 0
TRIAL_KEY = 1


class AliasTable:
    """Walker/Vose alias table for O(1) categorical draws."""

    def __init__(self, p):
        p = np.asarray(p, dtype=float)
        n = p.size
        if n == 0:
            raise DomainError("empty probability vector")
        q = (p * (n / p.sum())).tolist()
        alias = list(range(n))
        small = [i for i, v in enumerate(q) if v < 1.0]
        large = [i for i, v in enumerate(q) if v >= 1.0]
        while small and large:
            s = small.pop()
            big = large[-1]
            alias[s] = big
            q[big] = (q[big] + q[s]) - 1.0
            if q[big] < 1.0:
                small.append(large.pop())
        # leftovers are 1 up to rounding
        for i in large + small:
            q[i] = 1.0
        self.n = n
        self.prob = np.array(q)
        self.alias = np.array(alias, dtype=np.int64)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # one uniform per draw: integer part picks the column, fraction the coin.
        # Keeps the draw sequence independent of how it is chunked.
        x = rng.random(size) * self.n
        j = np.minimum(x.astype(np.int64), self.n - 1)
        return np.where(x - j < self.prob[j], j, self.alias[j])


@dataclass(frozen=True)
class PcrSampler:
    """Random PCR model; each draw yields the expected proportion vector."""

    n: int
    t: int
    copy_dist: str = "lognormal"
    copy_mean: float = 100.0
    copy_spread: float = 0.5
    r_low: float = 0.80
    r_high: float = 1.10

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        model = sample_pcr_model(self.n, self.t, rng, self.copy_dist, self.copy_mean,
                                 self.copy_spread, self.r_low, self.r_high)
        return expected_proportions(model)


ChannelSpec = Union[ChannelDistribution, PcrSampler]


@dataclass(frozen=True)
class McConfig:
    channel: ChannelSpec
    plan: CodePlan
    trials: int
    seed: int
    resample_p_per_trial: bool = True
    max_reads_cap: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.channel.n != self.plan.n:
            raise DomainError(f"channel has {self.channel.n} strands, plan expects {self.plan.n}")
        if self.max_reads_cap is None:
            object.__setattr__(self, "max_reads_cap", 1000 * self.plan.n * self.plan.a)
        if self.max_reads_cap < self.plan.n * self.plan.a:
            raise DomainError("max_reads_cap must be at least n*a")

    @property
    def redraws(self) -> bool:
        if isinstance(self.channel, PcrSampler):
            return self.resample_p_per_trial
        return self.resample_p_per_trial and self.channel.kind == "lognormal"


@dataclass
class McResult:
    k_samples: np.ndarray
    censored_count: int
    trials: int
    n: int
    mean: float
    std_err: float
    max: int
    quantiles: dict = field(default_factory=dict)

    @property
    def alpha_max(self) -> float:
        """Largest per-trial read count over ``n`` (the sim-max coverage depth)."""
        return self.max / self.n

    @property
    def alpha_mean(self) -> float:
        return self.mean / self.n

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "completed": int(self.k_samples.size),
            "censored": self.censored_count,
            "n": self.n,
            "mean": self.mean,
            "std_err": self.std_err,
            "max": self.max,
            "alpha_mean": self.alpha_mean,
            "alpha_max": self.alpha_max,
            "q05": self.quantiles[0.05],
            "q50": self.quantiles[0.5],
            "q95": self.quantiles[0.95],
        }


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(TRIAL_KEY, index))))


def channel_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(CHANNEL_KEY,))))


def _draw_p(spec: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec, PcrSampler):
        return spec.draw(rng)
    return spec.realize(rng).probabilities()


def fixed_probabilities(config: McConfig) -> np.ndarray:
    """The channel realization shared by all trials when not redrawing."""
    return _draw_p(config.channel, channel_rng(config.seed))


def run_trial(p, plan: CodePlan, rng: np.random.Generator, cap: Optional[int] = None) -> Optional[int]:
    """Reads needed until ``plan.m`` strands have ``plan.a`` reads; None if ``cap`` is hit."""
    table = p if isinstance(p, AliasTable) else AliasTable(p)
    if table.n != plan.n:
        raise DomainError("probability vector length does not match plan")
    m, a = plan.m, plan.a
    if cap is None:
        cap = 1000 * plan.n * a
    size = min(max(2 * m * a, 256), cap)
    draws = table.sample(rng, size)
    while True:
        counts = np.bincount(draws, minlength=table.n)
        done = np.flatnonzero(counts >= a)
        if done.size >= m:
            break
        if draws.size >= cap:
            return None
        extra = min(draws.size, cap - draws.size)
        draws = np.concatenate([draws, table.sample(rng, extra)])
    order = np.argsort(draws, kind="stable")
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    finish = order[starts[done] + a - 1]
    return int(np.partition(finish, m - 1)[m - 1]) + 1


def _trial_block(config: McConfig, indices, fixed_table):
    out = []
    for i in indices:
        rng = trial_rng(config.seed, i)
        table = AliasTable(_draw_p(config.channel, rng)) if fixed_table is None else fixed_table
        out.append(run_trial(table, config.plan, rng, config.max_reads_cap))
    return out


def _map_trials(config: McConfig, fn):
    fixed = None if config.redraws else AliasTable(fixed_probabilities(config))
    idx = range(config.trials)
    if config.workers <= 1 or config.trials == 1:
        return fn(config, idx, fixed)
    nblocks = min(config.trials, 4 * config.workers)
    blocks = [idx[b::nblocks] for b in range(nblocks)]
    results = [None] * config.trials
    with ProcessPoolExecutor(config.workers) as pool:
        for block, vals in zip(blocks, pool.map(fn, [config] * nblocks, blocks, [fixed] * nblocks)):
            for i, v in zip(block, vals):
                results[i] = v
    return results


def run_experiment(config: McConfig) -> McResult:
    raw = _map_trials(config, _trial_block)
    done = np.array([k for k in raw if k is not None], dtype=np.int64)
    censored = config.trials - done.size
    if done.size == 0:
        raise DegenerateResultError(f"all {config.trials} trials hit the cap of {config.max_reads_cap} reads")
    if censored:
        warnings.warn(f"{censored} of {config.trials} trials censored at {config.max_reads_cap} reads")
    std_err = float(done.std(ddof=1) / math.sqrt(done.size)) if done.size > 1 else math.nan
    qs = np.quantile(done, [0.05, 0.5, 0.95])
    return McResult(
        k_samples=done,
        censored_count=int(censored),
        trials=config.trials,
        n=config.plan.n,
        mean=float(done.mean()),
        std_err=std_err,
        max=int(done.max()),
        quantiles={0.05: float(qs[0]), 0.5: float(qs[1]), 0.95: float(qs[2])},
    )


def _occupancy_block(config: McConfig, indices, fixed_table, K):
    a = config.plan.a
    out = []
    for i in indices:
        rng = trial_rng(config.seed, i)
        table = AliasTable(_draw_p(config.channel, rng)) if fixed_table is None else fixed_table
        counts = np.bincount(table.sample(rng, K), minlength=table.n)
        out.append(int(np.count_nonzero(counts >= a)))
    return out


class _Occupancy:
    # picklable partial for the process pool
    def __init__(self, K):
        self.K = K

    def __call__(self, config, indices, fixed):
        return _occupancy_block(config, indices, fixed, self.K)


def occupancy_counts(K: int, config: McConfig) -> np.ndarray:
    """Per-trial number of strands holding at least ``a`` reads after exactly K reads."""
    if K < 0:
        raise DomainError("K must be >= 0")
    return np.array(_map_trials(config, _Occupancy(int(K))), dtype=np.int64)


@dataclass(frozen=True)
class SuccessEstimate:
    prob: float
    std_err: float
    trials: int


def success_probability_at(K: int, config: McConfig) -> SuccessEstimate:
    """Fraction of trials that decode (m strands with a reads) within exactly K reads."""
    hits = occupancy_counts(K, config) >= config.plan.m
    prob = float(hits.mean())
    return SuccessEstimate(prob, math.sqrt(prob * (1 - prob) / config.trials), config.trials)
