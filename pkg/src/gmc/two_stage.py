"""The two-stage median-of-means estimator with adaptive sample size.

Stage one spends ``n1 = k*m`` draws on ``k`` block estimates of a central
moment and keeps their median ``r_hat``.  Stage two draws
``n2 = k' * m'`` fresh values with ``m' = max(ceil(eta * r_hat^s), 1)`` and
returns the median of the ``k'`` block means.

A *sampler* is any callable ``draw(stream, n)`` returning ``n`` i.i.d. reals
as a 1-d array; all randomness must come from ``stream``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .distributions import ConeSpec, Distribution
from .estimators import block_statistic, median, median_of_block_statistic
from .streams import DEFAULT_SEED, Stream, derive_stream
from .tuner import Accuracy, StagePlan, plan_default

Sampler = Callable[[Stream, int], np.ndarray]

# stage-two blocks above this many draws are accumulated chunk by chunk
_CHUNK = 1 << 22


@dataclass(frozen=True)
class RunRecord:
    estimate: float
    r_hat: float
    m_prime: int
    n1: int
    n2: int
    total_cost: int
    master_seed: int
    lane_index: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d)


class CountingSampler:
    """Wraps a sampler and counts how many values it has produced."""

    def __init__(self, draw: Sampler):
        self.draw = draw
        self.count = 0
        self.calls = []

    def __call__(self, stream: Stream, n: int) -> np.ndarray:
        out = np.asarray(self.draw(stream, n), dtype=float)
        self.count += out.size
        self.calls.append(n)
        return out


def distribution_sampler(dist: Distribution) -> Sampler:
    def draw(stream, n):
        return dist.sample(stream, n)

    return draw


def _take(draw: Sampler, stream: Stream, n: int) -> np.ndarray:
    x = np.asarray(draw(stream, n), dtype=float).ravel()
    if x.size != n:
        raise ValueError(f"sampler returned {x.size} values, expected {n}")
    return x


def _median_of_means(draw: Sampler, stream: Stream, k: int, m: int) -> float:
    if k * m <= _CHUNK:
        return median_of_block_statistic(_take(draw, stream, k * m), k, m, "mean")
    means = []
    for _ in range(k):
        parts = []
        left = m
        while left:
            n = min(left, _CHUNK)
            parts.append(float(np.sum(_take(draw, stream, n))))
            left -= n
        means.append(math.fsum(parts) / m)
    return median(means)


def run(plan: StagePlan, draw: Sampler, stream: Stream) -> RunRecord:
    """Execute both stages, consuming exactly ``k*m + k'*m'`` draws in order."""
    x1 = _take(draw, stream, plan.n1)
    stat = block_statistic(plan.statistic, plan.moment_order)
    r_hat = median(stat(x1.reshape(plan.k, plan.m)))
    m_prime = plan.second_stage_size(r_hat)
    estimate = _median_of_means(draw, stream, plan.k_prime, m_prime)
    n2 = plan.k_prime * m_prime
    return RunRecord(
        estimate=estimate,
        r_hat=r_hat,
        m_prime=m_prime,
        n1=plan.n1,
        n2=n2,
        total_cost=plan.n1 + n2,
        master_seed=stream.master_seed,
        lane_index=stream.lane_index,
    )


def estimate_mean(
    dist: Distribution,
    cone: ConeSpec,
    epsilon: float,
    delta: float,
    master_seed: int = DEFAULT_SEED,
    lane_index: int = 0,
    plan: StagePlan | None = None,
) -> RunRecord:
    """Estimate ``E Y`` for ``Y ~ dist`` to within ``epsilon`` w.p. ``1 - delta``.

    The guarantee needs ``dist`` to lie in ``cone``; this is not checked, so
    out-of-cone inputs can be fed in on purpose.
    """
    if plan is None:
        plan = plan_default(cone, Accuracy(epsilon, delta))
    return run(plan, distribution_sampler(dist), derive_stream(master_seed, lane_index))


def compose(integrand: Callable, point_sampler: Sampler) -> Sampler:
    """Sampler of ``f(X)`` for ``X`` drawn by ``point_sampler``; ``f`` is applied to the batch."""

    def draw(stream, n):
        return np.asarray(integrand(point_sampler(stream, n)), dtype=float).reshape(n)

    return draw


def uniform_points(dim: int = 1, low: float = 0.0, high: float = 1.0) -> Sampler:
    """Uniform points on ``[low, high]^dim``; shape ``(n,)`` when ``dim == 1``."""

    def draw(stream, n):
        u = stream.uniforms(n * dim)
        x = low + (high - low) * u
        return x if dim == 1 else x.reshape(n, dim)

    return draw


def integrate(
    integrand: Callable,
    point_sampler: Sampler,
    cone: ConeSpec,
    epsilon: float,
    delta: float,
    master_seed: int = DEFAULT_SEED,
    lane_index: int = 0,
    plan: StagePlan | None = None,
) -> RunRecord:
    """Monte Carlo integral of ``integrand`` against the law of ``point_sampler``."""
    if plan is None:
        plan = plan_default(cone, Accuracy(epsilon, delta))
    draw = compose(integrand, point_sampler)
    return run(plan, draw, derive_stream(master_seed, lane_index))
