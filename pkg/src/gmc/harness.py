"""Seeded experiments: coverage and cost of the two-stage estimator, an SPRT
simulator against the Wald bound, and the out-of-cone failure demo.

Replication ``i`` always runs on lane ``i`` of the master seed, and every
aggregate is folded in lane order, so a report is a pure function of its
config (apart from ``wall_time_seconds``).
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bounds
from .bounds import AdversaryPair, adversary_heavy, adversary_variance_pair, wald_lb
from .distributions import (
    ConeSpec,
    Distribution,
    central_norm,
    constant,
    from_literal,
    in_cone,
    kappa,
    mean,
)
from .streams import DEFAULT_SEED, Stream, derive_stream
from .tuner import Accuracy, StagePlan, expected_cost_bound, plan_default
from .two_stage import RunRecord, compose, distribution_sampler, run

MODES = ("coverage", "sprt", "out_of_cone")

_LLR_TOL = 1e-12


@dataclass
class ExperimentConfig:
    dist: Distribution
    cone: ConeSpec
    epsilon: float
    delta: float
    replications: int = 500
    master_seed: int = DEFAULT_SEED
    mode: str = "coverage"
    # sprt mode: the +-sigma pair with this alpha; out_of_cone mode: heavy-atom probability
    alpha: float | None = None
    sigma: float = 1.0
    a: float | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")

    def to_dict(self) -> dict:
        d = {
            "dist": self.dist.to_literal(),
            "cone": {"p": self.cone.p, "q": _q_out(self.cone.q), "K": self.cone.K},
            "epsilon": self.epsilon,
            "delta": self.delta,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "mode": self.mode,
        }
        if self.alpha is not None:
            d["alpha"] = self.alpha
            d["sigma"] = self.sigma
        if self.a is not None:
            d["a"] = self.a
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"dist", "cone", "epsilon", "delta", "replications", "master_seed",
                 "mode", "alpha", "sigma", "a"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        cone = d["cone"]
        kw = {k: d[k] for k in ("replications", "master_seed", "mode", "alpha", "sigma", "a") if k in d}
        return cls(
            dist=from_literal(d["dist"]),
            cone=ConeSpec(float(cone["p"]), _q_in(cone["q"]), float(cone["K"])),
            epsilon=float(d["epsilon"]),
            delta=float(d["delta"]),
            **kw,
        )


@dataclass
class ExperimentReport:
    config: dict
    failure_count: int
    coverage: float
    mean_cost: float
    cost_quantiles: dict
    r_hat_mean: float | None
    theoretical: dict
    wall_time_seconds: float
    master_seed: int
    plan: dict | None = None
    details: dict | None = None
    runs: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["runs"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**d)


def _q_out(q):
    return "inf" if math.isinf(q) else q


def _q_in(q):
    return math.inf if q in ("inf", "Infinity", float("inf")) else float(q)


def _workers() -> int:
    env = os.environ.get("GMC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map_lanes(fn, n: int):
    """``[fn(0), ..., fn(n-1)]``, possibly computed on worker threads."""
    workers = min(_workers(), n)
    if workers <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(n)))


def _quantiles(costs: np.ndarray) -> dict:
    # "lower" keeps the quantiles actual observed integer costs
    q = np.quantile(costs, [0.5, 0.9, 0.99], method="lower")
    return {"p50": float(q[0]), "p90": float(q[1]), "p99": float(q[2])}


def worst_case_lb(dist: Distribution, cone: ConeSpec, epsilon: float, delta: float) -> float | None:
    """The ball-restricted worst-case bound that applies to ``dist``'s radius, if in range."""
    try:
        if cone.q >= 2:
            return bounds.wor_lb_variance(central_norm(dist, 2), epsilon, delta, cone.K)
        return bounds.wor_lb_qnorm(central_norm(dist, cone.q), epsilon, delta, cone.p, cone.q, cone.K)
    except ValueError:
        return None


def _run_lanes(plan: StagePlan, dist: Distribution, reps: int, seed: int) -> list[RunRecord]:
    draw = distribution_sampler(dist)
    return _map_lanes(lambda i: run(plan, draw, derive_stream(seed, i)), reps)


def _summarize(config: ExperimentConfig, plan: StagePlan, runs: list[RunRecord],
               truth: float, theoretical: dict, t0: float) -> ExperimentReport:
    errors = np.array([abs(r.estimate - truth) for r in runs])
    costs = np.array([r.total_cost for r in runs], dtype=float)
    failures = int(np.count_nonzero(errors > config.epsilon))
    return ExperimentReport(
        config=config.to_dict(),
        failure_count=failures,
        coverage=1 - failures / len(runs),
        mean_cost=math.fsum(costs) / len(runs),
        cost_quantiles=_quantiles(costs),
        r_hat_mean=math.fsum(r.r_hat for r in runs) / len(runs),
        theoretical=theoretical,
        wall_time_seconds=time.perf_counter() - t0,
        master_seed=config.master_seed,
        plan=plan.to_dict(),
        runs=runs,
    )


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    if config.mode == "sprt":
        return _sprt_experiment(config)
    if config.mode == "out_of_cone":
        if config.a is None:
            raise ValueError("out_of_cone mode needs 'a'")
        return out_of_cone_demo(config.cone, config.epsilon, config.delta, config.a,
                                config.replications, config.master_seed)
    t0 = time.perf_counter()
    truth = mean(config.dist)
    plan = plan_default(config.cone, Accuracy(config.epsilon, config.delta))
    runs = _run_lanes(plan, config.dist, config.replications, config.master_seed)
    rho1 = central_norm(config.dist, 1)
    theoretical = {
        "expected_cost_bound": expected_cost_bound(plan, rho1),
        "fixed_cost_lb": bounds.fixed_cost_lb(config.cone, config.delta),
        "worst_case_lb": worst_case_lb(config.dist, config.cone, config.epsilon, config.delta),
        "rho1": rho1,
        "in_cone": in_cone(config.dist, config.cone),
    }
    return _summarize(config, plan, runs, truth, theoretical, t0)


def run_integration_experiment(integrand, point_sampler, truth: float, cone: ConeSpec,
                               epsilon: float, delta: float, replications: int,
                               master_seed: int = DEFAULT_SEED, rho1: float | None = None,
                               label: str = "integrand") -> ExperimentReport:
    """Coverage experiment for :func:`~gmc.two_stage.integrate` with a known integral."""
    t0 = time.perf_counter()
    plan = plan_default(cone, Accuracy(epsilon, delta))
    draw = compose(integrand, point_sampler)
    runs = _map_lanes(lambda i: run(plan, draw, derive_stream(master_seed, i)), replications)
    config = ExperimentConfig(constant(truth), cone, epsilon, delta, replications, master_seed)
    theoretical = {
        "expected_cost_bound": None if rho1 is None else expected_cost_bound(plan, rho1),
        "fixed_cost_lb": bounds.fixed_cost_lb(cone, delta),
        "worst_case_lb": None,
        "rho1": rho1,
    }
    report = _summarize(config, plan, runs, truth, theoretical, t0)
    report.config = {**report.config, "dist": None, "integrand": label, "truth": truth}
    return report


# SPRT -----------------------------------------------------------------------

def sprt(pair: AdversaryPair, delta: float, stream: Stream, truth: int = 1,
         chunk: int = 32) -> tuple[int, int]:
    """Wald's sequential probability ratio test of ``d1`` against ``d2``.

    Draws i.i.d. values from ``pair.d1`` (``truth=1``) or ``pair.d2`` and sums
    ``log(P1/P2)`` until it leaves ``(log(delta/(1-delta)), log((1-delta)/delta))``.
    Returns the accepted hypothesis and the number of draws.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    dist = {1: pair.d1, 2: pair.d2}[truth]
    lr = pair.log_ratio()
    values = np.array([float(v) for v in dist.values])
    step = np.array([lr[v] for v in dist.values])
    upper = math.log((1 - delta) / delta)
    lower = -upper
    llr = 0.0
    n = 0
    while True:
        u = stream.uniforms(chunk)
        idx = np.searchsorted(dist._cum, u, side="right")
        path = llr + np.cumsum(step[idx])
        # a walk landing exactly on a threshold (e.g. 2*log 3 vs log 9) must exit
        hi, lo = upper - _LLR_TOL, lower + _LLR_TOL
        out = np.flatnonzero((path >= hi) | (path <= lo))
        if out.size:
            j = int(out[0])
            return (1 if path[j] >= hi else 2), n + j + 1
        llr = float(path[-1])
        n += chunk


def sprt_trials(pair: AdversaryPair, delta: float, trials: int, master_seed: int = DEFAULT_SEED,
                truth: int = 1, lane_offset: int = 0) -> dict:
    """Run ``trials`` independent SPRTs under hypothesis ``truth``; lanes start at ``lane_offset``."""
    res = _map_lanes(lambda i: sprt(pair, delta, derive_stream(master_seed, lane_offset + i), truth),
                     trials)
    ns = np.array([n for _, n in res], dtype=float)
    errors = sum(1 for d, _ in res if d != truth)
    return {
        "truth": truth,
        "trials": trials,
        "errors": errors,
        "error_rate": errors / trials,
        "mean_n": math.fsum(ns) / trials,
        "std_n": float(np.std(ns, ddof=1)) if trials > 1 else 0.0,
        "ns": ns,
    }


def _sprt_experiment(config: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    alpha = 0.5 if config.alpha is None else config.alpha
    pair = adversary_variance_pair(config.sigma, alpha, config.cone.K)
    R = config.replications
    h1 = sprt_trials(pair, config.delta, R, config.master_seed, truth=1)
    h2 = sprt_trials(pair, config.delta, R, config.master_seed, truth=2, lane_offset=R)
    ns = np.concatenate([h1.pop("ns"), h2.pop("ns")])
    failures = h1["errors"] + h2["errors"]
    return ExperimentReport(
        config=config.to_dict(),
        failure_count=failures,
        coverage=1 - failures / (2 * R),
        mean_cost=math.fsum(ns) / ns.size,
        cost_quantiles=_quantiles(ns),
        r_hat_mean=None,
        theoretical={"wald_lb": wald_lb(pair, config.delta), "pair": pair.to_dict()},
        wall_time_seconds=time.perf_counter() - t0,
        master_seed=config.master_seed,
        details={"hypothesis_1": h1, "hypothesis_2": h2},
    )


# Out-of-cone demo -----------------------------------------------------------

def out_of_cone_demo(cone: ConeSpec, epsilon: float, delta: float, a: float,
                     replications: int, master_seed: int = DEFAULT_SEED) -> ExperimentReport:
    """Run the cone-tuned estimator on a rare-spike law outside the cone.

    The law puts mass ``a`` on ``4*epsilon/a`` (mean ``4*epsilon``). A run that
    never sees the spike returns about 0 and fails.
    """
    t0 = time.perf_counter()
    dist = adversary_heavy(a, 4 * epsilon)
    if in_cone(dist, cone):
        raise ValueError("instance does not violate the cone")
    plan = plan_default(cone, Accuracy(epsilon, delta))
    runs = _run_lanes(plan, dist, replications, master_seed)
    # cost when every draw is 0: r_hat = 0 forces m' = 1
    n_quiet = plan.n1 + plan.k_prime
    config = ExperimentConfig(dist, cone, epsilon, delta, replications, master_seed,
                              mode="out_of_cone", a=a)
    theoretical = {
        "expected_cost_bound": expected_cost_bound(plan, central_norm(dist, 1)),
        "fixed_cost_lb": bounds.fixed_cost_lb(cone, delta),
        "worst_case_lb": None,
        "no_hit_probability": (1 - a) ** n_quiet,
        "kappa": kappa(dist, cone.p, cone.q),
        "in_cone": False,
    }
    return _summarize(config, plan, runs, mean(dist), theoretical, t0)
