"""Two-stage Monte Carlo estimation of means on cones of random variables,
with cost upper/lower bound calculators and a seeded experiment harness."""

from .bounds import (
    AdversaryPair,
    adversary_heavy,
    adversary_qnorm_pair,
    adversary_variance_pair,
    fixed_cost_lb,
    wald_lb,
    wor_lb_qnorm,
    wor_lb_variance,
)
from .distributions import (
    ConeSpec,
    Discrete,
    Exponential,
    LogNormal,
    Normal,
    Pareto,
    Uniform,
    bernoulli,
    central_norm,
    in_cone,
    kappa,
    mean,
)
from .harness import ExperimentConfig, ExperimentReport, out_of_cone_demo, run_experiment, sprt
from .streams import Stream, derive_stream
from .tuner import Accuracy, StagePlan, expected_cost_bound, plan_default, plan_moment
from .two_stage import RunRecord, estimate_mean, integrate, run

__version__ = "0.1.0"
