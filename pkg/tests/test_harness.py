import json
import math
from fractions import Fraction

import pytest

from gmc import harness
from gmc.bounds import symmetric_pair, wald_lb
from gmc.distributions import ConeSpec, Discrete, bernoulli, constant
from gmc.harness import (
    ExperimentConfig,
    ExperimentReport,
    out_of_cone_demo,
    run_experiment,
    sprt,
    sprt_trials,
    worst_case_lb,
)
from gmc.reports import dumps
from gmc.streams import derive_stream
from gmc.tuner import Accuracy, expected_cost_bound, plan_default

CONE = ConeSpec(1, 2, 2)


def _strip(report):
    d = report.to_dict()
    d.pop("wall_time_seconds")
    return d


def test_constant_law():
    cfg = ExperimentConfig(constant(3), CONE, 0.1, 0.1, replications=20, master_seed=1)
    rep = run_experiment(cfg)
    plan = plan_default(CONE, Accuracy(0.1, 0.1))
    assert rep.coverage == 1 and rep.failure_count == 0
    assert rep.mean_cost == plan.k * plan.m + plan.k_prime
    assert rep.r_hat_mean == 0


def test_bernoulli_example():
    cfg = ExperimentConfig(bernoulli(Fraction(1, 4)), CONE, 0.25, 0.1, replications=500, master_seed=42)
    rep = run_experiment(cfg)
    assert rep.coverage >= 0.86
    plan = plan_default(CONE, Accuracy(0.25, 0.1))
    assert rep.theoretical["expected_cost_bound"] == expected_cost_bound(plan, 0.375)
    assert rep.mean_cost <= rep.theoretical["expected_cost_bound"]
    # the ε = 0.1 plan's bound is larger still
    assert rep.mean_cost <= 105434
    assert rep.theoretical["in_cone"] is True
    assert rep.mean_cost >= plan.k * plan.m >= rep.theoretical["fixed_cost_lb"]
    assert rep.theoretical["rho1"] == 0.375
    q = rep.cost_quantiles
    assert q["p50"] <= q["p90"] <= q["p99"]
    assert len(rep.runs) == 500 and [r.lane_index for r in rep.runs] == list(range(500))


def test_replay_is_identical(monkeypatch):
    cfg = ExperimentConfig(Discrete([(0, 0.5), (2, 0.5)]), CONE, 0.2, 0.1, replications=60, master_seed=7)
    a = run_experiment(cfg)
    monkeypatch.setenv("GMC_THREADS", "1")
    b = run_experiment(cfg)
    assert _strip(a) == _strip(b)
    assert a.runs == b.runs


def test_config_round_trip():
    cfg = ExperimentConfig(bernoulli(Fraction(1, 4)), ConeSpec(2, math.inf, 3), 0.1, 0.05, 10, 99)
    d = json.loads(dumps(cfg.to_dict()))
    assert d["cone"]["q"] == "inf"
    back = ExperimentConfig.from_dict(d)
    assert back == cfg
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict({**d, "bogus": 1})


def test_report_round_trip():
    rep = run_experiment(ExperimentConfig(bernoulli(0.25), CONE, 0.25, 0.1, 5, 3))
    d = json.loads(dumps(rep.to_dict()))
    back = ExperimentReport.from_dict(d)
    assert back.to_dict() == d


@pytest.mark.parametrize("kw", [dict(replications=0), dict(mode="nope"), dict(delta=0.5), dict(epsilon=0)])
def test_config_validation(kw):
    base = dict(dist=constant(1), cone=CONE, epsilon=0.1, delta=0.1)
    with pytest.raises(ValueError):
        ExperimentConfig(**{**base, **kw})


def test_worst_case_lb_selection():
    assert worst_case_lb(bernoulli(0.5), CONE, 0.1, 0.1) == pytest.approx(
        0.25 * 100 * math.log(7.5) / (4 * math.log(3)))
    assert worst_case_lb(bernoulli(0.5), CONE, 0.4, 0.1) is None


# -- SPRT ---------------------------------------------------------------------

PAIR = symmetric_pair(1, Fraction(1, 2))


def test_sprt_small_sample():
    res = sprt_trials(PAIR, 0.1, 2000, master_seed=5)
    sigma = math.sqrt(0.1 * 0.9 / 2000)
    assert res["error_rate"] <= 0.1 + 3 * sigma
    assert res["mean_n"] >= wald_lb(PAIR, 0.1) - 3 * res["std_n"] / math.sqrt(2000)
    res2 = sprt_trials(PAIR, 0.1, 2000, master_seed=5, truth=2)
    assert res2["error_rate"] <= 0.1 + 3 * sigma


def test_sprt_exits_on_threshold():
    # two +1 draws give log 9 = the upper threshold at delta = 0.1
    for lane in range(50):
        d, n = sprt(PAIR, 0.1, derive_stream(0, lane))
        assert d in (1, 2) and n % 2 == 0


def test_sprt_degenerate_pair_exits_after_one_draw():
    pair = symmetric_pair(1, Fraction(99, 100))
    results = [sprt(pair, 0.1, derive_stream(1, i)) for i in range(200)]
    assert all(n == 1 for _, n in results)


def test_sprt_identical_laws_caught_by_wald():
    with pytest.raises(ValueError):
        symmetric_pair(1, 0)


def test_sprt_mode():
    cfg = ExperimentConfig(constant(0), ConeSpec(1, 2, 3), 0.1, 0.1, 500, 8, mode="sprt")
    rep = run_experiment(cfg)
    assert rep.theoretical["wald_lb"] == pytest.approx(3.2, abs=0.01)
    assert rep.details["hypothesis_1"]["trials"] == 500
    assert 0 <= rep.coverage <= 1


# -- out-of-cone demo ---------------------------------------------------------

def test_out_of_cone_rejects_in_cone_instance():
    with pytest.raises(ValueError, match="does not violate"):
        out_of_cone_demo(CONE, 0.1, 0.1, 0.25, 10, 0)


def test_out_of_cone_failure():
    rep = out_of_cone_demo(CONE, 0.1, 0.1, 1e-6, 40, 42)
    assert 1 - rep.coverage >= 0.5
    assert rep.theoretical["no_hit_probability"] > 0.98
    assert rep.config["mode"] == "out_of_cone"


def test_out_of_cone_seed_consistency():
    a = out_of_cone_demo(CONE, 0.1, 0.1, 2e-5, 200, 1)
    b = out_of_cone_demo(CONE, 0.1, 0.1, 2e-5, 200, 2)
    fa, fb = 1 - a.coverage, 1 - b.coverage
    pooled = (fa + fb) / 2
    sigma = math.sqrt(max(pooled * (1 - pooled), 1e-12) * 2 / 200)
    assert abs(fa - fb) <= 3 * sigma + 1e-12


def test_out_of_cone_mode_dispatch():
    cfg = ExperimentConfig(constant(0), CONE, 0.1, 0.1, 10, 0, mode="out_of_cone", a=1e-6)
    assert run_experiment(cfg).failure_count == 10
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(constant(0), CONE, 0.1, 0.1, 10, 0, mode="out_of_cone"))


def test_integration_experiment():
    from gmc.two_stage import uniform_points

    rep = harness.run_integration_experiment(lambda x: x - 0.5, uniform_points(), 0.0, CONE,
                                             0.25, 0.1, 100, 42, rho1=0.25)
    assert rep.config["integrand"] == "integrand"
    assert rep.mean_cost <= rep.theoretical["expected_cost_bound"]
