"""Lower bounds on the expected sample size and the adversarial laws behind them.

All bounds are real numbers (expected costs), valid only on the parameter
ranges they are stated for; out-of-range arguments raise ``ValueError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .distributions import ConeSpec, Discrete, mean


@dataclass(frozen=True)
class AdversaryPair:
    """Two laws on a common finite support whose means differ by ``mean_gap``."""

    d1: Discrete
    d2: Discrete
    mean_gap: float
    validity: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.d1.values) != set(self.d2.values):
            raise ValueError("adversary laws must share their support")
        if not self.mean_gap > 0:
            raise ValueError("adversary laws must have distinct means")

    def support(self):
        return self.d1.values

    def log_ratio(self) -> dict:
        """``y -> log(P1{y} / P2{y})`` over the shared support."""
        p2 = dict(self.d2.atoms)
        return {v: math.log(float(pr) / float(p2[v])) for v, pr in self.d1.atoms}

    def to_dict(self) -> dict:
        return {
            "d1": self.d1.to_literal(),
            "d2": self.d2.to_literal(),
            "mean_gap": self.mean_gap,
            "validity": self.validity,
        }


def fixed_cost_lb(cone: ConeSpec, delta: float) -> float:
    """``K^{pq/(q-p)} ln(1/delta) / (2 ln 2)``: cost no valid method can go below."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return cone.K**cone.exponent * math.log(1 / delta) / (2 * math.log(2))


def wor_lb_variance(sigma: float, epsilon: float, delta: float, K: float) -> float:
    """Worst-case cost on the cone intersected with ``{||Y - EY||_2 <= sigma}``, ``q >= 2``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not K > 1:
        raise ValueError("K must exceed 1")
    eps_max = min(1 - 2 / (K + 1), 0.5) * sigma
    if not 0 < epsilon <= eps_max:
        raise ValueError(f"epsilon must lie in (0, {eps_max:.6g}] = (0, min(1-2/(K+1), 1/2)*sigma]")
    if not 0 < delta <= 0.25:
        raise ValueError("delta must lie in (0, 1/4]")
    return (sigma / epsilon) ** 2 * math.log(3 / (4 * delta)) / (4 * math.log(3))


def qnorm_beta(K: float) -> float:
    return 0.5 * (1 - 3 / (1 + 2 * K))


def c_qK(q: float, K: float) -> float:
    beta = qnorm_beta(K)
    return (beta / (2 * (1 + beta))) ** (1 + 1 / (q - 1)) / (beta * math.log(3))


def wor_lb_qnorm(tau: float, epsilon: float, delta: float, p: float, q: float, K: float) -> float:
    """Worst-case cost on the cone intersected with ``{||Y - EY||_q <= tau}``, ``1 < q <= 2``."""
    ConeSpec(p, q, K)
    if not 1 < q <= 2:
        raise ValueError("q must lie in (1, 2]")
    if not tau > 0:
        raise ValueError("tau must be positive")
    eps_max = (1 - 1 / K) * tau / 6
    if not 0 < epsilon <= eps_max:
        raise ValueError(f"epsilon must lie in (0, {eps_max:.6g}] = (0, (1-1/K)*tau/6]")
    if not 0 < delta <= 0.25:
        raise ValueError("delta must lie in (0, 1/4]")
    return c_qK(q, K) * (tau / epsilon) ** (1 + 1 / (q - 1)) * math.log(3 / (4 * delta))


def kl_divergence(pair: AdversaryPair) -> float:
    """``E log r(Y1)`` with ``r = P1/P2``, summed exactly over the support."""
    lr = pair.log_ratio()
    return math.fsum(float(pr) * lr[v] for v, pr in pair.d1.atoms)


def wald_lb(pair: AdversaryPair, delta: float) -> float:
    """Minimal expected sample size of any test telling ``d1`` from ``d2`` w.p. ``1 - delta``."""
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    div = abs(kl_divergence(pair))
    if div == 0:
        raise ValueError("hypotheses indistinguishable (identical laws)")
    return (1 - 2 * delta) * math.log((1 - delta) / delta) / div


def _pair(d1: Discrete, d2: Discrete, validity: dict) -> AdversaryPair:
    return AdversaryPair(d1, d2, abs(mean(d1) - mean(d2)), validity)


def symmetric_pair(sigma: float, alpha) -> AdversaryPair:
    """Laws on ``{-sigma, +sigma}`` with ``P{+sigma}`` = ``(1+alpha)/2`` resp. ``(1-alpha)/2``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    a = Fraction(alpha) if not isinstance(alpha, Fraction) else alpha
    hi, lo = (1 + a) / 2, (1 - a) / 2
    d1 = Discrete([(sigma, hi), (-sigma, lo)])
    d2 = Discrete([(sigma, lo), (-sigma, hi)])
    return _pair(d1, d2, {"sigma": sigma, "alpha": float(a)})


def adversary_variance_pair(sigma: float, alpha, K: float) -> AdversaryPair:
    """The two-point pair used for the bounded-variance lower bound.

    Both laws lie in every cone ``Y_{p,q,K}`` and in ``{||Y - EY||_2 <= sigma}``.
    """
    if not K > 1:
        raise ValueError("K must exceed 1")
    a_max = min(1 - 2 / (K + 1), 0.5)
    if not 0 < alpha <= a_max * (1 + 1e-12):
        raise ValueError(f"alpha must lie in (0, {a_max:.6g}] = (0, min(1-2/(K+1), 1/2)]")
    pair = symmetric_pair(sigma, alpha)
    pair.validity.update({"K": K, "q_min": 2.0, "sigma_ball": sigma})
    return pair


def adversary_qnorm_pair(tau: float, epsilon: float, p: float, q: float, K: float,
                         margin: float = 1e-6) -> AdversaryPair:
    """Five-point pair for the bounded central ``L_q``-norm lower bound (``1 < q <= 2``).

    Probabilities are exact rationals. ``gamma`` sits a factor ``1 + margin``
    above the threshold, so the mean gap slightly exceeds ``2*epsilon``.
    """
    ConeSpec(p, q, K)
    if not 1 < q <= 2:
        raise ValueError("q must lie in (1, 2]")
    beta = Fraction(qnorm_beta(K))
    tau_p = tau / (1 + float(beta))
    eps_max = 0.5 * float(beta) * tau_p
    if not 0 < epsilon < eps_max:
        raise ValueError(f"epsilon must lie in (0, {eps_max:.6g}) = (0, beta*tau'/2)")
    gamma = (1 + margin) * (2 * epsilon / (float(beta) * tau_p)) ** (1 + 1 / (q - 1))
    if not gamma < 1:
        raise ValueError("epsilon too close to its upper limit for the chosen margin")
    g = Fraction(gamma)
    far = gamma ** (-1 / q) * tau_p
    common = [(tau_p, (1 - beta) / 2), (-tau_p, (1 - beta) / 2), (0, beta * (1 - g))]
    big, small = Fraction(3, 4) * beta * g, Fraction(1, 4) * beta * g
    d1 = Discrete(common + [(far, big), (-far, small)])
    d2 = Discrete(common + [(far, small), (-far, big)])
    validity = {"tau": tau, "tau_prime": tau_p, "beta": float(beta), "gamma": gamma,
                "p": p, "q": q, "K": K, "epsilon": epsilon}
    return _pair(d1, d2, validity)


def adversary_heavy(a: float, scale: float) -> Discrete:
    """Two-point law ``{0 w.p. 1-a, scale/a w.p. a}`` with mean ``scale``.

    Its central-norm ratios blow up as ``a -> 0``, so it leaves every cone.
    """
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    if not scale > 0:
        raise ValueError("scale must be positive")
    fa = Fraction(a)
    return Discrete([(0, 1 - fa), (Fraction(scale) / fa, fa)])
