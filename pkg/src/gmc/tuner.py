"""Parameter selection for the two-stage estimator.

:func:`plan_default` gives the first-moment plan whose constants make the
method (eps, delta)-approximating on a cone; :func:`plan_moment` gives the
variant that estimates the ``p``-th central moment directly. Both return a
:class:`StagePlan`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .distributions import ConeSpec

_INT_GUARD = 1e-9


@dataclass(frozen=True)
class Accuracy:
    """Target error ``epsilon`` and confidence split ``delta = delta1 + delta2``."""

    epsilon: float
    delta: float
    delta1: float | None = None
    delta2: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        d1, d2 = self.delta1, self.delta2
        if d1 is None and d2 is None:
            d1 = d2 = self.delta / 2
        elif d1 is None:
            d1 = self.delta - d2
        elif d2 is None:
            d2 = self.delta - d1
        if not (d1 > 0 and d2 > 0 and math.isclose(d1 + d2, self.delta, rel_tol=1e-12)):
            raise ValueError("delta1, delta2 must be positive and sum to delta")
        object.__setattr__(self, "delta1", d1)
        object.__setattr__(self, "delta2", d2)


@dataclass(frozen=True)
class StagePlan:
    """All parameters of one two-stage run.

    ``statistic`` selects the stage-one block statistic: ``"central_moment"``
    (of order ``moment_order``) or ``"variance"`` (unbiased, ``m >= 2``).
    """

    k: int
    m: int
    k_prime: int
    s: float
    eta: float
    moment_order: float = 1.0
    gamma: float = 0.5
    q_tilde: float = 2.0
    statistic: str = "central_moment"

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("k must be a positive odd integer")
        if self.k_prime < 1 or self.k_prime % 2 == 0:
            raise ValueError("k_prime must be a positive odd integer")
        if self.m < 1:
            raise ValueError("m must be positive")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.s >= 1:
            raise ValueError("s must be >= 1")
        if not self.moment_order >= 1:
            raise ValueError("moment_order must be >= 1")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.statistic not in ("central_moment", "variance"):
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.statistic == "variance" and self.m < 2:
            raise ValueError("variance statistic needs m >= 2")

    @property
    def n1(self) -> int:
        return self.k * self.m

    def second_stage_size(self, r_hat: float) -> int:
        """``m' = max(ceil(eta * r_hat^s), 1)``.

        Products within relative 1e-9 of an integer snap to that integer, so
        ``eta = 100, s = 2, r_hat = 0.2`` gives 4 and not 5 from rounding noise.
        """
        x = self.eta * r_hat**self.s
        if not math.isfinite(x):
            raise OverflowError(f"second-stage size overflows (eta*R^s = {x})")
        return max(_ceil_snap(x), 1)

    def to_dict(self) -> dict:
        return asdict(self)


def _ceil_snap(x: float) -> int:
    nearest = round(x)
    if abs(x - nearest) <= _INT_GUARD * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


def least_odd_at_least(x: float) -> int:
    n = max(_ceil_snap(x), 1)
    return n if n % 2 else n + 1


def median_trick_k(alpha: float, delta_target: float) -> int:
    """Least odd ``k >= 2 ln(1/(2 delta_target)) / ln(1/(4 alpha (1-alpha)))``."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    if not 0 < delta_target < 0.5:
        raise ValueError("delta_target must lie in (0, 1/2)")
    x = 2 * math.log(1 / (2 * delta_target)) / math.log(1 / (4 * alpha * (1 - alpha)))
    return least_odd_at_least(x)


def median_trick_tail_bound(alpha: float, k: int) -> float:
    """``(1/2) (4 alpha (1-alpha))^{k/2}``."""
    return 0.5 * (4 * alpha * (1 - alpha)) ** (k / 2)


def embed_K(cone: ConeSpec, target_p: float, target_q: float) -> float:
    """Constant ``K'`` with ``Y_{p,q,K}`` contained in ``Y_{target_p,target_q,K'}``.

    Supported targets: ``(p, q)`` itself, ``(1, q)`` and ``(1, 2)`` when ``q >= 2``.
    """
    p, q, K = cone.p, cone.q, cone.K
    if target_p == p and target_q == q:
        return K
    if target_p != 1:
        raise ValueError(f"cannot embed into a cone with p = {target_p}")
    if target_q == q:
        if math.isinf(q):
            return K**p
        return K ** (p * (q - 1) / (q - p))
    if target_q == 2 and q >= 2:
        if math.isinf(q):
            return K ** (p / 2)
        return K ** (p * q / (2 * (q - p)))
    raise ValueError(f"no embedding of Y_({p},{q},K) into Y_({target_p},{target_q},K')")


def low_integrability_constants(q: float, K_e: float, eps: float) -> tuple[int, float, float]:
    """``(m, s, eta)`` of the default plan when ``1 < q <= 2``; ``K_e = K^{pq/(q-p)}``."""
    inv = 1 / (q - 1)
    return _ceil_snap(3 * 48**inv * K_e), 1 + inv, 16**inv * K_e * (1 / eps) ** (1 + inv)


def square_integrable_constants(K_e: float, eps: float) -> tuple[int, float, float]:
    """``(m, s, eta)`` of the default plan when ``q >= 2``."""
    return _ceil_snap(144 * K_e), 2.0, 16 * K_e * (1 / eps) ** 2


def plan_default(cone: ConeSpec, acc: Accuracy, alpha: float = 0.25) -> StagePlan:
    """First-moment plan guaranteeing ``P{|A(Y) - EY| <= eps} >= 1 - delta`` on the cone.

    ``alpha`` is the per-block failure level fed to the median trick (the
    constants for ``m`` and ``eta`` assume the default 1/4).
    """
    q = cone.q
    e = cone.exponent
    K_e = cone.K**e
    eps = acc.epsilon
    k = median_trick_k(alpha, acc.delta1)
    k_prime = median_trick_k(alpha, acc.delta2)
    # extra floor so that the expected cost of stage two stays bounded
    floor = 4.0 if q >= 2 else max(4 / (q - 1), 4.0)
    k = max(k, least_odd_at_least(floor))
    m, s, eta = low_integrability_constants(q, K_e, eps) if q <= 2 else square_integrable_constants(K_e, eps)
    return StagePlan(k=k, m=m, k_prime=k_prime, s=float(s), eta=float(eta),
                     moment_order=1.0, gamma=0.5, q_tilde=cone.q_tilde)


def plan_moment(cone: ConeSpec, acc: Accuracy, alpha: float = 0.25) -> StagePlan:
    """Plan that estimates the ``p``-th central moment in stage one.

    Valid for ``1 <= p <= 2`` and ``p < q <= 2p``; uses ``gamma = 1/2``.
    """
    p, q, K = cone.p, cone.q, cone.K
    if not (1 <= p <= 2 and q <= 2 * p):
        raise ValueError("p-moment plan needs 1 <= p <= 2 and p < q <= 2p")
    eps = acc.epsilon
    inv = 1 / (q - 1)
    s = max(1 + inv, 2.0) / p
    k = median_trick_k(alpha, acc.delta1)
    k_prime = median_trick_k(alpha, acc.delta2)
    k = max(k, least_odd_at_least(4 * p * s / q))
    if p == 1:
        m = _ceil_snap(3 * 48**inv * K ** (1 + inv))
    else:
        m = _ceil_snap(52 * 208 ** (p / (q - p)) * K ** (p * q / (q - p)))
    if q <= 2:
        eta = 16**inv * K ** (1 + inv) * (1 / eps) ** (1 + inv)
    else:
        eta = 16 * K ** (q * (2 - p) / (q - p)) * (1 / eps) ** 2
    return StagePlan(k=k, m=m, k_prime=k_prime, s=float(s), eta=float(eta),
                     moment_order=float(p), gamma=0.5, q_tilde=min(q, 2.0))


def expected_cost_bound(plan: StagePlan, rho: float) -> float:
    """Upper bound ``k m + k' (1 + eta (1 + 3 gamma)^s rho^{p s})`` on the expected cost.

    ``rho`` is ``||Y - EY||_p`` for ``p = plan.moment_order``; for the default
    plan that is the mean absolute deviation.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    growth = (1 + 3 * plan.gamma) ** plan.s * rho ** (plan.moment_order * plan.s)
    return plan.k * plan.m + plan.k_prime * (1 + plan.eta * growth)
