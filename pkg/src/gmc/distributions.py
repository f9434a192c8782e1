"""Distribution models with exact central-moment arithmetic.

These are the ground truth for every check in the package: the true mean,
the centered norms ``||Y - EY||_p`` and membership in a cone
``{Y : ||Y - EY||_q <= K ||Y - EY||_p}``.

Discrete laws keep their probabilities as :class:`fractions.Fraction` when
they are supplied that way, which makes means and integer-order moments
exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational

import numpy as np
from scipy import integrate, special

from .streams import Stream

INF = math.inf

_QUAD_RTOL = 1e-11
_PROB_SUM_TOL = 1e-12


class MomentError(ValueError):
    """Raised when a requested moment does not exist (is infinite)."""


@dataclass(frozen=True)
class ConeSpec:
    """The cone ``Y_{p,q,K}``; ``q`` may be ``math.inf``."""

    p: float
    q: float
    K: float

    def __post_init__(self):
        if not 1 <= self.p:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.p < self.q:
            raise ValueError(f"need p < q, got p={self.p}, q={self.q}")
        if not self.K > 1:
            raise ValueError(f"K must exceed 1, got {self.K}")

    @property
    def exponent(self) -> float:
        """``pq/(q-p)``, which tends to ``p`` as ``q -> inf``."""
        if math.isinf(self.q):
            return float(self.p)
        return self.p * self.q / (self.q - self.p)

    @property
    def q_tilde(self) -> float:
        return min(self.q, 2.0)


class Distribution:
    """Base class for sampleable real laws with computable central moments."""

    kind: str = ""

    def mean(self):
        raise NotImplementedError

    def central_moment(self, p: float) -> float:
        """``E|Y - EY|^p`` for finite ``p``."""
        raise NotImplementedError

    def central_norm(self, p: float) -> float:
        if p < 1:
            raise ValueError("p must be >= 1")
        if math.isinf(p):
            return self._sup_deviation()
        if p == 1:
            return float(self.central_moment(1))
        return float(self.central_moment(p)) ** (1.0 / p)

    def _sup_deviation(self) -> float:
        raise MomentError(f"{self.kind} law is unbounded; no L_inf norm")

    def sample(self, stream: Stream, size: int | None = None):
        raise NotImplementedError

    def scale_shift(self, a: float, c: float) -> "Distribution":
        raise ValueError(f"scale_shift is not supported for {self.kind} laws")

    def to_literal(self) -> dict:
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return False


def _exact(x) -> bool:
    return isinstance(x, Rational)


class Discrete(Distribution):
    """Finite-support law given as ``[(value, prob), ...]``.

    Probabilities supplied as ``Fraction``/``int`` (or strings such as
    ``"1/4"``) switch the law into exact mode, where the mean and the
    residuals ``value - mean`` are exact rationals.
    """

    kind = "discrete"

    def __init__(self, atoms):
        atoms = [(v, _parse_number(pr)) for v, pr in atoms]
        if not atoms:
            raise ValueError("discrete law needs at least one atom")
        probs = [pr for _, pr in atoms]
        self.exact = all(_exact(pr) for pr in probs)
        if self.exact:
            values = [Fraction(_parse_number(v)) for v, _ in atoms]
            probs = [Fraction(pr) for pr in probs]
            if sum(probs) != 1:
                raise ValueError(f"probabilities sum to {sum(probs)}, not 1")
        else:
            values = [float(_parse_number(v)) for v, _ in atoms]
            probs = [float(pr) for pr in probs]
            if abs(math.fsum(probs) - 1.0) > _PROB_SUM_TOL:
                raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        if any(not pr > 0 for pr in probs):
            raise ValueError("probabilities must be strictly positive")
        if len(set(values)) != len(values):
            raise ValueError("atom values must be pairwise distinct")
        order = sorted(range(len(values)), key=values.__getitem__)
        self.values = tuple(values[i] for i in order)
        self.probs = tuple(probs[i] for i in order)
        self._fvalues = np.array([float(v) for v in self.values])
        cum = np.cumsum([float(pr) for pr in self.probs])
        self._cum = cum[:-1]

    @property
    def atoms(self):
        return list(zip(self.values, self.probs))

    @property
    def is_constant(self) -> bool:
        return len(self.values) == 1

    def mean(self):
        if self.exact:
            return sum(v * pr for v, pr in zip(self.values, self.probs))
        return math.fsum(v * pr for v, pr in zip(self.values, self.probs))

    def residuals(self):
        mu = self.mean()
        return [v - mu for v in self.values]

    def central_moment(self, p: float):
        res = self.residuals()
        if self.exact and float(p).is_integer():
            n = int(p)
            return sum(pr * abs(r) ** n for r, pr in zip(res, self.probs))
        return math.fsum(float(pr) * _abs_pow(float(r), p) for r, pr in zip(res, self.probs))

    def central_norm(self, p: float) -> float:
        if p < 1:
            raise ValueError("p must be >= 1")
        if math.isinf(p):
            return self._sup_deviation()
        if p == 1:
            return float(self.central_moment(1))
        mom = self.central_moment(p) if self.exact and float(p).is_integer() else None
        if self.exact and isinstance(mom, Fraction):
            # root of the exact moment: avoid float under/overflow in between
            return _fraction_root(mom, p)
        # factor out the largest residual so that large p cannot overflow
        res = [abs(float(r)) for r in self.residuals()]
        top = max(res)
        if top == 0:
            return 0.0
        scaled = math.fsum(float(pr) * (r / top) ** p for r, pr in zip(res, self.probs))
        return top * scaled ** (1.0 / p)

    def _sup_deviation(self) -> float:
        return max(abs(float(r)) for r in self.residuals())

    def sample(self, stream: Stream, size: int | None = None):
        u = stream.uniforms(1 if size is None else size)
        out = self._fvalues[np.searchsorted(self._cum, u, side="right")]
        return float(out[0]) if size is None else out

    def scale_shift(self, a: float, c: float) -> "Discrete":
        if self.exact:
            a, c = Fraction(_parse_number(a)), Fraction(_parse_number(c))
        merged: dict = {}
        for v, pr in self.atoms:
            key = a * v + c
            merged[key] = merged.get(key, 0) + pr
        return Discrete(list(merged.items()))

    def to_literal(self) -> dict:
        return {
            "kind": "discrete",
            "atoms": [[_number_literal(v), _number_literal(pr)] for v, pr in self.atoms],
        }

    def __eq__(self, other):
        return isinstance(other, Discrete) and self.atoms == other.atoms

    def __hash__(self):
        return hash(tuple(self.atoms))

    def __repr__(self) -> str:
        return f"Discrete({self.atoms!r})"


@dataclass(frozen=True, eq=True)
class Normal(Distribution):
    mu: float = 0.0
    sigma: float = 1.0
    kind = "normal"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def mean(self):
        return float(self.mu)

    def central_moment(self, p: float) -> float:
        # E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
        return self.sigma**p * math.exp(
            0.5 * p * math.log(2.0) + special.gammaln((p + 1) / 2) - 0.5 * math.log(math.pi)
        )

    def sample(self, stream, size=None):
        x = stream.generator.normal(self.mu, self.sigma, 1 if size is None else size)
        return float(x[0]) if size is None else x

    def scale_shift(self, a, c):
        if a == 0:
            return Discrete([(c, 1)])
        return Normal(a * self.mu + c, abs(a) * self.sigma)

    def to_literal(self):
        return {"kind": "normal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True, eq=True)
class Uniform(Distribution):
    low: float = 0.0
    high: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("need low < high")

    def mean(self):
        return 0.5 * (self.low + self.high)

    def central_moment(self, p: float) -> float:
        return (0.5 * (self.high - self.low)) ** p / (p + 1)

    def _sup_deviation(self) -> float:
        return 0.5 * (self.high - self.low)

    def sample(self, stream, size=None):
        u = stream.uniforms(1 if size is None else size)
        x = self.low + (self.high - self.low) * u
        return float(x[0]) if size is None else x

    def scale_shift(self, a, c):
        if a == 0:
            return Discrete([(c, 1)])
        lo, hi = sorted((a * self.low + c, a * self.high + c))
        return Uniform(lo, hi)

    def to_literal(self):
        return {"kind": "uniform", "low": self.low, "high": self.high}


@dataclass(frozen=True, eq=True)
class Exponential(Distribution):
    rate: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def mean(self):
        return 1.0 / self.rate

    def central_moment(self, p: float) -> float:
        # rate^{-p} e^{-1} (Gamma(p+1) + int_0^1 u^p e^u du); the integral is
        # sum_n 1/(n! (p+n+1)).
        tail = 0.0
        term_fact = 1.0
        for n in range(60):
            if n:
                term_fact /= n
            term = term_fact / (p + n + 1)
            tail += term
            if term < 1e-18 * tail:
                break
        return self.rate ** (-p) * math.exp(-1.0) * (math.gamma(p + 1) + tail)

    def sample(self, stream, size=None):
        u = stream.uniforms(1 if size is None else size)
        x = -np.log1p(-u) / self.rate
        return float(x[0]) if size is None else x

    def scale_shift(self, a, c):
        if c != 0 or a <= 0:
            return super().scale_shift(a, c)
        return Exponential(self.rate / a)

    def to_literal(self):
        return {"kind": "exponential", "rate": self.rate}


@dataclass(frozen=True, eq=True)
class LogNormal(Distribution):
    mu: float = 0.0
    sigma: float = 1.0
    kind = "lognormal"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def mean(self):
        return math.exp(self.mu + 0.5 * self.sigma**2)

    def central_moment(self, p: float) -> float:
        m = self.mean()
        z0 = 0.5 * self.sigma  # exp(mu + sigma z0) == mean

        def f(z):
            t = self.mu + self.sigma * z
            if t > 50.0:
                # far right tail, in log space to avoid overflow
                return math.exp(p * (t + math.log1p(-m * math.exp(-t))) - 0.5 * z * z)
            return _abs_pow(math.exp(t) - m, p) * math.exp(-0.5 * z * z)

        lo, _ = integrate.quad(f, -np.inf, z0, epsabs=0, epsrel=_QUAD_RTOL, limit=200)
        hi, _ = integrate.quad(f, z0, np.inf, epsabs=0, epsrel=_QUAD_RTOL, limit=200)
        return (lo + hi) / math.sqrt(2 * math.pi)

    def sample(self, stream, size=None):
        x = stream.generator.lognormal(self.mu, self.sigma, 1 if size is None else size)
        return float(x[0]) if size is None else x

    def scale_shift(self, a, c):
        if c != 0 or a <= 0:
            return super().scale_shift(a, c)
        return LogNormal(self.mu + math.log(a), self.sigma)

    def to_literal(self):
        return {"kind": "lognormal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True, eq=True)
class Pareto(Distribution):
    """Pareto law with density ``shape * scale^shape / x^(shape+1)`` on ``[scale, inf)``."""

    scale: float = 1.0
    shape: float = 3.0
    kind = "pareto"

    def __post_init__(self):
        if not (self.scale > 0 and self.shape > 0):
            raise ValueError("scale and shape must be positive")

    def mean(self):
        if self.shape <= 1:
            raise MomentError("mean does not exist (pareto shape <= 1)")
        return self.shape * self.scale / (self.shape - 1)

    def central_moment(self, p: float) -> float:
        if p >= self.shape:
            raise MomentError(f"central {p}-moment does not exist for shape {self.shape}")
        a = self.shape
        mt = self.mean() / self.scale
        # With T = U^{-1/a}: E|T - mt|^p = int_0^1 u^{-p/a} |1 - mt u^{1/a}|^p du.
        u0 = mt ** (-a)

        def h(u):
            return _abs_pow(1.0 - mt * u ** (1.0 / a), p)

        def g(u):
            return u ** (-p / a) * h(u)

        # the u^{-p/a} singularity at 0 goes into the quadrature weight
        lo, _ = integrate.quad(h, 0.0, u0, weight="alg", wvar=(-p / a, 0.0),
                               epsabs=0, epsrel=_QUAD_RTOL, limit=200)
        hi, _ = integrate.quad(g, u0, 1.0, epsabs=0, epsrel=_QUAD_RTOL, limit=200)
        return self.scale**p * (lo + hi)

    def sample(self, stream, size=None):
        u = stream.uniforms(1 if size is None else size)
        x = self.scale * (1.0 - u) ** (-1.0 / self.shape)
        return float(x[0]) if size is None else x

    def scale_shift(self, a, c):
        if c != 0 or a <= 0:
            return super().scale_shift(a, c)
        return Pareto(self.scale * a, self.shape)

    def to_literal(self):
        return {"kind": "pareto", "scale": self.scale, "shape": self.shape}


_KINDS = {
    "uniform": (Uniform, ("low", "high")),
    "normal": (Normal, ("mu", "sigma")),
    "exponential": (Exponential, ("rate",)),
    "lognormal": (LogNormal, ("mu", "sigma")),
    "pareto": (Pareto, ("scale", "shape")),
}


def from_literal(lit: dict) -> Distribution:
    """Build a law from its config literal, e.g. ``{"kind": "normal", "mu": 0, "sigma": 1}``."""
    kind = lit.get("kind")
    if kind == "discrete":
        extra = set(lit) - {"kind", "atoms"}
        if extra:
            raise ValueError(f"unknown keys for discrete law: {sorted(extra)}")
        return Discrete([tuple(a) for a in lit["atoms"]])
    if kind not in _KINDS:
        raise ValueError(f"unknown distribution kind {kind!r}")
    cls, fields = _KINDS[kind]
    extra = set(lit) - {"kind", *fields}
    if extra:
        raise ValueError(f"unknown keys for {kind} law: {sorted(extra)}")
    return cls(**{f: float(lit[f]) for f in fields if f in lit})


def _parse_number(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Integral):
        return int(x)
    return x


def _number_literal(x):
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x)
        f = float(x)
        return f if Fraction(f) == x else f"{x.numerator}/{x.denominator}"
    return x


def _abs_pow(x: float, p: float) -> float:
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    if p == 1:
        return ax
    if p == 2:
        return ax * ax
    return math.exp(p * math.log(ax))


def _fraction_root(x: Fraction, p: float) -> float:
    if x == 0:
        return 0.0
    lg = (math.log(x.numerator) - math.log(x.denominator)) / p
    return math.exp(lg)


# Functional API -------------------------------------------------------------


def mean(dist: Distribution) -> float:
    return float(dist.mean())


def central_norm(dist: Distribution, p: float) -> float:
    """``||Y - EY||_p``; ``p = inf`` gives the essential sup of ``|Y - EY|``."""
    return dist.central_norm(p)


def kappa(dist: Distribution, p: float, q: float) -> float:
    """Ratio ``||Y - EY||_q / ||Y - EY||_p``."""
    if not p < q:
        raise ValueError("kappa needs p < q")
    rp = dist.central_norm(p)
    if rp == 0:
        raise ValueError("kappa undefined for a constant distribution")
    return dist.central_norm(q) / rp


def in_cone(dist: Distribution, cone: ConeSpec, rtol: float = 1e-12) -> bool:
    """Whether ``||Y - EY||_q <= K ||Y - EY||_p`` (up to ``rtol`` rounding slack).

    Laws without a finite ``q``-th central moment are outside every such cone.
    """
    try:
        rp = dist.central_norm(cone.p)
        rq = dist.central_norm(cone.q)
    except MomentError:
        return False
    if rp == 0:
        return rq == 0
    return rq <= cone.K * rp * (1 + rtol)


def sample(dist: Distribution, stream: Stream, size: int | None = None):
    return dist.sample(stream, size)


def scale_shift(dist: Distribution, a: float, c: float) -> Distribution:
    """Law of ``a*Y + c``."""
    return dist.scale_shift(a, c)


def constant(c) -> Discrete:
    return Discrete([(c, 1)])


def bernoulli(a) -> Discrete:
    """``P{Y=1} = a``; pass a ``Fraction`` for exact arithmetic."""
    if not 0 < a < 1:
        raise ValueError("success probability must lie in (0, 1)")
    return Discrete([(0, 1 - a), (1, a)])


def bernoulli_threshold_instance(cone: ConeSpec) -> Discrete:
    """Bernoulli law with ``a = K^{-pq/(q-p)}``, which lies in the cone.

    For ``K`` so small that this exceeds 1/2 the fair coin ``a = 1/2`` is
    returned instead (its ratio of central norms is exactly 1).
    """
    return bernoulli(min(cone.K ** (-cone.exponent), 0.5))
