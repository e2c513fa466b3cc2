"""Increment and jump distributions, cumulants, Legendre transforms, tilting.

Every law is an immutable dataclass exposing its log-Laplace transform
(``cumulant``), the exact finiteness interval of that transform, its
support, a numpy sampler and an exponential tilt that stays inside the
same family. :class:`LegendreTransform` computes the deviation function

    Lambda(alpha) = sup_lambda { lambda * alpha - cumulant(lambda) }

together with its maximizer.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, NotCentered, OutOfDomain

INF = math.inf
CENTER_TOL = 1e-8


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def _log1mexp_ratio(lam: float, rate: float) -> float:
    """-log(1 - lam/rate), +inf when lam >= rate."""
    if lam >= rate:
        return INF
    return -math.log1p(-lam / rate)


@dataclass(frozen=True)
class CumulantDomain:
    """Maximal interval where the Laplace transform is finite.

    ``finite_at_minus``/``finite_at_plus`` tell whether the transform is
    finite at a finite endpoint (always False for infinite endpoints).
    """

    lambda_minus: float
    lambda_plus: float
    finite_at_minus: bool = False
    finite_at_plus: bool = False

    def contains(self, lam: float) -> bool:
        if self.lambda_minus < lam < self.lambda_plus:
            return True
        if lam == self.lambda_minus and self.finite_at_minus:
            return True
        return lam == self.lambda_plus and self.finite_at_plus

    def interior(self, lam: float) -> bool:
        return self.lambda_minus < lam < self.lambda_plus


class Law:
    """Common interface; concrete families below."""

    kind: str = "law"

    # subclasses implement these
    def cumulant(self, lam: float) -> float:
        raise NotImplementedError

    def cumulant_derivative(self, lam: float) -> float:
        raise NotImplementedError

    @property
    def domain(self) -> CumulantDomain:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def variance(self) -> float:
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def edge_mass(self, x: float) -> float:
        """Probability of the atom at a finite support edge ``x``."""
        return 0.0

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def _tilted(self, lam: float) -> Law:
        raise NotImplementedError

    def to_spec(self) -> dict[str, Any]:
        raise NotImplementedError

    # shared behaviour
    def laplace(self, lam: float) -> float:
        return _exp(self.cumulant(lam))

    def is_centered(self, tol: float = CENTER_TOL) -> bool:
        return abs(self.mean) <= tol

    def require_centered(self, tol: float = CENTER_TOL) -> None:
        if not self.is_centered(tol):
            raise NotCentered(f"{self.label} has mean {self.mean!r}")

    def tilt(self, lam: float) -> Law:
        """Exponentially tilted law dP' ~ exp(lam x) dP.

        ``lam`` must lie strictly inside the cumulant domain.
        """
        if not self.domain.interior(lam) or not math.isfinite(lam):
            raise OutOfDomain(f"tilt parameter {lam!r} outside {self.domain}")
        if lam == 0.0:
            return self
        return self._tilted(lam)

    @property
    def label(self) -> str:
        return spec_label(self.to_spec())


def spec_label(spec: dict[str, Any]) -> str:
    """Compact human-readable form of a law spec, e.g. ``gaussian(variance=1)``."""
    spec = dict(spec)
    name = spec.pop("name")
    parts = []
    for k, v in spec.items():
        if isinstance(v, dict):
            v = spec_label(v)
        elif isinstance(v, float):
            v = f"{v:g}"
        parts.append(f"{k}={v}")
    return f"{name}({','.join(parts)})" if parts else name


@dataclass(frozen=True)
class Gaussian(Law):
    mu: float = 0.0
    var: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not self.var > 0:
            raise ConfigError("gaussian variance must be positive")

    def cumulant(self, lam):
        return self.mu * lam + 0.5 * self.var * lam * lam

    def cumulant_derivative(self, lam):
        return self.mu + self.var * lam

    @property
    def domain(self):
        return CumulantDomain(-INF, INF)

    @property
    def mean(self):
        return self.mu

    @property
    def variance(self):
        return self.var

    @property
    def support(self):
        return (-INF, INF)

    def sample(self, rng, size=None):
        return rng.normal(self.mu, math.sqrt(self.var), size)

    def _tilted(self, lam):
        return Gaussian(self.mu + self.var * lam, self.var)

    def to_spec(self):
        spec = {"name": "gaussian", "variance": self.var}
        if self.mu:
            spec["mean"] = self.mu
        return spec


@dataclass(frozen=True)
class TwoPoint(Law):
    """Takes ``high`` with probability ``p_high``, else ``low``."""

    low: float = -1.0
    high: float = 1.0
    p_high: float = 0.5
    kind = "two_point"

    def __post_init__(self):
        if not self.low < self.high:
            raise ConfigError("two_point needs low < high")
        if not 0.0 < self.p_high < 1.0:
            raise ConfigError("two_point needs 0 < p_high < 1")

    def _logit(self, lam):
        return lam * (self.high - self.low) + math.log(self.p_high) - math.log1p(-self.p_high)

    def cumulant(self, lam):
        return float(np.logaddexp(lam * self.high + math.log(self.p_high),
                                  lam * self.low + math.log1p(-self.p_high)))

    def cumulant_derivative(self, lam):
        return self.low + (self.high - self.low) * _sigmoid(self._logit(lam))

    @property
    def domain(self):
        return CumulantDomain(-INF, INF)

    @property
    def mean(self):
        return self.low + (self.high - self.low) * self.p_high

    @property
    def variance(self):
        return (self.high - self.low) ** 2 * self.p_high * (1.0 - self.p_high)

    @property
    def support(self):
        return (self.low, self.high)

    def edge_mass(self, x):
        if x == self.high:
            return self.p_high
        if x == self.low:
            return 1.0 - self.p_high
        return 0.0

    def sample(self, rng, size=None):
        u = rng.random(size)
        return np.where(u < self.p_high, self.high, self.low) if size is not None else (
            self.high if u < self.p_high else self.low)

    def _tilted(self, lam):
        return TwoPoint(self.low, self.high, _sigmoid(self._logit(lam)))

    def to_spec(self):
        if (self.low, self.high, self.p_high) == (-1.0, 1.0, 0.5):
            return {"name": "bernoulli_pm1"}
        return {"name": "two_point", "low": self.low, "high": self.high, "p_high": self.p_high}


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@dataclass(frozen=True)
class ShiftedExponential(Law):
    """``shift + E / rate`` with ``E ~ Exp(1)``."""

    rate: float = 1.0
    shift: float = 0.0
    kind = "shifted_exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigError("exponential rate must be positive")

    def cumulant(self, lam):
        tail = _log1mexp_ratio(lam, self.rate)
        return tail if tail == INF else lam * self.shift + tail

    def cumulant_derivative(self, lam):
        if lam >= self.rate:
            return INF
        return self.shift + 1.0 / (self.rate - lam)

    @property
    def domain(self):
        return CumulantDomain(-INF, self.rate)

    @property
    def mean(self):
        return self.shift + 1.0 / self.rate

    @property
    def variance(self):
        return 1.0 / self.rate**2

    @property
    def support(self):
        return (self.shift, INF)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size) + self.shift

    def _tilted(self, lam):
        return ShiftedExponential(self.rate - lam, self.shift)

    def to_spec(self):
        if (self.rate, self.shift) == (1.0, -1.0):
            return {"name": "centered_exponential"}
        if self.shift == 0.0:
            return {"name": "exponential", "rate": self.rate}
        return {"name": "shifted_exponential", "rate": self.rate, "shift": self.shift}


@dataclass(frozen=True)
class AsymmetricLaplace(Law):
    """``shift + E1 / right - E2 / left`` with independent ``Exp(1)`` draws."""

    right: float = 1.0
    left: float = 1.0
    shift: float = 0.0
    kind = "asymmetric_laplace"

    def __post_init__(self):
        if not (self.right > 0 and self.left > 0):
            raise ConfigError("laplace rates must be positive")

    def cumulant(self, lam):
        if not -self.left < lam < self.right:
            return INF
        return lam * self.shift - math.log1p(-lam / self.right) - math.log1p(lam / self.left)

    def cumulant_derivative(self, lam):
        if lam >= self.right:
            return INF
        if lam <= -self.left:
            return -INF
        return self.shift + 1.0 / (self.right - lam) - 1.0 / (self.left + lam)

    @property
    def domain(self):
        return CumulantDomain(-self.left, self.right)

    @property
    def mean(self):
        return self.shift + 1.0 / self.right - 1.0 / self.left

    @property
    def variance(self):
        return 1.0 / self.right**2 + 1.0 / self.left**2

    @property
    def support(self):
        return (-INF, INF)

    def sample(self, rng, size=None):
        up = rng.exponential(1.0 / self.right, size)
        down = rng.exponential(1.0 / self.left, size)
        return self.shift + up - down

    def _tilted(self, lam):
        return AsymmetricLaplace(self.right - lam, self.left + lam, self.shift)

    def to_spec(self):
        if (self.right, self.left, self.shift) == (1.0, 1.0, 0.0):
            return {"name": "laplace_symmetric"}
        return {"name": "asymmetric_laplace", "right": self.right, "left": self.left,
                "shift": self.shift}


@dataclass(frozen=True)
class ShiftedPoisson(Law):
    """``shift + N`` with ``N ~ Poisson(intensity)``."""

    intensity: float = 1.0
    shift: float = 0.0
    kind = "shifted_poisson"

    def __post_init__(self):
        if not self.intensity > 0:
            raise ConfigError("poisson intensity must be positive")

    def cumulant(self, lam):
        return self.intensity * math.expm1(lam) + lam * self.shift if lam < 700 else INF

    def cumulant_derivative(self, lam):
        return self.intensity * _exp(lam) + self.shift

    @property
    def domain(self):
        return CumulantDomain(-INF, INF)

    @property
    def mean(self):
        return self.intensity + self.shift

    @property
    def variance(self):
        return self.intensity

    @property
    def support(self):
        return (self.shift, INF)

    def edge_mass(self, x):
        return math.exp(-self.intensity) if x == self.shift else 0.0

    def sample(self, rng, size=None):
        return rng.poisson(self.intensity, size) + self.shift

    def _tilted(self, lam):
        return ShiftedPoisson(self.intensity * math.exp(lam), self.shift)

    def to_spec(self):
        if self.shift == -self.intensity:
            return {"name": "centered_poisson", "mean": self.intensity}
        return {"name": "shifted_poisson", "intensity": self.intensity, "shift": self.shift}


@dataclass(frozen=True)
class PointMass(Law):
    """Degenerate law; only meaningful as a jump law."""

    value: float = 1.0
    kind = "point_mass"

    def cumulant(self, lam):
        return lam * self.value

    def cumulant_derivative(self, lam):
        return self.value

    @property
    def domain(self):
        return CumulantDomain(-INF, INF)

    @property
    def mean(self):
        return self.value

    @property
    def variance(self):
        return 0.0

    @property
    def support(self):
        return (self.value, self.value)

    def edge_mass(self, x):
        return 1.0 if x == self.value else 0.0

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    def _tilted(self, lam):
        return self

    def to_spec(self):
        return {"name": "point_mass", "value": self.value}


@dataclass(frozen=True)
class CompoundPoisson(Law):
    """Unit-time increment of ``drift * t + sum of Poisson(rate * t) jumps``.

    The cumulant is ``rate * (psi_jump(lam) - 1) + drift * lam``.
    """

    rate: float
    jump: Law
    drift: float = 0.0
    kind = "compound_poisson"

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigError("compound poisson rate must be positive")
        if isinstance(self.jump, CompoundPoisson):
            raise ConfigError("nested compound poisson jump laws are not supported")
        if self.jump.variance == 0.0 and self.jump.mean == 0.0:
            raise ConfigError("jump law must not be the point mass at zero")

    def cumulant(self, lam):
        kj = self.jump.cumulant(lam)
        if kj == INF:
            return INF
        return self.rate * math.expm1(kj) + self.drift * lam if kj < 700 else INF

    def cumulant_derivative(self, lam):
        kj = self.jump.cumulant(lam)
        if kj == INF:
            return INF if lam > 0 else -INF
        return self.rate * self.jump.cumulant_derivative(lam) * _exp(kj) + self.drift

    @property
    def domain(self):
        return self.jump.domain

    @property
    def mean(self):
        return self.rate * self.jump.mean + self.drift

    @property
    def variance(self):
        return self.rate * (self.jump.variance + self.jump.mean**2)

    @property
    def support(self):
        jlo, jhi = self.jump.support
        lo = self.drift if jlo >= 0 else -INF
        hi = self.drift if jhi <= 0 else INF
        return (lo, hi)

    def edge_mass(self, x):
        # ``x == drift`` only happens with no event in unit time
        lo, hi = self.support
        return math.exp(-self.rate) if x == self.drift and (x == lo or x == hi) else 0.0

    def sample(self, rng, size=None):
        shape = () if size is None else size
        counts = rng.poisson(self.rate, shape)
        flat = np.atleast_1d(counts).ravel()
        total = int(flat.sum())
        jumps = np.asarray(self.jump.sample(rng, total), dtype=float)
        owner = np.repeat(np.arange(flat.size), flat)
        sums = np.bincount(owner, weights=jumps, minlength=flat.size)
        out = sums + self.drift
        if size is None:
            return float(out[0])
        return out.reshape(np.shape(counts))

    def _tilted(self, lam):
        return CompoundPoisson(self.rate * self.jump.laplace(lam), self.jump.tilt(lam), self.drift)

    def to_spec(self):
        return {"name": "compound_poisson", "rate": self.rate, "jump": self.jump.to_spec(),
                "drift": self.drift}


# Catalog constructors -------------------------------------------------------

def gaussian(variance: float = 1.0) -> Gaussian:
    return Gaussian(0.0, float(variance))


def bernoulli_pm1() -> TwoPoint:
    return TwoPoint(-1.0, 1.0, 0.5)


def centered_exponential() -> ShiftedExponential:
    """``Exp(1) - 1``."""
    return ShiftedExponential(1.0, -1.0)


def laplace_symmetric() -> AsymmetricLaplace:
    return AsymmetricLaplace(1.0, 1.0, 0.0)


def centered_poisson(mean: float = 1.0) -> ShiftedPoisson:
    return ShiftedPoisson(float(mean), -float(mean))


def exponential(rate: float = 1.0) -> ShiftedExponential:
    return ShiftedExponential(float(rate), 0.0)


def point_mass(value: float = 1.0) -> PointMass:
    return PointMass(float(value))


def compound_poisson(rate: float, jump: Law, drift: float | None = None) -> CompoundPoisson:
    """Compound Poisson increment law; ``drift=None`` centers it."""
    if drift is None:
        drift = -float(rate) * jump.mean
    return CompoundPoisson(float(rate), jump, float(drift))


def catalog() -> dict[str, Law]:
    """The centered laws exercised by the test and acceptance suites."""
    return {
        "gaussian": gaussian(1.0),
        "bernoulli_pm1": bernoulli_pm1(),
        "centered_exponential": centered_exponential(),
        "laplace_symmetric": laplace_symmetric(),
        "centered_poisson": centered_poisson(1.0),
        "compound_poisson": compound_poisson(1.0, exponential(1.0)),
    }


_SPEC_FIELDS = {
    "gaussian": {"variance", "mean"},
    "bernoulli_pm1": set(),
    "two_point": {"low", "high", "p_high"},
    "centered_exponential": set(),
    "exponential": {"rate"},
    "shifted_exponential": {"rate", "shift"},
    "laplace_symmetric": set(),
    "asymmetric_laplace": {"right", "left", "shift"},
    "centered_poisson": {"mean"},
    "shifted_poisson": {"intensity", "shift"},
    "point_mass": {"value"},
    "compound_poisson": {"rate", "jump", "drift"},
}


def law_from_spec(spec: dict[str, Any] | str) -> Law:
    """Build a law from a declarative record such as
    ``{"name": "compound_poisson", "rate": 1, "jump": {"name": "exponential"}}``.
    A bare string is shorthand for ``{"name": string}``.
    """
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"law spec must be a mapping with a 'name': {spec!r}")
    name = spec["name"]
    if name not in _SPEC_FIELDS:
        raise ConfigError(f"unknown law {name!r}")
    params = {k: v for k, v in spec.items() if k != "name"}
    unknown = set(params) - _SPEC_FIELDS[name]
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {sorted(unknown)}")
    try:
        if name == "gaussian":
            return Gaussian(float(params.get("mean", 0.0)), float(params.get("variance", 1.0)))
        if name == "bernoulli_pm1":
            return bernoulli_pm1()
        if name == "two_point":
            return TwoPoint(float(params.get("low", -1.0)), float(params.get("high", 1.0)),
                            float(params.get("p_high", 0.5)))
        if name == "centered_exponential":
            return centered_exponential()
        if name == "exponential":
            return exponential(params.get("rate", 1.0))
        if name == "shifted_exponential":
            return ShiftedExponential(float(params.get("rate", 1.0)), float(params.get("shift", 0.0)))
        if name == "laplace_symmetric":
            return laplace_symmetric()
        if name == "asymmetric_laplace":
            return AsymmetricLaplace(float(params.get("right", 1.0)), float(params.get("left", 1.0)),
                                     float(params.get("shift", 0.0)))
        if name == "centered_poisson":
            return centered_poisson(params.get("mean", 1.0))
        if name == "shifted_poisson":
            return ShiftedPoisson(float(params.get("intensity", 1.0)), float(params.get("shift", 0.0)))
        if name == "point_mass":
            return point_mass(params.get("value", 1.0))
        jump = law_from_spec(params.get("jump", "exponential"))
        drift = params.get("drift")
        return compound_poisson(params.get("rate", 1.0), jump, None if drift is None else float(drift))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad parameters for {name}: {exc}") from exc


# Legendre transform ---------------------------------------------------------

@dataclass
class LegendreTransform:
    """Memoized deviation function of ``law``.

    ``tol`` is the absolute tolerance on the maximizer; the value is then
    accurate to rounding because the objective is flat at its maximum.
    Instances are safe to share between threads.
    """

    law: Law
    tol: float = 1e-10
    require_centered: bool = True
    cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        if self.require_centered:
            self.law.require_centered()

    def __call__(self, alpha: float) -> tuple[float, float]:
        alpha = float(alpha)
        with self._lock:
            hit = self.cache.get(alpha)
        if hit is not None:
            return hit
        out = _legendre(self.law, alpha, self.tol)
        with self._lock:
            self.cache[alpha] = out
        return out

    def value(self, alpha: float) -> float:
        return self(alpha)[0]

    def values(self, alphas) -> np.ndarray:
        return np.array([self(a)[0] for a in np.ravel(alphas)]).reshape(np.shape(alphas))


def legendre(law: Law | LegendreTransform, alpha: float) -> tuple[float, float]:
    """Return ``(Lambda(alpha), argmax lambda)``; infinite values allowed."""
    lt = law if isinstance(law, LegendreTransform) else LegendreTransform(law)
    return lt(alpha)


_BRACKET_CAP = 1e6


def _legendre(law: Law, alpha: float, tol: float) -> tuple[float, float]:
    lo_s, hi_s = law.support
    if alpha > hi_s:
        return INF, INF
    if alpha < lo_s:
        return INF, -INF
    if alpha == hi_s or alpha == lo_s:
        mass = law.edge_mass(alpha)
        lam = INF if alpha == hi_s else -INF
        if lo_s == hi_s:
            return 0.0, 0.0
        return (-math.log(mass) if mass > 0 else INF), lam

    mean = law.mean
    if alpha == mean:
        return 0.0, 0.0
    sign = 1.0 if alpha > mean else -1.0
    dom = law.domain
    end = dom.lambda_plus if sign > 0 else -dom.lambda_minus
    end_finite_psi = dom.finite_at_plus if sign > 0 else dom.finite_at_minus

    def slope(u):  # derivative of the objective along the search direction
        return sign * (alpha - law.cumulant_derivative(sign * u))

    def objective(u):
        k = law.cumulant(sign * u)
        return -INF if k == INF else sign * u * alpha - k

    a = 0.0
    if math.isfinite(end):
        # clip towards the endpoint until the objective turns down
        eps = 0.5 * end
        b = end - eps
        while slope(b) > 0:
            a = b
            eps *= 0.5
            b = end - eps
            if b >= end or eps < end * 1e-17:
                if end_finite_psi:
                    return objective(end), sign * end
                return INF, sign * end
    else:
        b = 1.0
        while slope(b) > 0:
            a = b
            b *= 2.0
            if b > _BRACKET_CAP:
                return objective(b), sign * INF

    # bisection on the decreasing derivative of the concave objective
    for _ in range(200):
        if b - a <= tol * 1e-3 * max(1.0, b):
            break
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if slope(m) > 0:
            a = m
        else:
            b = m
    u = 0.5 * (a + b)
    best = max((objective(x), x) for x in (a, u, b))
    return best[0], sign * best[1]


def tilt_mean(law: Law, lam: float) -> float:
    """Mean of the law tilted by ``lam`` (cumulant derivative)."""
    return law.cumulant_derivative(lam)
