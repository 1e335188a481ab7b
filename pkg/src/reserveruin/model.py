"""Domain types: increment distributions, scenarios and estimate records.

Three increment laws are supported, matching the reserve processes handled by
the closed-form engines:

* :class:`TwoPoint` -- the +/-1 step of the simple random walk,
* :class:`Gaussian` -- normally distributed reserve variation,
* :class:`Cashflow` -- contributions minus pensions, ``X = xi - eta`` with
  ``xi`` and ``eta`` independent and themselves TwoPoint or Gaussian.

All types are frozen dataclasses and safe to share between workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np

__all__ = [
    "DomainError",
    "TwoPoint",
    "Gaussian",
    "Cashflow",
    "IncrementDistribution",
    "WalkScenario",
    "AlmScenario",
    "Method",
    "RuinEstimate",
    "CostEstimate",
    "mgf",
    "mgf_derivative",
    "mean",
    "variance",
    "sample",
]

# Largest argument for which exp() stays finite.
_EXP_MAX = 709.782712893384


class DomainError(ValueError):
    """Raised when an input violates a documented invariant."""


def _exp(v: float) -> float:
    return math.inf if v > _EXP_MAX else math.exp(v)


@dataclass(frozen=True)
class TwoPoint:
    """Step of +1 with probability ``p`` and -1 with probability ``q = 1 - p``."""

    p: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"TwoPoint requires 0 < p < 1, got p={self.p!r}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def mgf(self, theta: float) -> float:
        return self.p * _exp(theta) + self.q * _exp(-theta)

    def mgf_derivative(self, theta: float) -> float:
        return self.p * _exp(theta) - self.q * _exp(-theta)

    @property
    def mean(self) -> float:
        return 2.0 * self.p - 1.0

    @property
    def variance(self) -> float:
        return 1.0 - (2.0 * self.p - 1.0) ** 2

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        return np.where(u < self.p, 1.0, -1.0) if size is not None else (1.0 if u < self.p else -1.0)


@dataclass(frozen=True)
class Gaussian:
    """Normal step with mean ``mu`` and standard deviation ``sigma``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0) or not math.isfinite(self.sigma):
            raise DomainError(f"Gaussian requires sigma > 0, got sigma={self.sigma!r}")
        if not math.isfinite(self.mu):
            raise DomainError(f"Gaussian requires a finite mu, got mu={self.mu!r}")

    def mgf(self, theta: float) -> float:
        return _exp(theta * self.mu + 0.5 * theta * theta * self.sigma ** 2)

    def mgf_derivative(self, theta: float) -> float:
        return (self.mu + theta * self.sigma ** 2) * self.mgf(theta)

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def variance(self) -> float:
        return self.sigma ** 2

    def sample(self, rng: np.random.Generator, size=None):
        return rng.normal(self.mu, self.sigma, size)


@dataclass(frozen=True)
class Cashflow:
    """Reserve variation ``contribution - pension`` of two independent laws.

    Nesting is limited to one level: neither side may itself be a Cashflow.
    """

    contribution: Union[TwoPoint, Gaussian]
    pension: Union[TwoPoint, Gaussian]

    def __post_init__(self):
        for name in ("contribution", "pension"):
            inner = getattr(self, name)
            if isinstance(inner, Cashflow):
                raise DomainError(f"Cashflow {name} may not itself be a Cashflow")
            if not isinstance(inner, (TwoPoint, Gaussian)):
                raise DomainError(f"Cashflow {name} must be TwoPoint or Gaussian, got {inner!r}")

    def mgf(self, theta: float) -> float:
        return self.contribution.mgf(theta) * self.pension.mgf(-theta)

    def mgf_derivative(self, theta: float) -> float:
        xi, eta = self.contribution, self.pension
        return (xi.mgf_derivative(theta) * eta.mgf(-theta)
                - xi.mgf(theta) * eta.mgf_derivative(-theta))

    @property
    def mean(self) -> float:
        return self.contribution.mean - self.pension.mean

    @property
    def variance(self) -> float:
        return self.contribution.variance + self.pension.variance

    def sample(self, rng: np.random.Generator, size=None):
        return self.contribution.sample(rng, size) - self.pension.sample(rng, size)


IncrementDistribution = Union[TwoPoint, Gaussian, Cashflow]


def mgf(d: IncrementDistribution, theta: float) -> float:
    """``E[exp(theta X)]``; ``inf`` where the expectation diverges."""
    return d.mgf(theta)


def mgf_derivative(d: IncrementDistribution, theta: float) -> float:
    return d.mgf_derivative(theta)


def mean(d: IncrementDistribution) -> float:
    return d.mean


def variance(d: IncrementDistribution) -> float:
    return d.variance


def sample(d: IncrementDistribution, rng: np.random.Generator, size=None):
    """Draw from ``d`` using a numpy Generator (one value, or an array of ``size``)."""
    return d.sample(rng, size)


def _is_int(v: float) -> bool:
    return float(v).is_integer()


@dataclass(frozen=True)
class WalkScenario:
    """Initial reserve ``x``, upper barrier ``k`` (``None`` = unbounded), step law."""

    x: float
    k: Optional[float]
    increments: IncrementDistribution

    def __post_init__(self):
        if not (self.x > 0):
            raise DomainError(f"initial reserve must satisfy x > 0, got x={self.x!r}")
        if self.k is not None and not (self.k > self.x):
            raise DomainError(f"upper barrier must satisfy k > x, got x={self.x!r}, k={self.k!r}")
        if isinstance(self.increments, TwoPoint):
            if not _is_int(self.x) or (self.k is not None and not _is_int(self.k)):
                raise DomainError("a TwoPoint walk needs integer x and k")

    @property
    def bounded(self) -> bool:
        return self.k is not None


@dataclass(frozen=True)
class AlmScenario:
    """Brownian asset-liability scheme.

    Liabilities grow as ``b * exp(growth * t)``; the log funding ratio
    ``Y(t) = a + mu t + sigma B(t)`` is restarted at ``restart`` each time it
    hits 0, and injections are discounted at rate ``discount``.
    """

    a: float
    b: float
    mu: float
    sigma: float
    growth: float
    discount: float
    restart: float

    def __post_init__(self):
        checks = [
            (self.a > 0, f"a > 0 (got a={self.a!r})"),
            (self.b > 0, f"b > 0 (got b={self.b!r})"),
            (self.sigma > 0, f"sigma > 0 (got sigma={self.sigma!r})"),
            (self.mu < 0, f"mu < 0 (got mu={self.mu!r})"),
            (self.restart > 0, f"restart > 0 (got restart={self.restart!r})"),
            (self.discount > self.growth,
             f"r > growth (got r={self.discount!r}, growth={self.growth!r})"),
        ]
        for ok, what in checks:
            if not ok:
                raise DomainError(f"AlmScenario requires {what}")

    @property
    def net_rate(self) -> float:
        """Effective discount rate ``r - growth`` applied to injections."""
        return self.discount - self.growth

    @property
    def injection_factor(self) -> float:
        """``b (e^theta - 1)``: injection at a hit, in units of ``e^{growth t}``."""
        return self.b * math.expm1(self.restart)

    def liabilities(self, t):
        return self.b * np.exp(self.growth * np.asarray(t, dtype=float))

    def warnings(self) -> list[str]:
        # The asset model is stated together with a side condition written as
        # "a b growth + mu sigma > 0"; its intent is unclear so it is only flagged.
        out = []
        if not (self.a * self.b * self.growth + self.mu * self.sigma > 0):
            out.append("side condition a*b*growth + mu*sigma > 0 does not hold")
        return out


class Method(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    WALD_APPROX = "WaldApprox"
    DIFFERENCE_EQUATION = "DifferenceEquation"
    MONTE_CARLO = "MonteCarlo"

    def __str__(self):
        return self.value


def _check_interval(value: float, stderr: float, ci95: tuple[float, float], prob: bool):
    lo, hi = ci95
    if not (lo <= value <= hi):
        raise DomainError(f"estimate {value!r} outside its interval {ci95!r}")
    if stderr < 0:
        raise DomainError("stderr must be nonnegative")
    if prob and not (0.0 <= lo and hi <= 1.0):
        raise DomainError(f"probability interval {ci95!r} not inside [0, 1]")


@dataclass(frozen=True)
class RuinEstimate:
    """A ruin probability with its method tag and uncertainty."""

    value: float
    method: Method
    stderr: float = 0.0
    ci95: tuple[float, float] = None
    n_paths: int = 0
    diagnostics: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.ci95 is None:
            object.__setattr__(self, "ci95", (self.value, self.value))
        object.__setattr__(self, "ci95", tuple(float(v) for v in self.ci95))
        if not (0.0 <= self.value <= 1.0):
            raise DomainError(f"probability {self.value!r} outside [0, 1]")
        _check_interval(self.value, self.stderr, self.ci95, prob=True)

    @classmethod
    def exact(cls, value: float, method: Method, **diagnostics) -> "RuinEstimate":
        return cls(float(value), method, diagnostics=diagnostics)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "ruin",
            "method": str(self.method),
            "value": self.value,
            "stderr": self.stderr,
            "ci95": list(self.ci95),
            "n_paths": self.n_paths,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True)
class CostEstimate:
    """Present value of restart injections, perpetual (``horizon=None``) or up to ``horizon``."""

    value: float
    method: Method
    stderr: float = 0.0
    ci95: tuple[float, float] = None
    n_paths: int = 0
    horizon: Optional[float] = None
    diagnostics: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.ci95 is None:
            object.__setattr__(self, "ci95", (self.value, self.value))
        object.__setattr__(self, "ci95", tuple(float(v) for v in self.ci95))
        if not (self.value >= 0.0):
            raise DomainError(f"cost {self.value!r} must be nonnegative")
        _check_interval(self.value, self.stderr, self.ci95, prob=False)

    @property
    def perpetual(self) -> bool:
        return self.horizon is None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "cost",
            "method": str(self.method),
            "value": self.value,
            "stderr": self.stderr,
            "ci95": list(self.ci95),
            "n_paths": self.n_paths,
            "horizon": "perpetual" if self.horizon is None else self.horizon,
            "diagnostics": dict(self.diagnostics),
        }
