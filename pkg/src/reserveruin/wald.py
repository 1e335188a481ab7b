"""Wald's approximation for ruin of a general random walk.

The adjustment coefficient ``theta`` is the non-zero root of
``E[exp(theta X)] = 1``.  Neglecting the overshoot at absorption, optional
stopping of the martingale ``exp(theta S_n)`` gives

    rho_k(x) ~ (1 - e^{theta (k-x)}) / (e^{-theta x} - e^{theta (k-x)}),

with the limits ``(k - x) / k`` for a zero-mean step and ``e^{theta x}`` for
an unbounded upper side.  For a two-point step there is no overshoot and the
approximation is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .model import DomainError, Gaussian, IncrementDistribution

__all__ = [
    "AdjustmentCoefficient",
    "ZeroMean",
    "NoRoot",
    "NoRootError",
    "solve_adjustment",
    "ruin_wald_bounded",
    "ruin_wald_unbounded",
    "ruin_gaussian_bounded",
    "ruin_gaussian_unbounded",
]

ZERO_MEAN_TOL = 1e-12
_BISECT_WIDTH = 1e-14
_MAX_DOUBLINGS = 2000


@dataclass(frozen=True)
class AdjustmentCoefficient:
    theta: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class ZeroMean:
    """The step has zero mean: ``theta = 0`` is the only root."""

    mean: float


@dataclass(frozen=True)
class NoRoot:
    """The MGF diverges before returning to 1."""

    reason: str


class NoRootError(DomainError):
    """Wald's approximation is unavailable for this distribution."""


def solve_adjustment(d: IncrementDistribution) -> Union[AdjustmentCoefficient, ZeroMean, NoRoot]:
    """Find the non-zero root of ``mgf(d, theta) = 1``.

    The root lies on the side opposite to the sign of the mean.  A bracket is
    built by doubling (or halving) a trial step of ``2|mean|/variance``, which
    is exact for Gaussian steps, then bisected to width ``1e-14`` and
    polished with one Newton step.
    """
    m = d.mean
    var = d.variance
    if not (var > 0):
        raise DomainError("degenerate increment distribution (zero variance)")
    if abs(m) <= ZERO_MEAN_TOL:
        return ZeroMean(m)

    direction = -1.0 if m > 0 else 1.0
    f = lambda th: d.mgf(th) - 1.0  # noqa: E731
    its = 0

    hi = direction * 2.0 * abs(m) / var
    fhi = f(hi)
    its += 1
    if fhi == 0.0:
        return AdjustmentCoefficient(hi, 0.0, its)
    if fhi > 0.0:
        lo = hi
        while True:
            lo = 0.5 * lo
            flo = f(lo)
            its += 1
            if flo == 0.0:
                return AdjustmentCoefficient(lo, 0.0, its)
            if flo < 0.0:
                break
            hi = lo
            if its > _MAX_DOUBLINGS:
                return NoRoot("no point with mgf < 1 found near 0")
    else:
        lo = hi
        while fhi < 0.0:
            lo = hi
            hi = 2.0 * hi
            fhi = f(hi)
            its += 1
            if fhi == 0.0:
                return AdjustmentCoefficient(hi, 0.0, its)
            if its > _MAX_DOUBLINGS:
                return NoRoot("mgf stays below 1")

    # f(lo) < 0 <= f(hi); f(hi) may be +inf.
    while abs(hi - lo) > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        its += 1
        if fm == 0.0:
            lo = hi = mid
            break
        if fm < 0.0:
            lo = mid
        else:
            hi = mid

    best = lo if abs(f(lo)) <= abs(f(hi)) else hi
    fb = f(best)
    if not math.isfinite(fb):
        return NoRoot("mgf diverges before crossing 1")
    deriv = d.mgf_derivative(best)
    if math.isfinite(deriv) and deriv != 0.0:
        cand = best - fb / deriv
        fc = f(cand)
        its += 1
        if math.isfinite(fc) and abs(fc) < abs(fb):
            best, fb = cand, fc
    if abs(fb) > 1e-9:
        return NoRoot(f"root search stalled with residual {abs(fb):.3g}")
    return AdjustmentCoefficient(best, abs(fb), its)


def _theta_or_raise(d: IncrementDistribution) -> Optional[float]:
    """Adjustment coefficient, or ``None`` for a zero-mean step."""
    sol = solve_adjustment(d)
    if isinstance(sol, ZeroMean):
        return None
    if isinstance(sol, NoRoot):
        raise NoRootError(f"no adjustment coefficient for {d!r}: {sol.reason}")
    return sol.theta


def _wald_ratio(theta: float, x: float, k: float) -> float:
    # Same expression as (1 - e^{t(k-x)}) / (e^{-tx} - e^{t(k-x)}), rearranged
    # so every exponential argument is nonpositive.
    if theta > 0.0:
        return math.expm1(-theta * (k - x)) / math.expm1(-theta * k)
    return math.exp(theta * x) * math.expm1(theta * (k - x)) / math.expm1(theta * k)


def _check_bounded(x, k):
    if not (0 < x < k):
        raise DomainError(f"need 0 < x < k, got x={x!r}, k={k!r}")


def ruin_wald_bounded(x: float, k: float, d: IncrementDistribution) -> float:
    """Approximate probability of dropping to ``<= 0`` before reaching ``>= k`` from ``x``."""
    _check_bounded(x, k)
    theta = _theta_or_raise(d)
    if theta is None:
        return (k - x) / k
    return _wald_ratio(theta, x, k)


def ruin_wald_unbounded(x: float, d: IncrementDistribution) -> float:
    """Approximate eventual ruin probability: ``e^{theta x}`` for positive drift, else 1."""
    if not (x > 0):
        raise DomainError(f"need x > 0, got x={x!r}")
    theta = _theta_or_raise(d)
    if theta is None or theta >= 0.0:
        return 1.0
    return math.exp(theta * x)


def ruin_gaussian_bounded(x: float, k: float, mu: float, sigma: float) -> float:
    """Wald approximation for normal steps, with ``theta = -2 mu / sigma^2`` substituted."""
    Gaussian(mu, sigma)
    _check_bounded(x, k)
    if abs(mu) <= ZERO_MEAN_TOL:
        return (k - x) / k
    return _wald_ratio(-2.0 * mu / sigma ** 2, x, k)


def ruin_gaussian_unbounded(x: float, mu: float, sigma: float) -> float:
    """``exp(-2 mu x / sigma^2)`` for ``mu > 0``; certain ruin otherwise."""
    Gaussian(mu, sigma)
    if not (x > 0):
        raise DomainError(f"need x > 0, got x={x!r}")
    if mu <= ZERO_MEAN_TOL:
        return 1.0
    return math.exp(-2.0 * mu * x / sigma ** 2)
