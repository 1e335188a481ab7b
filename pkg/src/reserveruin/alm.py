"""Brownian asset-liability management with a restart policy.

Assets follow ``A(t) = b exp(a + (growth + mu) t + sigma B(t))`` and
liabilities ``L(t) = b exp(growth t)``, so the log funding ratio
``Y(t) = ln A(t)/L(t) = a + mu t + sigma B(t)`` is a drifted Brownian motion
started at ``a``.  Each time ``Y`` hits 0 the fund receives
``L(T_n) (e^theta - 1)``, which puts ``Y`` back at ``theta``.

With ``lam = r - growth`` the first-passage Laplace transform of ``Y`` is
``E[exp(-lam T)] = exp(-K a)`` where

    K = (mu + sqrt(mu^2 + 2 lam sigma^2)) / sigma^2,

and the restart times form a delayed renewal sequence, so the expected
perpetual cost is a geometric series in ``exp(-K theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .model import AlmScenario, CostEstimate, DomainError, Method
from .simulate import Z95, Accumulator, PathStream, run_chunks, stream_key

__all__ = [
    "RestartEvent",
    "AlmPath",
    "AlmGrid",
    "passage_exponent",
    "perpetual_cost",
    "perpetual_cost_limit",
    "perpetual_horizon",
    "simulate_alm_path",
    "simulate_alm_grid",
    "simulate_perpetual_cost",
    "simulate_finite_cost",
]

# Discount decay at which a perpetual simulation is truncated.
TAIL_DECAY = 1e-6


def passage_exponent(mu: float, sigma: float, lam: float) -> float:
    """Exponent ``K`` with ``E[exp(-lam T)] = exp(-K a)`` for passage of ``a + mu t + sigma B`` to 0.

    Evaluated as ``2 lam / (sqrt(mu^2 + 2 lam sigma^2) - mu)``, which equals
    the textbook root but has no cancellation for small ``lam``.
    """
    if not (mu < 0):
        raise DomainError(f"passage exponent needs mu < 0, got {mu!r}")
    if not (sigma > 0):
        raise DomainError(f"passage exponent needs sigma > 0, got {sigma!r}")
    if not (lam > 0):
        raise DomainError(f"passage exponent needs lambda > 0, got {lam!r}")
    return 2.0 * lam / (math.sqrt(mu * mu + 2.0 * lam * sigma * sigma) - mu)


def _k(s: AlmScenario) -> float:
    return passage_exponent(s.mu, s.sigma, s.net_rate)


def perpetual_cost(s: AlmScenario) -> CostEstimate:
    """Expected present value of all future injections, ``b (e^theta - 1) e^{-K a} / (1 - e^{-K theta})``."""
    k = _k(s)
    v = s.b * math.expm1(s.restart) * math.exp(-k * s.a) / -math.expm1(-k * s.restart)
    return CostEstimate(v, Method.CLOSED_FORM, diagnostics={"K": k})


def perpetual_cost_limit(s: AlmScenario) -> CostEstimate:
    """Small-restart limit ``b e^{-K a} / K`` (the restart size is ignored)."""
    k = _k(s)
    return CostEstimate(s.b * math.exp(-k * s.a) / k, Method.CLOSED_FORM, diagnostics={"K": k})


@dataclass(frozen=True)
class RestartEvent:
    time: float
    injection: float
    discounted: float


@dataclass(frozen=True)
class AlmPath:
    events: tuple[RestartEvent, ...]
    horizon: float
    discounted_total: float


@dataclass(frozen=True)
class AlmGrid:
    """One path on its simulation grid: times, log ratio, assets and liabilities."""

    t: np.ndarray
    y: np.ndarray
    assets: np.ndarray
    liabilities: np.ndarray
    restart_times: np.ndarray


def _check_steps(horizon, dt):
    if not (horizon > 0):
        raise DomainError(f"horizon must be > 0, got {horizon!r}")
    if not (dt > 0):
        raise DomainError(f"dt must be > 0, got {dt!r}")


def _single(s, horizon, dt, rng, record):
    _check_steps(horizon, dt)
    k0, k1 = rng.key
    return _kernels.alm_single(k0, k1, np.int64(rng.path), float(s.a), float(s.mu),
                               float(s.sigma), float(s.restart), float(horizon),
                               float(dt), record)


def simulate_alm_path(s: AlmScenario, horizon: float, dt: float, rng: PathStream) -> AlmPath:
    """Simulate one path of the restart scheme up to ``horizon``.

    Crossings between grid points are caught with the Brownian-bridge
    probability and dated at the step midpoint; the clock then restarts
    from that time with ``Y = theta``.
    """
    times, _, _ = _single(s, horizon, dt, rng, False)
    factor = math.expm1(s.restart)
    events = []
    for t in times:
        inj = s.b * math.exp(s.growth * t) * factor
        events.append(RestartEvent(float(t), inj, inj * math.exp(-s.discount * t)))
    total = math.fsum(e.discounted for e in events)
    return AlmPath(tuple(events), float(horizon), total)


def simulate_alm_grid(s: AlmScenario, horizon: float, dt: float, rng: PathStream) -> AlmGrid:
    """Same path as :func:`simulate_alm_path` with the visited grid recorded."""
    times, t, y = _single(s, horizon, dt, rng, True)
    liab = s.liabilities(t)
    return AlmGrid(t, y, liab * np.exp(y), liab, times)


def perpetual_horizon(s: AlmScenario, tail: float = TAIL_DECAY) -> float:
    """Horizon after which discounting has decayed below ``tail``."""
    return math.log(1.0 / tail) / s.net_rate


def _cost_mc(s: AlmScenario, horizon: float, n_paths: int, dt: float, seed: int,
             workers: Optional[int]):
    if n_paths < 100:
        raise DomainError(f"n_paths must be >= 100, got {n_paths}")
    if not (dt > 0):
        raise DomainError(f"dt must be > 0, got {dt!r}")
    if horizon < 0:
        raise DomainError(f"horizon must be >= 0, got {horizon!r}")
    k0, k1 = stream_key(seed)
    factor = s.injection_factor
    event_counts = np.zeros(n_paths, np.int64)

    def task(start, count):
        disc = np.empty(count)
        _kernels.alm_paths(k0, k1, np.int64(start), float(s.a), float(s.mu), float(s.sigma),
                           float(s.restart), float(s.net_rate), float(horizon), float(dt),
                           disc, event_counts[start:start + count])
        return Accumulator.from_values(factor * disc)

    acc = run_chunks(task, n_paths, workers)
    mean = acc.mean
    se = acc.stderr
    diag = {
        "dt": dt,
        "seed": seed,
        "mean_events": float(event_counts.mean()),
        "max_events": int(event_counts.max()),
    }
    return mean, se, diag


def _estimate(mean, se, n_paths, horizon, diag):
    lo = max(0.0, mean - Z95 * se)
    return CostEstimate(mean, Method.MONTE_CARLO, se, (lo, mean + Z95 * se), n_paths,
                        horizon, diag)


def simulate_perpetual_cost(s: AlmScenario, n_paths: int = 100_000, horizon: Optional[float] = None,
                            dt: float = 1e-3, seed: int = 0,
                            workers: Optional[int] = None) -> CostEstimate:
    """Monte Carlo estimate of the perpetual cost, truncated at ``horizon``.

    By default the horizon is where ``exp(-(r - growth) horizon) <= 1e-6``.
    Whatever state the fund is in at the horizon, its remaining expected cost
    is at most that of a fund sitting on the barrier, so the truncation bias
    is bounded by ``exp(-(r - growth) horizon) * v(0, theta)``; this bound
    is reported in the diagnostics.
    """
    h = perpetual_horizon(s) if horizon is None else float(horizon)
    _check_steps(h, dt)
    mean, se, diag = _cost_mc(s, h, n_paths, dt, seed, workers)
    k = _k(s)
    worst = s.injection_factor / -math.expm1(-k * s.restart)
    bound = math.exp(-s.net_rate * h) * worst
    diag.update({
        "truncation_horizon": h,
        "truncation_bound": bound,
        "truncation_relative": bound / mean if mean > 0 else math.inf,
    })
    return _estimate(mean, se, n_paths, None, diag)


def simulate_finite_cost(s: AlmScenario, t: float, n_paths: int = 100_000, dt: float = 1e-3,
                         seed: int = 0, workers: Optional[int] = None) -> CostEstimate:
    """Monte Carlo estimate of the discounted cost of restarts up to time ``t``.

    Paths are drawn from per-path streams, so for a fixed seed the estimate
    is nondecreasing in ``t`` path by path.
    """
    if t == 0:
        return CostEstimate(0.0, Method.MONTE_CARLO, 0.0, (0.0, 0.0), n_paths, 0.0,
                            {"dt": dt, "seed": seed, "mean_events": 0.0, "max_events": 0})
    mean, se, diag = _cost_mc(s, float(t), n_paths, dt, seed, workers)
    return _estimate(mean, se, n_paths, float(t), diag)
