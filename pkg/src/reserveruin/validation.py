"""Cross-validation matrix: every closed form against an independent oracle.

Used by ``reserveruin validate``.  Each check reports the largest measured
error next to the tolerance it was held to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import alm, gambler, simulate, wald
from .model import AlmScenario, Gaussian, TwoPoint, WalkScenario

__all__ = ["CheckResult", "ValidationSizes", "run_checks"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    error: float
    tolerance: float
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "error": self.error,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ValidationSizes:
    walk_paths: int
    gaussian_paths: int
    passage_paths: int
    alm_paths: int
    z: float  # stderr multiple for Monte Carlo checks

    @classmethod
    def default(cls) -> "ValidationSizes":
        return cls(1_000_000, 200_000, 100_000, 20_000, 4.0)

    @classmethod
    def quick(cls) -> "ValidationSizes":
        return cls(100_000, 20_000, 20_000, 4_000, 5.0)


GRID_K = (2, 5, 10, 50, 200)
GRID_P = (0.1, 0.3, 0.5, 0.7, 0.9)


def _grid():
    for k in GRID_K:
        for p in GRID_P:
            for x in range(1, k):
                yield x, k, p


def check_difference_equation() -> CheckResult:
    err = max(abs(gambler.ruin_difference_equation(x, k, p) - gambler.ruin_bounded(x, k, p))
              for x, k, p in _grid())
    return CheckResult("difference_equation_vs_closed_form", err <= 1e-10, err, 1e-10)


def check_borders() -> CheckResult:
    err = 0.0
    for k in GRID_K:
        for p in GRID_P:
            err = max(err, abs(gambler.ruin_bounded(0, k, p) - 1.0), abs(gambler.ruin_bounded(k, k, p)))
        for x in range(k + 1):
            err = max(err, abs(gambler.ruin_bounded(x, k, 0.5) - (k - x) / k))
    return CheckResult("border_and_symmetric_values", err <= 1e-15, err, 1e-15)


def check_wald_lattice() -> CheckResult:
    err = 0.0
    for x, k, p in _grid():
        d = TwoPoint(p)
        err = max(err,
                  abs(wald.ruin_wald_bounded(x, k, d) - gambler.ruin_bounded(x, k, p)),
                  abs(wald.ruin_wald_unbounded(x, d) - gambler.ruin_unbounded(x, p)))
    return CheckResult("wald_twopoint_vs_exact", err <= 1e-12, err, 1e-12)


def check_adjustment(seed: int, n: int = 1000) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    sign_ok = True
    for i in range(n):
        if i % 2:
            d = Gaussian(float(rng.uniform(-2, 2)), float(rng.uniform(0.2, 3)))
        else:
            d = TwoPoint(float(rng.uniform(0.02, 0.98)))
        sol = wald.solve_adjustment(d)
        if isinstance(sol, wald.AdjustmentCoefficient):
            worst = max(worst, abs(d.mgf(sol.theta) - 1.0))
            sign_ok &= (sol.theta < 0) == (d.mean > 0)
        elif not isinstance(sol, wald.ZeroMean):
            worst = math.inf
    return CheckResult("adjustment_coefficient_residual", worst <= 1e-12 and sign_ok, worst,
                       1e-12, {"sign_law": sign_ok, "n": n})


def _mc_check(name, est, target, tol, **detail) -> CheckResult:
    err = abs(est.value - target)
    return CheckResult(name, err <= tol, err, tol,
                       {"estimate": est.value, "target": target, "stderr": est.stderr, **detail})


def check_mc_simple(sz: ValidationSizes, seed: int, workers) -> CheckResult:
    cfg = simulate.McConfig(sz.walk_paths, seed, workers=workers or 0)
    est = simulate.mc_ruin_bounded(WalkScenario(3, 10, TwoPoint(0.5)), cfg)
    target = gambler.ruin_bounded(3, 10, 0.5)
    return _mc_check("mc_simple_walk_vs_closed_form", est, target, sz.z * est.stderr)


def check_mc_gaussian(sz: ValidationSizes, seed: int, workers) -> list[CheckResult]:
    # Small steps relative to the barriers, where overshoot is minor.
    out = []
    for mu in (0.2, -0.2):
        d = Gaussian(mu, 1.0)
        cfg = simulate.McConfig(sz.gaussian_paths, seed, workers=workers or 0)
        est = simulate.mc_ruin_bounded(WalkScenario(10.0, 20.0, d), cfg)
        target = wald.ruin_wald_bounded(10.0, 20.0, d)
        out.append(_mc_check(f"mc_gaussian_walk_vs_wald[mu={mu}]", est, target,
                             max(0.01, sz.z * est.stderr)))
    return out


def check_passage(sz: ValidationSizes, seed: int, workers) -> list[CheckResult]:
    mu, sigma, dt = -0.5, 1.0, 1e-3
    out = []
    for a in (0.5, 1.0, 2.0):
        cfg = simulate.McConfig(sz.passage_paths, seed, workers=workers or 0)
        pt = simulate.mc_first_passage(mu, sigma, a, dt, cfg)
        t = pt.times
        se_t = t.std(ddof=1) / math.sqrt(t.size)
        err = abs(t.mean() - a / -mu)
        out.append(CheckResult(f"passage_mean[a={a}]", err <= sz.z * se_t, err, sz.z * se_t,
                               {"estimate": float(t.mean()), "target": a / -mu,
                                "censored": pt.censored}))
        for lam in (0.1, 0.5, 1.0):
            m, se = simulate.laplace_estimate(t, lam)
            target = math.exp(-alm.passage_exponent(mu, sigma, lam) * a)
            err = abs(m - target)
            out.append(CheckResult(f"passage_laplace[a={a},lambda={lam}]", err <= sz.z * se, err,
                                   sz.z * se, {"estimate": m, "target": target}))
    return out


def check_alm(sz: ValidationSizes, seed: int, workers) -> CheckResult:
    s = AlmScenario(a=0.2, b=1.0, mu=-0.5, sigma=1.0, growth=0.0, discount=0.5, restart=0.1)
    target = alm.perpetual_cost(s).value
    est = alm.simulate_perpetual_cost(s, n_paths=sz.alm_paths, dt=1e-3, seed=seed, workers=workers)
    return _mc_check("alm_cost_mc_vs_closed_form", est, target,
                     sz.z * est.stderr + 0.02 * target)


def check_limits() -> list[CheckResult]:
    err = 0.0
    for mu in (1e-8, -1e-8):
        err = max(err, abs(wald.ruin_wald_bounded(2.0, 5.0, Gaussian(mu, 1.0)) - 0.6))
    out = [CheckResult("wald_zero_mean_continuity", err <= 1e-6, err, 1e-6)]
    err = 0.0
    for p in (0.6, 0.7):
        for x in (1, 5, 20):
            err = max(err, abs(gambler.ruin_bounded(x, 10_000, p) - ((1 - p) / p) ** x))
    out.append(CheckResult("simple_walk_infinite_target_limit", err <= 1e-8, err, 1e-8))
    s = AlmScenario(a=0.2, b=1.0, mu=-0.5, sigma=1.0, growth=0.0, discount=0.5, restart=1e-6)
    lim = alm.perpetual_cost_limit(s).value
    rel = abs(alm.perpetual_cost(s).value - lim) / lim
    out.append(CheckResult("alm_small_restart_limit", rel <= 1e-4, rel, 1e-4))
    return out


def run_checks(quick: bool = False, seed: int = 0, workers: Optional[int] = None,
               progress: Optional[Callable[[CheckResult], None]] = None) -> list[CheckResult]:
    sz = ValidationSizes.quick() if quick else ValidationSizes.default()
    steps = [
        lambda: [check_difference_equation()],
        lambda: [check_borders()],
        lambda: [check_wald_lattice()],
        lambda: [check_adjustment(seed)],
        check_limits,
        lambda: [check_mc_simple(sz, seed, workers)],
        lambda: check_mc_gaussian(sz, seed, workers),
        lambda: check_passage(sz, seed, workers),
        lambda: [check_alm(sz, seed, workers)],
    ]
    results = []
    for step in steps:
        for r in step():
            results.append(r)
            if progress:
                progress(r)
    return results
