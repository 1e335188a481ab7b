"""Monte Carlo engines for absorbing-barrier walks and Brownian first passage.

Reproducibility contract: path ``i`` of a run with seed ``s`` draws from a
Philox4x32-10 stream keyed by ``s`` with ``i`` in the counter, so its
trajectory is fixed no matter how paths are split across workers.  Per-chunk
results are folded into :class:`Accumulator` objects whose sums are kept
exactly, which makes merging associative and order independent.  Together
these give bit-identical estimates for any worker count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from statistics import NormalDist
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .model import (
    Cashflow,
    DomainError,
    Gaussian,
    IncrementDistribution,
    Method,
    RuinEstimate,
    TwoPoint,
    WalkScenario,
)

__all__ = [
    "WORKERS_ENV",
    "Z95",
    "PathStream",
    "McConfig",
    "Accumulator",
    "PassageTimes",
    "resolve_workers",
    "run_chunks",
    "wilson_interval",
    "mc_ruin_bounded",
    "mc_ruin_unbounded",
    "mc_first_passage",
]

logger = logging.getLogger(__name__)

WORKERS_ENV = "RESERVERUIN_WORKERS"
Z95 = NormalDist().inv_cdf(0.975)
CENSOR_LIMIT = 0.01
_CHUNK = 8192


def stream_key(seed: int) -> tuple[np.uint32, np.uint32]:
    """Philox key words derived from a 64-bit seed."""
    k0, k1 = np.random.SeedSequence(int(seed)).generate_state(2, np.uint32)
    return np.uint32(k0), np.uint32(k1)


@dataclass(frozen=True)
class PathStream:
    """The random stream of one path: ``(seed, path)`` fixes every draw."""

    seed: int
    path: int = 0

    @property
    def key(self):
        return stream_key(self.seed)

    def uniforms(self, n: int) -> np.ndarray:
        """First ``n`` uniforms of this stream, as the kernels consume them."""
        k0, k1 = self.key
        return _kernels.uniform_stream(k0, k1, np.int64(self.path), int(n))


@dataclass(frozen=True)
class McConfig:
    """Sampling budget: path count, seed, per-path step cap, worker count (0 = auto)."""

    n_paths: int = 100_000
    seed: int = 0
    max_steps: Optional[int] = None
    workers: int = 0

    def __post_init__(self):
        if self.n_paths < 100:
            raise DomainError(f"n_paths must be >= 100, got {self.n_paths}")
        if self.max_steps is not None and self.max_steps < 1:
            raise DomainError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.workers < 0:
            raise DomainError(f"workers must be >= 0, got {self.workers}")
        if not (0 <= self.seed < 2 ** 64):
            raise DomainError("seed must be a 64-bit unsigned integer")


def _exact_partials(values) -> tuple[float, ...]:
    """Non-overlapping floats whose exact sum equals ``sum(values)``.

    Repeated correctly rounded ``fsum`` passes peel off 53 bits at a time.
    """
    vals = [float(v) for v in values]
    parts: list[float] = []
    while True:
        s = math.fsum(vals + [-p for p in parts])
        if s == 0.0:
            break
        parts.append(s)
    return tuple(parts)


@dataclass(frozen=True)
class Accumulator:
    """Mergeable running moments of per-path values.

    ``sum`` and ``sum_sq`` are held as exact partial expansions, so ``merge``
    is associative and commutative down to the last bit.
    """

    count: int = 0
    sum_parts: tuple[float, ...] = ()
    sum_sq_parts: tuple[float, ...] = ()
    censored_count: int = 0

    @classmethod
    def from_values(cls, values: np.ndarray, censored: int = 0) -> "Accumulator":
        v = np.asarray(values, dtype=float)
        return cls(int(v.size), _exact_partials(v), _exact_partials(v * v), int(censored))

    def merge(self, other: "Accumulator") -> "Accumulator":
        return Accumulator(
            self.count + other.count,
            _exact_partials(self.sum_parts + other.sum_parts),
            _exact_partials(self.sum_sq_parts + other.sum_sq_parts),
            self.censored_count + other.censored_count,
        )

    @property
    def sum(self) -> float:
        return math.fsum(self.sum_parts)

    @property
    def sum_sq(self) -> float:
        return math.fsum(self.sum_sq_parts)

    @property
    def mean(self) -> float:
        return self.sum / self.count if self.count else math.nan

    @property
    def variance(self) -> float:
        """Unbiased sample variance, clipped at 0."""
        n = self.count
        if n < 2:
            return 0.0
        m = self.mean
        return max(0.0, (self.sum_sq - n * m * m) / (n - 1))

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else math.nan


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None or workers == 0:
        env = os.environ.get(WORKERS_ENV)
        if env:
            workers = int(env)
    if not workers:
        workers = os.cpu_count() or 1
    return max(1, int(workers))


def run_chunks(task: Callable[[int, int], Accumulator], n: int, workers: Optional[int]) -> Accumulator:
    """Run ``task(start, count)`` over ``[0, n)`` in chunks and merge the results."""
    bounds = [(s, min(_CHUNK, n - s)) for s in range(0, n, _CHUNK)]
    w = resolve_workers(workers)
    if w == 1 or len(bounds) == 1:
        parts = [task(s, c) for s, c in bounds]
    else:
        with ThreadPoolExecutor(max_workers=w) as pool:
            parts = list(pool.map(lambda b: task(*b), bounds))
    return reduce(Accumulator.merge, parts, Accumulator())


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ph = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (ph + z2 / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / denom
    lo = max(0.0, centre - half)
    hi = min(1.0, centre + half)
    # Guard against rounding at p-hat = 0 or 1.
    return min(lo, ph), max(hi, ph)


def _encode(d: IncrementDistribution):
    comps = [(d.contribution, 1.0), (d.pension, -1.0)] if isinstance(d, Cashflow) else [(d, 1.0)]
    kinds = np.zeros(len(comps), np.int64)
    signs = np.zeros(len(comps))
    pa = np.zeros(len(comps))
    pb = np.zeros(len(comps))
    for j, (c, sgn) in enumerate(comps):
        signs[j] = sgn
        if isinstance(c, TwoPoint):
            kinds[j] = _kernels.KIND_TWOPOINT
            pa[j] = c.p
        elif isinstance(c, Gaussian):
            kinds[j] = _kernels.KIND_GAUSSIAN
            pa[j], pb[j] = c.mu, c.sigma
        else:
            raise DomainError(f"unsupported increment component {c!r}")
    return kinds, signs, pa, pb


def default_max_steps(k: float, d: IncrementDistribution) -> int:
    """Diffusive step budget ``100 k^2 / variance`` (at least 1000)."""
    return int(max(1000, math.ceil(100.0 * k * k / d.variance)))


def _walk_estimate(x, barrier, d, cfg, max_steps, **diag) -> RuinEstimate:
    key = stream_key(cfg.seed)
    enc = _encode(d)

    def task(start, count):
        status = np.empty(count, np.int8)
        steps = np.empty(count, np.int64)
        _kernels.walk_paths(key[0], key[1], np.int64(start), float(x), float(barrier),
                            *enc, np.int64(max_steps), status, steps)
        decided = status[status != _kernels.CENSORED]
        return Accumulator.from_values(decided == _kernels.RUINED,
                                       censored=count - decided.size)

    acc = run_chunks(task, cfg.n_paths, cfg.workers)
    n = acc.count
    ruined = int(round(acc.sum))
    frac = acc.censored_count / cfg.n_paths
    diagnostics = {
        "decided": n,
        "ruined": ruined,
        "censored": acc.censored_count,
        "censored_fraction": frac,
        "max_steps": int(max_steps),
        "seed": cfg.seed,
        "unreliable": frac > CENSOR_LIMIT,
        **diag,
    }
    if frac > CENSOR_LIMIT:
        logger.warning("%.2f%% of paths censored at max_steps=%d", 100 * frac, max_steps)
    if n == 0:
        # Nothing decided: report total ignorance.
        return RuinEstimate(0.5, Method.MONTE_CARLO, 0.5, (0.0, 1.0), cfg.n_paths, diagnostics)
    ph = ruined / n
    return RuinEstimate(ph, Method.MONTE_CARLO, math.sqrt(ph * (1 - ph) / n),
                        wilson_interval(ruined, n), cfg.n_paths, diagnostics)


def mc_ruin_bounded(s: WalkScenario, cfg: McConfig) -> RuinEstimate:
    """Fraction of walks from ``s.x`` that reach ``<= 0`` before ``>= s.k``.

    Censored paths (still undecided after ``max_steps``) are excluded from
    the estimate and reported in its diagnostics; above 1% the estimate is
    flagged ``unreliable``.
    """
    if not s.bounded:
        raise DomainError("mc_ruin_bounded needs a bounded scenario")
    max_steps = cfg.max_steps or default_max_steps(s.k, s.increments)
    return _walk_estimate(s.x, s.k, s.increments, cfg, max_steps)


def mc_ruin_unbounded(s: WalkScenario, cfg: McConfig, proxy_barrier: float) -> RuinEstimate:
    """Eventual ruin probability, absorbing at a distant ``proxy_barrier``.

    Missing the ruins that would happen after touching the proxy biases the
    estimate low by at most the ruin probability from the proxy level; its
    Wald value ``exp(theta * proxy_barrier)`` is reported as
    ``truncation_bound``.
    """
    from .wald import AdjustmentCoefficient, solve_adjustment

    d = s.increments
    if d.mean <= 0:
        return RuinEstimate.exact(1.0, Method.MONTE_CARLO, flag="a.s. ruin",
                                  reason="nonpositive mean step: ruin is certain")
    if not (proxy_barrier > s.x):
        raise DomainError(f"proxy barrier must exceed x, got {proxy_barrier!r}")
    sol = solve_adjustment(d)
    bound = math.exp(sol.theta * proxy_barrier) if isinstance(sol, AdjustmentCoefficient) else 1.0
    max_steps = cfg.max_steps or default_max_steps(proxy_barrier, d)
    return _walk_estimate(s.x, proxy_barrier, d, cfg, max_steps,
                          proxy_barrier=float(proxy_barrier), truncation_bound=bound)


class PassageTimes(NamedTuple):
    times: np.ndarray
    censored: int


def mc_first_passage(mu: float, sigma: float, a: float, dt: float, cfg: McConfig) -> PassageTimes:
    """Sample first hitting times of 0 by ``a + mu t + sigma B(t)``.

    Steps are exact Gaussian increments; a crossing between grid points is
    detected with the Brownian-bridge probability
    ``exp(-2 y_i y_{i+1} / (sigma^2 dt))`` and dated at the step midpoint.
    """
    if not (mu < 0):
        raise DomainError(f"first passage needs mu < 0, got {mu!r}")
    if not (sigma > 0):
        raise DomainError(f"sigma must be > 0, got {sigma!r}")
    if not (a > 0):
        raise DomainError(f"a must be > 0, got {a!r}")
    if not (dt > 0):
        raise DomainError(f"dt must be > 0, got {dt!r}")
    if cfg.max_steps is not None:
        max_steps = cfg.max_steps
    else:
        # Fifty mean passage times plus fifty diffusive times.
        max_steps = int(math.ceil(50.0 * (a / -mu + sigma ** 2 / mu ** 2) / dt))
    key = stream_key(cfg.seed)
    out = np.empty(cfg.n_paths)

    def task(start, count):
        _kernels.passage_paths(key[0], key[1], np.int64(start), float(a), float(mu),
                               float(sigma), float(dt), np.int64(max_steps),
                               out[start:start + count])
        return Accumulator(count=count)

    run_chunks(task, cfg.n_paths, cfg.workers)
    ok = np.isfinite(out)
    censored = int(out.size - ok.sum())
    if censored:
        logger.warning("%d passage paths censored at %d steps", censored, max_steps)
    return PassageTimes(out[ok], censored)


def laplace_estimate(times: Sequence[float], lam: float) -> tuple[float, float]:
    """Mean and standard error of ``exp(-lam T)`` over passage samples."""
    acc = Accumulator.from_values(np.exp(-lam * np.asarray(times)))
    return acc.mean, acc.stderr
