from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np
import pytest

from oracles import WALD_GAUSS_UNB_3
from reserveruin import _kernels, gambler, simulate, wald
from reserveruin.model import Cashflow, DomainError, Gaussian, Method, TwoPoint, WalkScenario
from reserveruin.simulate import Accumulator, McConfig, PathStream


# -- random streams ---------------------------------------------------------------

def test_philox_known_answers():
    # Published Philox4x32-10 test vectors.
    out = _kernels.philox_block(0, 0, 0, 0, 0, 0)
    assert [int(v) for v in out] == [0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8]
    out = _kernels.philox_block(0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344, 0xA4093822, 0x299F31D0)
    assert [int(v) for v in out] == [0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1]


def test_uniform_stream_properties():
    u = PathStream(seed=1, path=0).uniforms(200_000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) <= 4 * math.sqrt(1 / 12 / u.size)
    assert np.array_equal(u, PathStream(seed=1, path=0).uniforms(200_000))
    assert not np.array_equal(u[:100], PathStream(seed=1, path=1).uniforms(100))
    assert not np.array_equal(u[:100], PathStream(seed=2, path=0).uniforms(100))
    # a prefix of the stream does not depend on how much is drawn
    assert np.array_equal(u[:17], PathStream(seed=1, path=0).uniforms(17))


def test_normal_stream_distribution():
    k0, k1 = simulate.stream_key(123)
    z = np.sort(_kernels.normal_stream(k0, k1, np.int64(5), 1_000_000))
    n = z.size
    assert abs(z.mean()) <= 4 / math.sqrt(n)
    assert abs(z.var() - 1) <= 4 * math.sqrt(2 / n)
    cdf = np.array([NormalDist().cdf(v) for v in z[:: 50]])
    idx = np.arange(0, n, 50)
    ks = max(np.max((idx + 1) / n - cdf), np.max(cdf - idx / n))
    assert ks <= 1.63 / math.sqrt(n) + 50 / n  # 1% critical value, thinned grid slack
    # tails beyond the ziggurat base layer are populated
    tail = np.mean(np.abs(z) > 3.6541528853610088)
    assert tail == pytest.approx(2 * (1 - NormalDist().cdf(3.6541528853610088)), rel=0.2)


# -- accumulator -------------------------------------------------------------------

def _acc(rng, n):
    v = rng.standard_normal(n) * 10.0 ** rng.integers(-12, 12, n)
    return Accumulator.from_values(v), v


def test_accumulator_associative_and_exact(rng):
    (a, va), (b, vb), (c, vc) = (_acc(rng, n) for n in (1000, 7, 513))
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    assert left == right
    assert a.merge(b) == b.merge(a)
    allv = np.concatenate([va, vb, vc])
    assert left.sum == math.fsum(allv)
    assert left.sum_sq == math.fsum(allv * allv)
    assert left == Accumulator.from_values(allv[::-1])


def test_accumulator_moments():
    acc = Accumulator.from_values(np.array([1.0, 2.0, 3.0, 4.0]))
    assert acc.mean == 2.5
    assert acc.variance == pytest.approx(np.var([1, 2, 3, 4], ddof=1))
    assert acc.stderr == pytest.approx(math.sqrt(acc.variance / 4))
    assert math.isnan(Accumulator().mean)


def test_run_chunks_independent_of_workers():
    def task(start, count):
        return Accumulator.from_values(np.sin(np.arange(start, start + count) * 0.37) * 1e3)

    ref = simulate.run_chunks(task, 100_003, 1)
    for w in (2, 3, 8):
        assert simulate.run_chunks(task, 100_003, w) == ref


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(simulate.WORKERS_ENV, "3")
    assert simulate.resolve_workers(None) == 3
    assert simulate.resolve_workers(5) == 5
    monkeypatch.delenv(simulate.WORKERS_ENV)
    assert simulate.resolve_workers(None) >= 1


def test_wilson_interval():
    lo, hi = simulate.wilson_interval(7, 10)
    # Endpoints solve (ph - p)^2 = z^2 p (1 - p) / n, a quadratic in p.
    z2, n, ph = simulate.Z95 ** 2, 10, 0.7
    a, b, c = 1 + z2 / n, -(2 * ph + z2 / n), ph * ph
    disc = math.sqrt(b * b - 4 * a * c)
    assert lo == pytest.approx((-b - disc) / (2 * a), abs=1e-14)
    assert hi == pytest.approx((-b + disc) / (2 * a), abs=1e-14)
    assert (round(lo, 4), round(hi, 4)) == (0.3968, 0.8922)
    assert simulate.wilson_interval(0, 50)[0] == 0.0
    assert simulate.wilson_interval(50, 50)[1] == 1.0


def test_config_validation():
    with pytest.raises(DomainError):
        McConfig(n_paths=10)
    with pytest.raises(DomainError):
        McConfig(max_steps=0)
    with pytest.raises(DomainError):
        McConfig(seed=-1)


# -- walk estimators --------------------------------------------------------------------

def test_simple_walk_against_closed_form():
    est = simulate.mc_ruin_bounded(WalkScenario(3, 10, TwoPoint(0.5)), McConfig(200_000, seed=42))
    assert abs(est.value - 0.7) <= 4 * est.stderr
    assert est.method is Method.MONTE_CARLO and est.n_paths == 200_000
    assert est.ci95[0] <= est.value <= est.ci95[1]
    assert est.diagnostics["censored"] == 0 and not est.diagnostics["unreliable"]
    assert est.diagnostics["ruined"] == round(est.value * est.diagnostics["decided"])


def test_biased_simple_walk():
    est = simulate.mc_ruin_bounded(WalkScenario(5, 10, TwoPoint(0.6)), McConfig(200_000, seed=1))
    assert abs(est.value - gambler.ruin_bounded(5, 10, 0.6)) <= 4 * est.stderr


def test_near_deterministic_up_drift():
    est = simulate.mc_ruin_bounded(WalkScenario(1, 2, TwoPoint(1 - 1e-9)), McConfig(100_000, seed=3))
    assert est.value == 0.0 and est.stderr == 0.0


def test_small_step_gaussian_against_wald():
    d = Gaussian(0.2, 1.0)
    est = simulate.mc_ruin_bounded(WalkScenario(10.0, 20.0, d), McConfig(100_000, seed=5))
    assert abs(est.value - wald.ruin_wald_bounded(10.0, 20.0, d)) <= max(0.01, 4 * est.stderr)


def test_cashflow_walk_against_wald():
    # Difference of normals is normal, so small steps behave like the Gaussian case.
    d = Cashflow(Gaussian(1.2, 0.6), Gaussian(1.0, 0.8))
    est = simulate.mc_ruin_bounded(WalkScenario(10.0, 20.0, d), McConfig(100_000, seed=6))
    assert abs(est.value - wald.ruin_wald_bounded(10.0, 20.0, d)) <= max(0.01, 4 * est.stderr)


def test_censoring_is_reported_not_hidden():
    # From 3 with barriers 0 and 10, nothing can win in 5 steps; only
    # ruins at steps 3 or 5 are decided: probability 1/8 + 3/32 = 7/32.
    n = 100_000
    est = simulate.mc_ruin_bounded(WalkScenario(3, 10, TwoPoint(0.5)), McConfig(n, seed=0, max_steps=5))
    d = est.diagnostics
    assert d["decided"] + d["censored"] == n
    assert est.value == 1.0  # censored paths are not counted as survivals
    p = 25 / 32
    assert abs(d["censored_fraction"] - p) <= 4 * math.sqrt(p * (1 - p) / n)
    assert d["unreliable"] and d["max_steps"] == 5


def test_unbounded_twopoint_against_exact():
    s = WalkScenario(2, None, TwoPoint(0.6))
    est = simulate.mc_ruin_unbounded(s, McConfig(200_000, seed=9), proxy_barrier=40)
    assert abs(est.value - 4 / 9) <= 4 * est.stderr
    assert est.diagnostics["truncation_bound"] == pytest.approx((2 / 3) ** 40, rel=1e-12)


def test_unbounded_certain_ruin():
    est = simulate.mc_ruin_unbounded(WalkScenario(3.0, None, Gaussian(-1.0, 2.0)), McConfig(1000), 50.0)
    assert est.value == 1.0 and est.diagnostics["flag"] == "a.s. ruin"


def test_unbounded_far_start_is_zero():
    d = Gaussian(1.0, 2.0)
    est = simulate.mc_ruin_unbounded(WalkScenario(200.0, None, d), McConfig(2000, seed=1), 400.0)
    assert est.value == 0.0 and est.stderr == 0.0


def test_unbounded_overshoot_bias_direction():
    # Large steps overshoot 0, so true ruin is well below the Wald value.
    est = simulate.mc_ruin_unbounded(WalkScenario(3.0, None, Gaussian(1.0, 2.0)),
                                     McConfig(100_000, seed=2), 200.0)
    assert est.value + 4 * est.stderr < WALD_GAUSS_UNB_3


def test_unbounded_proxy_must_exceed_start():
    with pytest.raises(DomainError):
        simulate.mc_ruin_unbounded(WalkScenario(3.0, None, Gaussian(1.0, 2.0)), McConfig(1000), 2.0)


def test_bounded_needs_barrier():
    with pytest.raises(DomainError):
        simulate.mc_ruin_bounded(WalkScenario(3.0, None, Gaussian(1.0, 2.0)), McConfig(1000))


@pytest.mark.parametrize("d,x,k", [(TwoPoint(0.45), 4, 9), (Gaussian(0.3, 1.5), 2.0, 6.0),
                                   (Cashflow(TwoPoint(0.5), Gaussian(0.1, 1.0)), 1.0, 3.0)])
def test_walk_bit_identical_across_workers(d, x, k):
    s = WalkScenario(x, k, d)
    ref = simulate.mc_ruin_bounded(s, McConfig(50_000, seed=17, workers=1)).to_dict()
    for w in (2, 8):
        assert simulate.mc_ruin_bounded(s, McConfig(50_000, seed=17, workers=w)).to_dict() == ref


def test_seed_changes_estimate():
    s = WalkScenario(3, 10, TwoPoint(0.5))
    a = simulate.mc_ruin_bounded(s, McConfig(10_000, seed=1)).value
    b = simulate.mc_ruin_bounded(s, McConfig(10_000, seed=2)).value
    assert a != b


# -- first passage ------------------------------------------------------------------------

def test_passage_mean_and_laplace():
    pt = simulate.mc_first_passage(-0.5, 1.0, 1.0, 1e-3, McConfig(20_000, seed=4))
    t = pt.times
    assert pt.censored == 0
    assert abs(t.mean() - 2.0) <= 4 * t.std(ddof=1) / math.sqrt(t.size)
    m, se = simulate.laplace_estimate(t, 0.5)
    assert abs(m - math.exp(-(math.sqrt(1.25) - 0.5))) <= 4 * se


def test_passage_near_barrier_is_immediate():
    pt = simulate.mc_first_passage(-0.5, 1.0, 1e-9, 1e-3, McConfig(1000, seed=0))
    assert pt.times.max() < 0.05


def test_passage_bit_identical_across_workers():
    ref = simulate.mc_first_passage(-0.5, 1.0, 1.0, 1e-2, McConfig(20_000, seed=3, workers=1)).times
    got = simulate.mc_first_passage(-0.5, 1.0, 1.0, 1e-2, McConfig(20_000, seed=3, workers=8)).times
    assert np.array_equal(ref, got)


def test_passage_censoring():
    pt = simulate.mc_first_passage(-0.5, 1.0, 5.0, 1e-2, McConfig(1000, seed=0, max_steps=10))
    assert pt.censored == 1000 - pt.times.size and pt.censored > 900


def test_passage_domain():
    with pytest.raises(DomainError):
        simulate.mc_first_passage(0.5, 1.0, 1.0, 1e-3, McConfig(1000))
    with pytest.raises(DomainError):
        simulate.mc_first_passage(-0.5, 1.0, 0.0, 1e-3, McConfig(1000))
