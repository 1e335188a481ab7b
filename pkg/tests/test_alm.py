from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import COST_LIMIT_REF, COST_REF, K_REF
from reserveruin import alm
from reserveruin.model import AlmScenario, DomainError, Method
from reserveruin.simulate import PathStream

REF = dict(a=0.2, b=1.0, mu=-0.5, sigma=1.0, growth=0.0, discount=0.5, restart=0.1)


def scen(**kw) -> AlmScenario:
    return AlmScenario(**{**REF, **kw})


# -- passage exponent ---------------------------------------------------------------

def test_passage_exponent_example():
    assert alm.passage_exponent(-0.5, 1.0, 0.5) == pytest.approx(K_REF, abs=1e-15)


def test_passage_exponent_small_lambda():
    assert alm.passage_exponent(-0.5, 1.0, 1e-300) > 0
    assert alm.passage_exponent(-0.5, 1.0, 1e-12) == pytest.approx(2e-12, rel=1e-9)


@settings(max_examples=500, deadline=None)
@given(mu=st.floats(-5, -1e-3), sigma=st.floats(0.05, 5), lam=st.floats(1e-6, 10))
def test_passage_exponent_identity(mu, sigma, lam):
    k = alm.passage_exponent(mu, sigma, lam)
    assert k > 0
    root = math.sqrt(mu * mu + 2 * lam * sigma * sigma)
    assert abs(root - (sigma * sigma * k - mu)) <= 1e-12 * max(1.0, root)


@pytest.mark.parametrize("args", [(0.0, 1, 1), (-1, 0, 1), (-1, 1, 0), (0.5, 1, 1)])
def test_passage_exponent_domain(args):
    with pytest.raises(DomainError):
        alm.passage_exponent(*args)


# -- closed forms --------------------------------------------------------------------

def test_perpetual_cost_reference():
    c = alm.perpetual_cost(scen())
    assert c.value == pytest.approx(COST_REF, rel=1e-14)
    assert c.method is Method.CLOSED_FORM and c.perpetual
    assert c.diagnostics["K"] == pytest.approx(K_REF, abs=1e-15)
    assert round(c.value, 4) == 1.5508


def test_limit_reference():
    v = alm.perpetual_cost_limit(scen()).value
    assert v == pytest.approx(COST_LIMIT_REF, rel=1e-14)
    assert v == pytest.approx(1.42990, abs=1e-5)


def test_small_restart_reaches_limit():
    lim = alm.perpetual_cost_limit(scen()).value
    assert abs(alm.perpetual_cost(scen(restart=1e-8)).value - lim) / lim <= 1e-5
    assert abs(alm.perpetual_cost(scen(restart=1e-6)).value - lim) / lim <= 1e-4


def test_cost_decreasing_in_a_increasing_in_b():
    vals = [alm.perpetual_cost(scen(a=a)).value for a in np.linspace(0.05, 20, 60)]
    assert all(y < x for x, y in zip(vals, vals[1:]))
    assert vals[-1] < 1e-4
    vals = [alm.perpetual_cost(scen(b=b)).value for b in np.linspace(0.1, 10, 30)]
    assert all(y > x for x, y in zip(vals, vals[1:]))


def test_cost_monotone_in_restart_towards_limit():
    lim = alm.perpetual_cost_limit(scen()).value
    vals = [alm.perpetual_cost(scen(restart=t)).value for t in (1, 0.5, 0.1, 0.01, 0.001)]
    assert all(y < x for x, y in zip(vals, vals[1:]))
    assert all(v > lim for v in vals)


def test_limit_decreasing_in_k():
    # Shrinking sigma raises K; the limit cost must fall.
    ks, vals = [], []
    for sigma in (2.0, 1.0, 0.5, 0.1, 0.01):
        s = scen(sigma=sigma)
        ks.append(alm.passage_exponent(s.mu, s.sigma, s.net_rate))
        vals.append(alm.perpetual_cost_limit(s).value)
    assert all(y > x for x, y in zip(ks, ks[1:]))
    assert all(y < x for x, y in zip(vals, vals[1:]))


def test_growth_enters_through_net_rate():
    a = alm.perpetual_cost(scen(growth=0.2, discount=0.7)).value
    assert a == pytest.approx(alm.perpetual_cost(scen()).value, rel=1e-14)


# -- path simulation -----------------------------------------------------------

def test_path_injections_constant_without_growth():
    path = alm.simulate_alm_path(scen(), 30.0, 1e-3, PathStream(seed=3, path=0))
    assert len(path.events) > 0
    inj = math.expm1(0.1)
    for e in path.events:
        assert e.injection == inj
        assert e.discounted == pytest.approx(inj * math.exp(-0.5 * e.time), rel=1e-15)
    assert path.discounted_total == math.fsum(e.discounted for e in path.events)
    times = [e.time for e in path.events]
    assert times == sorted(times) and times[-1] <= 30.0


def test_path_injections_track_liabilities():
    s = scen(growth=0.1, discount=0.6)
    path = alm.simulate_alm_path(s, 20.0, 1e-3, PathStream(seed=5, path=1))
    for e in path.events:
        assert e.injection == pytest.approx(math.exp(0.1 * e.time) * math.expm1(0.1), rel=1e-14)


def test_large_restart_gives_single_event():
    s = scen(restart=50.0)
    for i in range(20):
        path = alm.simulate_alm_path(s, 20.0, 1e-2, PathStream(seed=0, path=i))
        assert len(path.events) <= 1
        if path.events:
            assert path.discounted_total == path.events[0].discounted


def test_log_identity_before_first_restart():
    s = scen(growth=0.03, discount=0.5, b=2.5)
    g = alm.simulate_alm_grid(s, 10.0, 1e-3, PathStream(seed=11, path=0))
    end = np.searchsorted(g.t, g.restart_times[0]) if g.restart_times.size else g.t.size
    assert end > 10
    ratio = np.log(g.assets[:end] / g.liabilities[:end])
    np.testing.assert_allclose(ratio, g.y[:end], rtol=0, atol=4e-15 * max(1.0, np.abs(g.y).max()))
    np.testing.assert_allclose(g.liabilities, 2.5 * np.exp(0.03 * g.t), rtol=1e-15)


def test_grid_matches_path_events():
    rng = PathStream(seed=4, path=7)
    g = alm.simulate_alm_grid(scen(), 15.0, 1e-3, rng)
    p = alm.simulate_alm_path(scen(), 15.0, 1e-3, rng)
    assert np.array_equal(g.restart_times, [e.time for e in p.events])
    assert np.all(g.y[np.isin(g.t, g.restart_times)] == 0.1)


@pytest.mark.parametrize("kw", [dict(horizon=0.0), dict(dt=0.0), dict(dt=-1e-3)])
def test_path_domain(kw):
    args = {"horizon": 1.0, "dt": 1e-3, **kw}
    with pytest.raises(DomainError):
        alm.simulate_alm_path(scen(), rng=PathStream(0), **args)


# -- Monte Carlo costs ------------------------------------------------------------

def test_finite_cost_at_zero():
    c = alm.simulate_finite_cost(scen(), 0.0, n_paths=1000)
    assert c.value == 0.0 and c.stderr == 0.0 and c.horizon == 0.0


def test_finite_cost_nondecreasing_in_t():
    vals = [alm.simulate_finite_cost(scen(), t, n_paths=2000, dt=2e-3, seed=8).value
            for t in (1, 2, 5, 10)]
    assert all(y >= x for x, y in zip(vals, vals[1:]))
    assert vals[0] > 0


def test_finite_cost_converges_to_perpetual():
    kw = dict(n_paths=4000, dt=2e-3, seed=9)
    per = alm.simulate_perpetual_cost(scen(), **kw)
    fin = alm.simulate_finite_cost(scen(), per.diagnostics["truncation_horizon"], **kw)
    assert fin.value == per.value
    far = alm.simulate_finite_cost(scen(), 15.0, **kw)
    assert abs(far.value - per.value) <= per.ci95[1] - per.ci95[0]


def test_perpetual_mc_reports_truncation():
    c = alm.simulate_perpetual_cost(scen(), n_paths=2000, dt=2e-3, seed=1)
    d = c.diagnostics
    assert c.horizon is None and c.method is Method.MONTE_CARLO
    assert math.exp(-0.5 * d["truncation_horizon"]) == pytest.approx(1e-6, rel=1e-12)
    assert 0 < d["truncation_bound"] < 1e-5 and d["truncation_relative"] < 1e-5
    assert c.ci95[0] <= c.value <= c.ci95[1]


def test_perpetual_mc_agrees_with_closed_form_small():
    c = alm.simulate_perpetual_cost(scen(), n_paths=5000, dt=1e-3, seed=2)
    assert abs(c.value - COST_REF) <= 4 * c.stderr + 0.02 * COST_REF


def test_mc_domain():
    with pytest.raises(DomainError):
        alm.simulate_perpetual_cost(scen(), n_paths=10)
    with pytest.raises(DomainError):
        alm.simulate_finite_cost(scen(), -1.0, n_paths=1000)
