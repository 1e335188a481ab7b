"""A pension fund that is topped up whenever it becomes underfunded.

The log funding ratio Y = ln(assets / liabilities) drifts down as a Brownian
motion.  Each time it reaches 0 the sponsor pays enough to lift it back to
theta.  The present value of all those payments has a closed form.
"""

from __future__ import annotations

import numpy as np

from reserveruin import AlmScenario, PathStream, perpetual_cost, perpetual_cost_limit
from reserveruin import simulate_finite_cost, simulate_perpetual_cost
from reserveruin.alm import passage_exponent, simulate_alm_grid

s = AlmScenario(a=0.2, b=1.0, mu=-0.5, sigma=1.0, growth=0.0, discount=0.5, restart=0.1)
k = passage_exponent(s.mu, s.sigma, s.net_rate)
print(f"K = {k:.6f}   cost = {perpetual_cost(s).value:.6f}   small-theta limit = "
      f"{perpetual_cost_limit(s).value:.6f}")

# Smaller top-ups happen more often; the total converges to the limit.
print("\n theta      cost")
for theta in (1.0, 0.5, 0.1, 0.01, 0.001):
    v = perpetual_cost(AlmScenario(**{**s.__dict__, "restart": theta})).value
    print(f"{theta:6g}  {v:.6f}")

# One path, to see the mechanics.
g = simulate_alm_grid(s, horizon=10.0, dt=1e-3, rng=PathStream(seed=3))
print(f"\none path over 10 years: {g.restart_times.size} top-ups, first at t={g.restart_times[0]:.3f}")
print("lowest funding ratio on the grid:", float(np.exp(g.y.min())))

# Simulated cost, truncated where discounting has shrunk payments by 1e-6.
est = simulate_perpetual_cost(s, n_paths=20_000, seed=1)
print(f"\nsimulated perpetual cost {est.value:.4f} +/- {est.stderr:.4f} "
      f"(truncation bound {est.diagnostics['truncation_bound']:.1e})")

# Cost accumulated up to time t, from the same paths.
for t in (1, 2, 5, 10, 20):
    print(f"  W({t:>2}) = {simulate_finite_cost(s, t, n_paths=20_000, seed=1).value:.4f}")
