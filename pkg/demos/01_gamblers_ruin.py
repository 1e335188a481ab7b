"""Gambler's ruin: closed form, the tridiagonal solve, and simulation side by side."""

from __future__ import annotations

import numpy as np

from reserveruin import McConfig, TwoPoint, WalkScenario, mc_ruin_bounded
from reserveruin import ruin_bounded, ruin_difference_equation, ruin_unbounded

# A fair game from 3 units, playing to 10: ruin has probability 7/10.
print("fair game, x=3, k=10:", ruin_bounded(3, 10, 0.5))

# A small edge changes everything.  Rows are the starting reserve x,
# columns the win probability p, target k = 20.
ps = [0.45, 0.49, 0.5, 0.51, 0.55]
print("\n  x " + "".join(f"{p:>9}" for p in ps))
for x in (1, 5, 10, 15, 19):
    print(f"{x:>3} " + "".join(f"{ruin_bounded(x, 20, p):9.4f}" for p in ps))

# The closed form and the linear-system solve are independent routes to the
# same numbers; their gap is pure rounding.
gap = max(abs(ruin_bounded(x, 50, p) - ruin_difference_equation(x, 50, p))
          for x in range(51) for p in np.linspace(0.05, 0.95, 19))
print(f"\nlargest closed form vs tridiagonal gap on k=50: {gap:.1e}")

# With no target at all, a favourable game is survivable: rho(x) = (q/p)^x.
for k in (20, 100, 1000):
    print(f"p=0.6, x=5, k={k:>4}: {ruin_bounded(5, k, 0.6):.10f}")
print(f"p=0.6, x=5, k=inf : {ruin_unbounded(5, 0.6):.10f}")

# And the simulation agrees within its error bar.
est = mc_ruin_bounded(WalkScenario(5, 10, TwoPoint(0.6)), McConfig(n_paths=400_000, seed=1))
lo, hi = est.ci95
print(f"\nsimulated p=0.6, x=5, k=10: {est.value:.5f}  95% CI [{lo:.5f}, {hi:.5f}]"
      f"  exact {ruin_bounded(5, 10, 0.6):.5f}")
