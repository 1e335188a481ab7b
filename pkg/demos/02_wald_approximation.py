"""Wald's approximation for general steps, and where it stops being exact.

The approximation treats the walk as stopping exactly on a barrier.  For +/-1
steps that is true and the formula is exact; for continuous steps the walk
jumps past the barrier and the formula overstates ruin.
"""

from __future__ import annotations

import math

from reserveruin import (Gaussian, McConfig, TwoPoint, WalkScenario, mc_ruin_bounded,
                         ruin_bounded, ruin_wald_bounded, solve_adjustment)

# The adjustment coefficient is the nonzero root of E[exp(theta X)] = 1.
for d in (TwoPoint(0.25), TwoPoint(0.6), Gaussian(1.0, 2.0), Gaussian(-0.3, 1.0)):
    print(f"{d!r:32} theta = {solve_adjustment(d).theta:+.12f}")

# Two-point steps: no overshoot, so Wald reproduces the exact answer.
print("\nWald vs exact on +/-1 steps:",
      ruin_wald_bounded(5, 10, TwoPoint(0.6)), ruin_bounded(5, 10, 0.6))

# Gaussian steps of fixed size, barriers scaled up by `scale`.  As the
# barriers grow relative to a step the overshoot matters less.
d = Gaussian(0.05, 1.0)
print(f"\n{'scale':>6}{'x':>6}{'k':>6}{'Wald':>10}{'simulated':>11}{'+/-':>9}")
for scale in (1, 2, 5, 10, 20):
    x, k = 2.0 * scale, 5.0 * scale
    est = mc_ruin_bounded(WalkScenario(x, k, d), McConfig(n_paths=100_000, seed=scale))
    print(f"{scale:>6}{x:>6.0f}{k:>6.0f}{ruin_wald_bounded(x, k, d):10.4f}"
          f"{est.value:11.4f}{2 * est.stderr:9.4f}")

# Shifting both barriers outward by the mean overshoot of a standard normal
# walk (about 0.5826 sigma) recovers most of the gap for large steps.
d = Gaussian(0.5, 1.0)
sim = mc_ruin_bounded(WalkScenario(2.0, 5.0, d), McConfig(n_paths=1_000_000, seed=7)).value
shift = 0.5826
th = -1.0
x, k = 2.0 + shift, 5.0 + 2 * shift
corrected = math.expm1(th * (k - x)) * math.exp(th * x) / math.expm1(th * k)
print(f"\nmu=0.5, x=2, k=5: Wald {ruin_wald_bounded(2.0, 5.0, d):.4f}, "
      f"overshoot-shifted {corrected:.4f}, simulated {sim:.4f}")
