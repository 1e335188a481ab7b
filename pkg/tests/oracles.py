"""Independent reference values for the test suite.

Nothing here calls into the package: the gambler values are exact rational
arithmetic, the rest are frozen hand evaluations.
"""

from __future__ import annotations

import math
from fractions import Fraction


def gambler_exact(x: int, k: int, p: str) -> Fraction:
    """Exact ruin probability of the simple walk, by rational arithmetic.

    ``p`` is a decimal string so that the rational is exactly what was typed.
    """
    p_ = Fraction(p)
    q_ = 1 - p_
    if p_ == q_:
        return Fraction(k - x, k)
    r = q_ / p_
    return (r ** x - r ** k) / (1 - r ** k)


def gambler_markov(x: int, k: int, p: float, sweeps: int = 200_000) -> float:
    """Ruin probability by value iteration on the absorbing chain (slow, tiny k only)."""
    rho = [1.0] + [0.0] * k
    for _ in range(sweeps):
        new = [1.0] + [p * rho[i + 1] + (1 - p) * rho[i - 1] for i in range(1, k)] + [0.0]
        if max(abs(a - b) for a, b in zip(new, rho)) < 1e-15:
            break
        rho = new
    return rho[x]


# Frozen values, each with the hand derivation next to it.

# (r^5 - r^10) / (1 - r^10) with r = 2/3 is 6752/58025.
RUIN_5_10_P06 = 6752 / 58025

# theta = -1 for Gaussian(0.5, 1): (1 - e^{-3}) / (e^2 - e^{-3}).
WALD_GAUSS_2_5 = (1 - math.exp(-3)) / (math.exp(2) - math.exp(-3))

# theta = -0.5 for Gaussian(1, 2), x = 3: e^{-1.5}.
WALD_GAUSS_UNB_3 = math.exp(-1.5)

# mu = -0.5, sigma = 1, lambda = 0.5: K = -0.5 + sqrt(1.25), the golden-ratio conjugate.
K_REF = (math.sqrt(5) - 1) / 2

# b = 1, theta = 0.1, a = 0.2 with K_REF.
COST_REF = math.expm1(0.1) * math.exp(-0.2 * K_REF) / (1 - math.exp(-0.1 * K_REF))
COST_LIMIT_REF = math.exp(-0.2 * K_REF) / K_REF
