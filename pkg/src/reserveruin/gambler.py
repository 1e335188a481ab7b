"""Exact ruin probabilities for the simple +/-1 random walk.

A gambler starts with ``x`` units, wins a unit with probability ``p`` and
loses one with probability ``q = 1 - p``, and stops at 0 (ruin) or at the
target ``k``.  First-step analysis gives the recurrence

    rho(j) = p rho(j+1) + q rho(j-1),   rho(0) = 1,  rho(k) = 0,

whose solution is :func:`ruin_bounded`.  :func:`ruin_difference_equation`
solves the same recurrence as a tridiagonal system and serves as an
independent check of the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError

__all__ = [
    "BarrierOutcome",
    "ruin_bounded",
    "ruin_unbounded",
    "ruin_difference_equation",
]

# Below this distance from 1/2 the symmetric branch is used.
_SYMMETRIC_TOL = 1e-12


@dataclass(frozen=True)
class BarrierOutcome:
    """Result of one walk: ``ruined`` if 0 was hit before ``k``; ``steps`` taken."""

    ruined: bool
    steps: int


def _check(x, k, p):
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if int(k) != k or int(x) != x:
        raise DomainError(f"x and k must be integers, got x={x!r}, k={k!r}")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k!r}")
    if not (0 <= x <= k):
        raise DomainError(f"need 0 <= x <= k, got x={x!r}, k={k!r}")


def ruin_bounded(x: int, k: int, p: float) -> float:
    """Probability that the walk started at ``x`` reaches 0 before ``k``.

    For ``p != 1/2`` this is ``(1 - (p/q)^(k-x)) / (1 - (p/q)^k)``, and
    ``(k - x) / k`` in the symmetric case.  Powers are handled in the log
    domain through ``expm1`` so that large ``k`` neither overflows nor loses
    the small differences near ``p = 1/2``.
    """
    _check(x, k, p)
    if x == 0:
        return 1.0
    if x == k:
        return 0.0
    if abs(p - 0.5) < _SYMMETRIC_TOL:
        return (k - x) / k
    # log(p/q); the ratio of expm1 terms is the closed form after factoring.
    lr = math.log(p) - math.log1p(-p)
    if lr < 0.0:
        return math.expm1(lr * (k - x)) / math.expm1(lr * k)
    # p > q: divide through by (p/q)^k to keep every exponent nonpositive.
    return math.exp(-lr * x) * math.expm1(-lr * (k - x)) / math.expm1(-lr * k)


def ruin_unbounded(x: int, p: float) -> float:
    """Eventual ruin probability with no upper target: ``(q/p)^x`` if ``p > 1/2``, else 1."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if int(x) != x or x < 0:
        raise DomainError(f"x must be a nonnegative integer, got {x!r}")
    if p <= 0.5:
        return 1.0
    return math.exp(x * (math.log1p(-p) - math.log(p)))


def ruin_difference_equation(x: int, k: int, p: float) -> float:
    """Solve the first-step recurrence directly and return ``rho(x)``.

    The unknowns ``rho(1) .. rho(k-1)`` satisfy
    ``-q rho(j-1) + rho(j) - p rho(j+1) = 0`` with the boundary values moved to
    the right-hand side; the system is tridiagonal and solved by forward
    elimination and back substitution (Thomas algorithm).
    """
    _check(x, k, p)
    x, k = int(x), int(k)
    if x == 0:
        return 1.0
    if x == k:
        return 0.0
    return float(_solve_recurrence(k, p)[x])


def _solve_recurrence(k: int, p: float) -> np.ndarray:
    """Full vector ``rho(0..k)``."""
    q = 1.0 - p
    n = k - 1
    # Sub-diagonal -q, diagonal 1, super-diagonal -p; rhs carries rho(0) = 1.
    c = np.empty(n)
    d = np.empty(n)
    denom = 1.0
    c[0] = -p / denom
    d[0] = q / denom
    for j in range(1, n):
        denom = 1.0 + q * c[j - 1]
        c[j] = -p / denom
        d[j] = (q * d[j - 1]) / denom
    rho = np.empty(k + 1)
    rho[0] = 1.0
    rho[k] = 0.0
    rho[n] = d[n - 1]
    for j in range(n - 2, -1, -1):
        rho[j + 1] = d[j] - c[j] * rho[j + 2]
    return rho
