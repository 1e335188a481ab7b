"""Ruin probabilities and restart costs for reserve processes.

Closed forms for the simple random walk, Wald's approximation for general
walks, the Brownian asset-liability restart scheme, and Monte Carlo engines
that cross-check all of them.
"""

from .alm import (
    AlmPath,
    RestartEvent,
    passage_exponent,
    perpetual_cost,
    perpetual_cost_limit,
    simulate_alm_path,
    simulate_finite_cost,
    simulate_perpetual_cost,
)
from .gambler import ruin_bounded, ruin_difference_equation, ruin_unbounded
from .model import (
    AlmScenario,
    Cashflow,
    CostEstimate,
    DomainError,
    Gaussian,
    Method,
    RuinEstimate,
    TwoPoint,
    WalkScenario,
    mean,
    mgf,
    sample,
    variance,
)
from .simulate import McConfig, PathStream, mc_first_passage, mc_ruin_bounded, mc_ruin_unbounded
from .wald import (
    AdjustmentCoefficient,
    NoRoot,
    ZeroMean,
    ruin_gaussian_bounded,
    ruin_gaussian_unbounded,
    ruin_wald_bounded,
    ruin_wald_unbounded,
    solve_adjustment,
)

__version__ = "0.1.0"
