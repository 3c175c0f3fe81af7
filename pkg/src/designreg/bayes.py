"""Closed-form posteriors for the bivariate-normal potential-outcomes model.

Known standard deviations (sigma1, sigma0) and correlation kappa, independent
flat priors on the two means. All three posteriors are normal and centred at
the difference in sampled arm means; only the variances differ.
"""

from __future__ import annotations

from dataclasses import dataclass

SUPER_CAUSAL = "super-causal"
DESCRIPTIVE_N = "descriptive-n"
CAUSAL_N = "causal-n"


@dataclass(frozen=True)
class BayesModel:
    sigma1: float
    sigma0: float
    kappa: float
    n: int
    n1: int
    n0: int
    N1: int
    N0: int
    ybar1: float
    ybar0: float

    def __post_init__(self):
        if self.sigma1 < 0 or self.sigma0 < 0:
            raise ValueError("standard deviations must be nonnegative")
        if not -1.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [-1, 1]")
        if self.N1 < 1 or self.N0 < 1:
            raise ValueError("both sampled arms must be non-empty")
        if self.N1 > self.n1 or self.N0 > self.n0:
            raise ValueError("sampled arm larger than its population arm")
        if self.n1 + self.n0 != self.n:
            raise ValueError("n1 + n0 must equal n")

    @property
    def N(self) -> int:
        return self.N1 + self.N0


@dataclass(frozen=True)
class PosteriorSummary:
    mean: float
    variance: float
    estimand: str


def posterior_super_causal(m: BayesModel) -> PosteriorSummary:
    var = m.sigma1**2 / m.N1 + m.sigma0**2 / m.N0
    return PosteriorSummary(m.ybar1 - m.ybar0, var, SUPER_CAUSAL)


def posterior_descriptive_n(m: BayesModel) -> PosteriorSummary:
    var = m.sigma1**2 / m.N1 * (1 - m.N1 / m.n1) + m.sigma0**2 / m.N0 * (1 - m.N0 / m.n0)
    return PosteriorSummary(m.ybar1 - m.ybar0, max(var, 0.0), DESCRIPTIVE_N)


def posterior_causal_n(m: BayesModel) -> PosteriorSummary:
    s1, s0, kap, n = m.sigma1, m.sigma0, m.kappa, m.n
    unsampled = (n - m.N) / n**2
    var = (
        m.N0 / n**2 * s1**2 * (1 - kap**2)
        + m.N1 / n**2 * s0**2 * (1 - kap**2)
        + unsampled * (s1**2 + s0**2 - 2 * kap * s1 * s0)
    )
    # kappa * sigma0 / sigma1 written so that sigma1 = 0 stays finite
    shrink1 = (s1 - kap * s0) * m.N1 / n
    shrink0 = (s0 - kap * s1) * m.N0 / n
    var += (s1 - shrink1) ** 2 / m.N1 + (s0 - shrink0) ** 2 / m.N0
    return PosteriorSummary(m.ybar1 - m.ybar0, var, CAUSAL_N)
