"""Check the weighted-average-of-unit-effects reading of the causal estimand."""

from __future__ import annotations

import numpy as np

from ..estimands import exact_moments, expected_xx_per_unit, general_estimands, weighted_causal_representation
from ..population import CauseDistribution, LinearPotentialOutcomes


def linear_expected_assignment(causes: CauseDistribution, z, atol: float = 1e-10) -> bool:
    """Whether E[U_i] is exactly linear in Z_i (residual of E[U] on Z vanishes)."""
    z = np.asarray(z, dtype=float)
    eu = causes.mean()
    coef, *_ = np.linalg.lstsq(z, eu, rcond=None)
    return bool(np.max(np.abs(eu - z @ coef)) <= atol * max(1.0, np.max(np.abs(eu))))


def weighted_representation_gap(pop: LinearPotentialOutcomes, causes: CauseDistribution, z) -> float:
    """Sup-norm gap between the regression causal estimand and the weighted
    average of unit-level slopes, both computed from the exact cause law."""
    law = causes.to_discrete()
    omega, tr = exact_moments(pop, law, z)
    regression = general_estimands(omega).theta
    exx = expected_xx_per_unit(law, z, tr.lambda_)
    weighted = weighted_causal_representation(exx, pop.as_linear().theta_unit)
    return float(np.max(np.abs(regression - weighted)))
