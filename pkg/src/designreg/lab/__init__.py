from .diagnostics import linear_expected_assignment, weighted_representation_gap
from .draws import draw, draw_assignment, draw_sample
from .enumeration import EnumerationBudgetError, EnumerationReport, enumerate_exact
from .montecarlo import AllDrawsDegenerateError, MonteCarloReport, monte_carlo
from .rng import replication_stream

__all__ = [
    "AllDrawsDegenerateError",
    "EnumerationBudgetError",
    "EnumerationReport",
    "MonteCarloReport",
    "draw",
    "draw_assignment",
    "draw_sample",
    "enumerate_exact",
    "linear_expected_assignment",
    "monte_carlo",
    "replication_stream",
    "weighted_representation_gap",
]
