"""Regression standard errors under sampling-based and design-based uncertainty."""

__version__ = "0.1.0"

from .bayes import BayesModel, posterior_causal_n, posterior_descriptive_n, posterior_super_causal
from .estimands import (
    binary_estimands,
    exact_moments,
    general_estimands,
    population_residuals,
    realized_moments,
    transform_causes,
    weighted_causal_representation,
)
from .linalg import SingularDesignError
from .population import (
    BernoulliCauses,
    BernoulliSampling,
    BinaryPotentialOutcomes,
    CompleteRandomization,
    DiscreteCauses,
    FinitePopulation,
    FixedSizeSRS,
    IndependentAssignment,
    LinearPotentialOutcomes,
    realize_outcomes,
    validate_population,
)
from .regression import FitResult, SampleData, fit_ols, partial_out
from .variance import (
    INFINITE,
    binary_ehw,
    binary_variance_components,
    general_variance,
    population_dispersions,
)
