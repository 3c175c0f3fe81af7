"""Draw sampling indicators and cause assignments under a design."""

from __future__ import annotations

import numpy as np

from ..population import (
    AssignmentDesign,
    BernoulliSampling,
    CompleteRandomization,
    FixedSizeSRS,
    IndependentAssignment,
    SamplingDesign,
)


def draw_sample(sampling: SamplingDesign, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(sampling, FixedSizeSRS):
        r = np.zeros(n)
        r[rng.choice(n, size=sampling.size, replace=False)] = 1.0
        return r
    if isinstance(sampling, BernoulliSampling):
        if sampling.rate >= 1.0:
            return np.ones(n)
        return (rng.random(n) < sampling.rate).astype(float)
    raise TypeError(f"unknown sampling design {sampling!r}")


def draw_assignment(assignment: AssignmentDesign, n: int, rng: np.random.Generator) -> np.ndarray:
    """Causes as an (n, k) matrix."""
    if isinstance(assignment, CompleteRandomization):
        x = np.zeros(n)
        x[rng.choice(n, size=assignment.n_treated, replace=False)] = 1.0
        return x[:, None]
    if isinstance(assignment, IndependentAssignment):
        return assignment.causes.sample(rng)
    raise TypeError(f"unknown assignment design {assignment!r}")


def draw(sampling: SamplingDesign, assignment: AssignmentDesign, n: int, rng: np.random.Generator):
    """One (r, causes) pair; the sample is drawn first, independently of the causes."""
    r = draw_sample(sampling, n, rng)
    u = draw_assignment(assignment, n, rng)
    return r, u
