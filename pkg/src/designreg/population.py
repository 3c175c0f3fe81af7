"""Finite populations: potential outcomes, attributes, cause laws and designs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

RANK_RTOL = 1e-10
PROB_ATOL = 1e-12


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def pivoted_rank(a: np.ndarray, rtol: float = RANK_RTOL) -> tuple[int, np.ndarray]:
    """Numerical column rank from a column-pivoted QR.

    Returns ``(rank, perm)``; the columns ``perm[rank:]`` are the ones whose
    pivots fell below ``rtol`` times the largest pivot.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0, np.arange(a.shape[1])
    _, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0, perm
    rank = int(np.sum(diag > rtol * diag[0]))
    return rank, perm


# --------------------------------------------------------------------------
# potential outcomes


@dataclass(frozen=True)
class BinaryPotentialOutcomes:
    """Science table for a scalar binary cause: Y_i(1) and Y_i(0)."""

    y1: np.ndarray
    y0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y1", _frozen(self.y1, 1, "y1"))
        object.__setattr__(self, "y0", _frozen(self.y0, 1, "y0"))

    @property
    def n(self) -> int:
        return len(self.y1)

    @property
    def k(self) -> int:
        return 1

    @property
    def effects(self) -> np.ndarray:
        return self.y1 - self.y0

    def as_linear(self) -> LinearPotentialOutcomes:
        # exact for u in {0, 1}: Y(u) = u * (y1 - y0) + y0
        return LinearPotentialOutcomes(self.effects[:, None], self.y0)


@dataclass(frozen=True)
class LinearPotentialOutcomes:
    """Unit-level linear outcome functions Y_i(u) = u'theta_i + xi_i."""

    theta_unit: np.ndarray  # (n, k)
    xi: np.ndarray  # (n,)

    def __post_init__(self):
        theta = np.array(self.theta_unit, dtype=float)
        if theta.ndim == 1:
            theta = theta[:, None]
        object.__setattr__(self, "theta_unit", _frozen(theta, 2, "theta_unit"))
        object.__setattr__(self, "xi", _frozen(self.xi, 1, "xi"))

    @property
    def n(self) -> int:
        return len(self.xi)

    @property
    def k(self) -> int:
        return self.theta_unit.shape[1]

    def as_linear(self) -> LinearPotentialOutcomes:
        return self

    @property
    def constant_effects(self) -> bool:
        return bool(np.all(self.theta_unit == self.theta_unit[0]))


PotentialOutcomes = Union[BinaryPotentialOutcomes, LinearPotentialOutcomes]


def realize_outcomes(pop: PotentialOutcomes, causes) -> np.ndarray:
    """Outcomes actually realized when unit i receives cause ``causes[i]``."""
    u = np.asarray(causes, dtype=float)
    if isinstance(pop, BinaryPotentialOutcomes):
        if u.ndim == 2 and u.shape[1] == 1:
            u = u[:, 0]
        if u.shape != (pop.n,):
            raise ValueError(f"expected {pop.n} scalar causes, got shape {u.shape}")
        if not np.all((u == 0.0) | (u == 1.0)):
            raise ValueError("binary potential outcomes need causes in {0, 1}")
        return np.where(u == 1.0, pop.y1, pop.y0)
    if u.ndim == 1 and pop.k == 1:
        u = u[:, None]
    if u.shape != (pop.n, pop.k):
        raise ValueError(f"expected causes of shape {(pop.n, pop.k)}, got {u.shape}")
    return np.einsum("ij,ij->i", u, pop.theta_unit) + pop.xi


# --------------------------------------------------------------------------
# cause distributions


@dataclass(frozen=True)
class BernoulliCauses:
    """Independent scalar binary causes with P(U_i = 1) = p[i]."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p, 1, "p"))

    @property
    def n(self) -> int:
        return len(self.p)

    @property
    def k(self) -> int:
        return 1

    def mean(self) -> np.ndarray:
        return self.p[:, None].copy()

    def to_discrete(self) -> DiscreteCauses:
        support = [np.array([[0.0], [1.0]]) for _ in range(self.n)]
        probs = [np.array([1.0 - p, p]) for p in self.p]
        return DiscreteCauses(support, probs)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return (rng.random(self.n) < self.p).astype(float)[:, None]


@dataclass(frozen=True)
class DiscreteCauses:
    """Independent causes with a finite support per unit.

    ``support[i]`` is an (m_i, k) array of cause vectors and ``probs[i]`` the
    matching probabilities.
    """

    support: tuple
    probs: tuple

    def __post_init__(self):
        sup = []
        for s in self.support:
            s = np.array(s, dtype=float)
            if s.ndim == 1:
                s = s[:, None]
            sup.append(_frozen(s, 2, "support"))
        object.__setattr__(self, "support", tuple(sup))
        object.__setattr__(self, "probs", tuple(_frozen(p, 1, "probs") for p in self.probs))

    @property
    def n(self) -> int:
        return len(self.support)

    @property
    def k(self) -> int:
        return self.support[0].shape[1]

    def mean(self) -> np.ndarray:
        return np.array([p @ s for s, p in zip(self.support, self.probs)])

    def to_discrete(self) -> DiscreteCauses:
        return self

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(self.n)
        out = np.empty((self.n, self.k))
        for i, (s, p) in enumerate(zip(self.support, self.probs)):
            j = int(np.searchsorted(np.cumsum(p), u[i], side="right"))
            out[i] = s[min(j, len(p) - 1)]
        return out


CauseDistribution = Union[BernoulliCauses, DiscreteCauses]


# --------------------------------------------------------------------------
# designs


@dataclass(frozen=True)
class FixedSizeSRS:
    size: int


@dataclass(frozen=True)
class BernoulliSampling:
    rate: float


@dataclass(frozen=True)
class CompleteRandomization:
    n_treated: int


@dataclass(frozen=True)
class IndependentAssignment:
    causes: CauseDistribution


SamplingDesign = Union[FixedSizeSRS, BernoulliSampling]
AssignmentDesign = Union[CompleteRandomization, IndependentAssignment]


def assignment_marginals(assignment: AssignmentDesign, n: int) -> DiscreteCauses:
    """Per-unit marginal law of the cause under ``assignment``.

    Expected moment matrices are linear in the per-unit laws, so the marginals
    are all that exact population moments need even when assignments are
    dependent (complete randomization).
    """
    if isinstance(assignment, CompleteRandomization):
        return BernoulliCauses(np.full(n, assignment.n_treated / n)).to_discrete()
    return assignment.causes.to_discrete()


@dataclass(frozen=True)
class FinitePopulation:
    """A science table together with the sampling and assignment designs."""

    outcomes: PotentialOutcomes
    attributes: np.ndarray
    sampling: SamplingDesign
    assignment: AssignmentDesign

    def __post_init__(self):
        z = np.array(self.attributes, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        object.__setattr__(self, "attributes", _frozen(z, 2, "attributes"))

    @property
    def n(self) -> int:
        return self.outcomes.n

    @property
    def causes(self) -> CauseDistribution | None:
        if isinstance(self.assignment, IndependentAssignment):
            return self.assignment.causes
        return None

    def validate(self) -> list[str]:
        return validate_population(self.outcomes, self.attributes, self.causes, self.sampling, self.assignment)


def intercept_only(n: int) -> np.ndarray:
    return np.ones((n, 1))


def validate_population(pop, z, causes=None, sampling=None, assignment=None) -> list[str]:
    """List every consistency violation; an empty list means the inputs are valid."""
    problems: list[str] = []
    if isinstance(pop, BinaryPotentialOutcomes):
        if len(pop.y1) != len(pop.y0):
            problems.append("length mismatch: y1 and y0")
        if not (np.all(np.isfinite(pop.y1)) and np.all(np.isfinite(pop.y0))):
            problems.append("non-finite potential outcome")
    else:
        if pop.theta_unit.shape[0] != len(pop.xi):
            problems.append("length mismatch: theta and xi")
        if not (np.all(np.isfinite(pop.theta_unit)) and np.all(np.isfinite(pop.xi))):
            problems.append("non-finite potential outcome")
    n = len(pop.y1) if isinstance(pop, BinaryPotentialOutcomes) else len(pop.xi)
    if n < 1:
        problems.append("empty population")

    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        problems.append("attributes must be a matrix")
    else:
        if z.shape[0] != n:
            problems.append("length mismatch: attributes rows")
        if z.shape[1] == 0 or not np.all(z[:, 0] == 1.0):
            problems.append("missing intercept")
        if not np.all(np.isfinite(z)):
            problems.append("non-finite attribute")
        elif z.shape[0] < z.shape[1]:
            problems.append("fewer units than attributes")
        elif z.shape[1] > 0 and pivoted_rank(z)[0] < z.shape[1]:
            problems.append("attributes not full column rank")

    if causes is not None:
        if causes.n != n:
            problems.append("length mismatch: cause distribution")
        if isinstance(causes, BernoulliCauses):
            if np.any(~np.isfinite(causes.p)) or np.any((causes.p < 0) | (causes.p > 1)):
                problems.append("bernoulli probability outside [0, 1]")
        else:
            for i, (s, p) in enumerate(zip(causes.support, causes.probs)):
                if len(s) != len(p):
                    problems.append(f"unit {i}: support and probabilities differ in length")
                if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_ATOL:
                    problems.append(f"unit {i}: probabilities not normalized")
            if len({s.shape[1] for s in causes.support}) > 1:
                problems.append("cause dimension varies across units")
        k = pop.k
        if causes.n == n and causes.k != k:
            problems.append("cause dimension does not match outcomes")
        if isinstance(pop, BinaryPotentialOutcomes) and isinstance(causes, DiscreteCauses):
            if any(not np.all((s == 0) | (s == 1)) for s in causes.support):
                problems.append("binary outcomes need binary causes")

    if isinstance(sampling, FixedSizeSRS) and not 1 <= sampling.size <= n:
        problems.append("sample size outside [1, n]")
    if isinstance(sampling, BernoulliSampling) and not (
        np.isfinite(sampling.rate) and 0.0 < sampling.rate <= 1.0
    ):
        problems.append("sampling rate outside (0, 1]")
    if isinstance(assignment, CompleteRandomization):
        if not 1 <= assignment.n_treated <= n - 1:
            problems.append("treated count outside [1, n-1]")
        if not isinstance(pop, BinaryPotentialOutcomes) and pop.k != 1:
            problems.append("complete randomization needs a scalar binary cause")
    return problems
