"""Least squares on sample data and the partialling-out primitive."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SingularDesignError, lstsq_pivoted


def _matrix(a, name: str) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SampleData:
    """Observed (Y, U, Z) for the sampled units.

    ``n_population`` is the size of the finite population the sample was
    drawn from, or ``None`` when it is taken to be infinite.
    """

    y: np.ndarray
    u: np.ndarray
    z: np.ndarray
    n_population: int | None = None
    cause_names: tuple = ()
    attribute_names: tuple = ()

    def __post_init__(self):
        y = np.array(self.y, dtype=float).ravel()
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "u", _matrix(self.u, "u"))
        object.__setattr__(self, "z", _matrix(self.z, "z"))
        n = len(y)
        if self.u.shape[0] != n or self.z.shape[0] != n:
            raise ValueError("y, u and z must have the same number of rows")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.z))):
            raise ValueError("sample data contain non-finite values")
        if n < self.k + self.q:
            raise ValueError(f"need at least k+q = {self.k + self.q} rows, got {n}")
        if self.n_population is not None and not n <= self.n_population:
            raise ValueError(f"population size {self.n_population} is smaller than the sample ({n})")

    @property
    def N(self) -> int:
        return len(self.y)

    @property
    def k(self) -> int:
        return self.u.shape[1]

    @property
    def q(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    gamma_hat: np.ndarray
    residuals: np.ndarray
    x_hat: np.ndarray
    lambda_hat: np.ndarray
    z: np.ndarray
    n_population: int | None = None

    @property
    def N(self) -> int:
        return len(self.residuals)


def partial_out(target, z) -> tuple[np.ndarray, np.ndarray]:
    """Residualize the columns of ``target`` on ``z``.

    Returns ``(residuals, coef)`` with ``coef`` of shape (m, q) so that
    ``residuals = target - z @ coef.T``.
    """
    t = np.asarray(target, dtype=float)
    squeeze = t.ndim == 1
    if squeeze:
        t = t[:, None]
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    coef = lstsq_pivoted(z, t, what="attribute matrix").T
    resid = t - z @ coef.T
    if squeeze:
        return resid[:, 0], coef
    return resid, coef


def fit_ols(data: SampleData) -> FitResult:
    """Regress Y on (U, Z) and residualize U on Z over the sample.

    Raises :class:`SingularDesignError` when [U Z] is rank deficient; its
    ``column`` indexes the stacked matrix (causes first).
    """
    a = np.hstack([data.u, data.z])
    try:
        coef = lstsq_pivoted(a, data.y, what="regressor matrix [U Z]")
    except SingularDesignError as err:
        names = list(data.cause_names) + list(data.attribute_names)
        if err.column is not None and err.column < len(names):
            raise SingularDesignError(f"{err} ({names[err.column]})", err.column) from None
        raise
    k = data.k
    theta, gamma = coef[:k], coef[k:]
    residuals = data.y - a @ coef
    x_hat, lam = partial_out(data.u, data.z)
    return FitResult(theta, gamma, residuals, x_hat, lam, data.z, data.n_population)
