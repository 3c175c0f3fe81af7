"""Variance formulas and feasible variance estimators.

Binary-cause decomposition
    Exact finite-sample variances of the difference in means conditional on
    the arm sizes (N1, N0), split two ways by the law of total variance.

General regression case
    Sandwich estimators ``H^-1 M H^-1 / N`` where the middle matrix ``M`` is a
    mix of the robust (EHW) outer product and the attribute-adjusted
    ``Delta_Z``, weighted by the sampling fraction ``rho = N / n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SingularDesignError, solve_pivoted, symmetrize
from .population import pivoted_rank
from .regression import FitResult

INFINITE = None

ESTIMATORS = ("ehw", "causal", "causal_sample", "descriptive")


@dataclass(frozen=True)
class PopulationDispersions:
    s2_1: float
    s2_0: float
    s2_theta: float


@dataclass(frozen=True)
class BinaryVarianceComponents:
    v_total: float
    v_sampling: float
    v_design_given_sampling: float
    v_design: float
    v_sampling_given_design: float


def population_dispersions(y1, y0) -> PopulationDispersions:
    y1 = np.asarray(y1, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if len(y1) < 2 or len(y1) != len(y0):
        raise ValueError("need two equal-length outcome vectors with n >= 2")
    return PopulationDispersions(
        float(np.var(y1, ddof=1)),
        float(np.var(y0, ddof=1)),
        float(np.var(y1 - y0, ddof=1)),
    )


def _inv(size) -> float:
    return 0.0 if size is INFINITE else 1.0 / size


def binary_variance_components(
    d: PopulationDispersions, N1: int, N0: int, n1=INFINITE, n0=INFINITE, n=INFINITE
) -> BinaryVarianceComponents:
    """Variance components of the difference in means given (N1, N0).

    Population sizes left as ``INFINITE`` (``None``) contribute 1/inf = 0.
    """
    if N1 < 1 or N0 < 1:
        raise ValueError("both sampled arms must be non-empty")
    N = N1 + N0
    if n1 is not INFINITE and N1 > n1:
        raise ValueError("N1 exceeds n1")
    if n0 is not INFINITE and N0 > n0:
        raise ValueError("N0 exceeds n0")
    if n is not INFINITE and N > n:
        raise ValueError("N exceeds n")
    a1 = d.s2_1 / N1
    a0 = d.s2_0 / N0
    v_total = a1 + a0 - d.s2_theta * _inv(n)
    v_sampling = a1 * (1.0 - N1 * _inv(n1)) + a0 * (1.0 - N0 * _inv(n0))
    v_dgs = d.s2_1 * _inv(n1) + d.s2_0 * _inv(n0) - d.s2_theta * _inv(n)
    v_design = a1 + a0 - d.s2_theta / N
    v_sgd = d.s2_theta / N * (1.0 - N * _inv(n))
    return BinaryVarianceComponents(v_total, v_sampling, v_dgs, v_design, v_sgd)


def binary_ehw(y, x, r=None) -> tuple[float, float]:
    """Robust variance of the difference in means: (V_hat, V_tilde).

    ``V_tilde`` carries the MacKinnon-White degrees-of-freedom adjustment and
    equals S1^2/N1 + S0^2/N0 with within-arm sample variances.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    keep = np.ones(len(y), bool) if r is None else np.asarray(r) == 1
    y1 = y[keep & (x == 1)]
    y0 = y[keep & (x == 0)]
    N1, N0 = len(y1), len(y0)
    if N1 < 2 or N0 < 2:
        raise ValueError(f"each sampled arm needs at least 2 units (got N1={N1}, N0={N0})")
    s1 = np.var(y1, ddof=1)
    s0 = np.var(y0, ddof=1)
    v_hat = (N1 - 1) / N1**2 * s1 + (N0 - 1) / N0**2 * s0
    v_tilde = s1 / N1 + s0 / N0
    return float(v_hat), float(v_tilde)


@dataclass(frozen=True)
class GeneralVarianceReport:
    """Feasible variance estimates for the cause coefficients.

    The ``v_*`` matrices are asymptotic variances of ``sqrt(N)(theta_hat -
    theta)``; standard errors are ``sqrt(diag(v) / N)``.
    """

    N: int
    rho_hat: float
    h_hat: np.ndarray
    delta_ehw_hat: np.ndarray
    g_hat: np.ndarray
    delta_z_hat: np.ndarray
    v_ehw: np.ndarray
    v_causal: np.ndarray
    v_causal_sample: np.ndarray
    v_descriptive: np.ndarray

    def matrix(self, estimator: str) -> np.ndarray:
        return getattr(self, f"v_{estimator}")

    def se(self, estimator: str) -> np.ndarray:
        v = np.clip(np.diag(self.matrix(estimator)), 0.0, None)
        return np.sqrt(v / self.N)

    @property
    def standard_errors(self) -> dict[str, np.ndarray]:
        return {name: self.se(name) for name in ESTIMATORS}


def sandwich(h: np.ndarray, middle: np.ndarray) -> np.ndarray:
    h_inv_m = solve_pivoted(h, middle, what="H")
    return symmetrize(solve_pivoted(h, h_inv_m.T, what="H").T)


def general_variance(fit: FitResult, n_population: int | None = None) -> GeneralVarianceReport:
    """Assemble the descriptive, causal and sample-causal variance estimates.

    ``n_population`` falls back to ``fit.n_population``; when both are absent
    the population is treated as infinite (rho_hat = 0).
    """
    if n_population is None:
        n_population = fit.n_population
    x = fit.x_hat
    z = fit.z
    eps = fit.residuals
    N, k = x.shape
    q = z.shape[1]
    if N < k + q + 1:
        raise ValueError(f"need N >= k+q+1 = {k + q + 1}, got {N}")
    if n_population is not None and n_population < N:
        raise ValueError("population size is smaller than the sample")
    rho = 0.0 if n_population is None else N / n_population

    rank, perm = pivoted_rank(z)
    if rank < q:
        raise SingularDesignError("attribute cross-product is singular", int(perm[rank]))
    h = symmetrize(x.T @ x / N)
    if pivoted_rank(h)[0] < k:
        raise SingularDesignError("H_hat is singular")
    xe = x * eps[:, None]
    delta_ehw = symmetrize(xe.T @ xe / N)
    # G_hat: coefficients of regressing X_hat * eps_hat on Z
    g = solve_pivoted(z.T @ z, z.T @ xe, what="Z'Z").T
    dev = xe - z @ g.T
    delta_z = symmetrize(dev.T @ dev / N)

    v_ehw = sandwich(h, delta_ehw)
    v_cs = sandwich(h, delta_z)
    v_causal = sandwich(h, rho * delta_z + (1.0 - rho) * delta_ehw)
    v_descr = (1.0 - rho) * v_ehw
    return GeneralVarianceReport(N, rho, h, delta_ehw, g, delta_z, v_ehw, v_causal, v_cs, v_descr)
