"""Population estimands: descriptive, sample-causal and population-causal.

The general estimands are regression coefficients defined by second-moment
matrices of ``(Y, X, Z)``. Three such matrices matter:

* ``W``: realized moments over the whole population (descriptive),
* ``Omega``: moments in expectation over the assignment (causal),
* ``Omega~``: expected moments over the sampled units only (sample causal).

For the simulable cause laws (finite support) the expectations are exact sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SingularDesignError, solve_pivoted, symmetrize
from .population import DiscreteCauses, PotentialOutcomes, pivoted_rank

DESCRIPTIVE = "W"
CAUSAL = "Omega"
CAUSAL_SAMPLE = "Omega~"
SAMPLE_REALIZED = "W~"

ESTIMAND_OF_TAG = {
    DESCRIPTIVE: "descriptive",
    CAUSAL: "causal",
    CAUSAL_SAMPLE: "causal-sample",
    SAMPLE_REALIZED: "least-squares",
}


@dataclass(frozen=True)
class MomentMatrices:
    """Second moments of the stacked vector (Y, X, Z), partitioned."""

    matrix: np.ndarray
    k: int
    q: int
    tag: str

    @property
    def YY(self) -> float:
        return float(self.matrix[0, 0])

    @property
    def YX(self) -> np.ndarray:
        return self.matrix[:1, 1 : 1 + self.k]

    @property
    def YZ(self) -> np.ndarray:
        return self.matrix[:1, 1 + self.k :]

    @property
    def XX(self) -> np.ndarray:
        return self.matrix[1 : 1 + self.k, 1 : 1 + self.k]

    @property
    def XZ(self) -> np.ndarray:
        return self.matrix[1 : 1 + self.k, 1 + self.k :]

    @property
    def ZZ(self) -> np.ndarray:
        return self.matrix[1 + self.k :, 1 + self.k :]


@dataclass(frozen=True)
class TransformResult:
    """Residualized causes X = U - Lambda Z.

    ``x`` holds the transformed expected causes E[X_i]; use :meth:`apply` for
    realized causes.
    """

    lambda_: np.ndarray  # (k, q)
    x: np.ndarray  # (n, k)

    def apply(self, u: np.ndarray, z: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        return u - np.asarray(z, dtype=float) @ self.lambda_.T


@dataclass(frozen=True)
class Estimand:
    theta: np.ndarray
    gamma: np.ndarray
    tag: str

    @property
    def kind(self) -> str:
        return ESTIMAND_OF_TAG.get(self.tag, self.tag)


def transform_causes(expected_u, z) -> TransformResult:
    eu = np.asarray(expected_u, dtype=float)
    if eu.ndim == 1:
        eu = eu[:, None]
    z = np.asarray(z, dtype=float)
    if eu.shape[0] != z.shape[0]:
        raise ValueError("expected causes and attributes differ in length")
    rank, perm = pivoted_rank(z)
    if rank < z.shape[1]:
        raise SingularDesignError("sum of Z Z' is singular", int(perm[rank]))
    # Lambda' solves (Z'Z) Lambda' = Z'E[U]
    lam = solve_pivoted(z.T @ z, z.T @ eu, what="Z'Z").T
    return TransformResult(lam, eu - z @ lam.T)


def binary_estimands(y1, y0, x, r) -> tuple[float, float, float]:
    """(theta_descr, theta_causal_sample, theta_causal) for a binary cause."""
    y1 = np.asarray(y1, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    n1 = x.sum()
    n0 = len(x) - n1
    if n1 < 1 or n0 < 1:
        raise ValueError("descriptive estimand undefined: an arm is empty in the population")
    big_n = r.sum()
    if big_n < 1:
        raise ValueError("sample causal estimand undefined: empty sample")
    y = np.where(x == 1.0, y1, y0)
    descr = (x @ y) / n1 - ((1.0 - x) @ y) / n0
    causal_sample = (r @ (y1 - y0)) / big_n
    causal = float(np.mean(y1 - y0))
    return float(descr), float(causal_sample), causal


def realized_moments(y, x, z, r=None, tag: str = DESCRIPTIVE) -> MomentMatrices:
    """W (all units) or W~ (units with r == 1) from realized data."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    z = np.asarray(z, dtype=float)
    w = np.column_stack([y, x, z])
    if r is not None:
        w = w[np.asarray(r) == 1]
    m = w.T @ w / len(w)
    return MomentMatrices(symmetrize(m), x.shape[1], z.shape[1], tag)


def expected_outer_per_unit(outcomes: PotentialOutcomes, law: DiscreteCauses, z, lambda_) -> np.ndarray:
    """E[w_i w_i'] for w_i = (Y_i, X_i, Z_i), exactly, one (d, d) block per unit."""
    lin = outcomes.as_linear()
    z = np.asarray(z, dtype=float)
    n, q = z.shape
    k = lin.k
    d = 1 + k + q
    out = np.empty((n, d, d))
    for i in range(n):
        s = law.support[i]
        p = law.probs[i]
        ys = s @ lin.theta_unit[i] + lin.xi[i]
        xs = s - lambda_ @ z[i]
        w = np.column_stack([ys, xs, np.broadcast_to(z[i], (len(s), q))])
        out[i] = (w * p[:, None]).T @ w
    return out


def exact_moments(outcomes: PotentialOutcomes, law: DiscreteCauses, z, r=None) -> tuple[MomentMatrices, TransformResult]:
    """Omega (r omitted) or Omega~ (given r) from the discrete cause law.

    The transformation always uses the population Lambda, as in the
    definition of Omega~.
    """
    z = np.asarray(z, dtype=float)
    tr = transform_causes(law.mean(), z)
    per_unit = expected_outer_per_unit(outcomes, law, z, tr.lambda_)
    if r is None:
        m = per_unit.mean(axis=0)
        tag = CAUSAL
    else:
        r = np.asarray(r, dtype=float)
        if r.sum() < 1:
            raise ValueError("empty sample")
        m = np.tensordot(r, per_unit, axes=1) / r.sum()
        tag = CAUSAL_SAMPLE
    k = outcomes.as_linear().k
    return MomentMatrices(symmetrize(m), k, z.shape[1], tag), tr


def general_estimands(moments: MomentMatrices) -> Estimand:
    """Solve [[XX, XZ], [ZX, ZZ]] (theta; gamma) = (XY; ZY)."""
    k = moments.k
    a = moments.matrix[1:, 1:]
    b = moments.matrix[1:, 0]
    coef = solve_pivoted(a, b, what=f"{moments.tag} block system")
    return Estimand(coef[:k], coef[k:], moments.tag)


def population_residuals(y, x, z, theta, gamma) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    z = np.asarray(z, dtype=float)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if x.shape != (len(y), len(theta)) or z.shape != (len(y), len(gamma)):
        raise ValueError("dimension mismatch between data and coefficients")
    return y - x @ theta - z @ gamma


def expected_xx_per_unit(law: DiscreteCauses, z, lambda_) -> np.ndarray:
    """E[X_i X_i'] per unit, with X_i = U_i - Lambda Z_i."""
    z = np.asarray(z, dtype=float)
    out = []
    for i, (s, p) in enumerate(zip(law.support, law.probs)):
        xs = s - lambda_ @ z[i]
        out.append((xs * p[:, None]).T @ xs)
    return np.array(out)


def weighted_causal_representation(exx_per_unit, theta_per_unit, r=None) -> np.ndarray:
    """(sum E[XX'_i])^-1 sum E[XX'_i] theta_i, optionally over units with r == 1."""
    exx = np.asarray(exx_per_unit, dtype=float)
    if exx.ndim == 1:
        exx = exx[:, None, None]
    theta = np.asarray(theta_per_unit, dtype=float)
    if theta.ndim == 1:
        theta = theta[:, None]
    if r is not None:
        keep = np.asarray(r) == 1
        exx, theta = exx[keep], theta[keep]
    weight_sum = exx.sum(axis=0)
    weighted = np.einsum("ijk,ik->j", exx, theta)
    return solve_pivoted(weight_sum, weighted, what="weight sum")
