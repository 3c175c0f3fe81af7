"""Seeded Monte Carlo for the least-squares estimator and its variance estimators.

Each replication draws a sample and an assignment from its own counter-based
stream, fits the regression on the sampled units, and records the estimate,
the three estimands it may be aimed at, and every variance estimate. Coverage
of normal-approximation intervals is tabulated for each (estimator, estimand)
pair.

Replications are processed in fixed-size blocks. The block layout does not
depend on the number of workers and every per-replication result lands in its
own slot, so reports are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from ..estimands import (
    CAUSAL,
    MomentMatrices,
    exact_moments,
    expected_outer_per_unit,
    general_estimands,
    transform_causes,
)
from ..linalg import symmetrize
from ..population import BinaryPotentialOutcomes, FinitePopulation, assignment_marginals
from ..regression import SampleData, fit_ols
from ..variance import ESTIMATORS, general_variance
from .draws import draw
from .rng import replication_stream

TARGETS = ("descriptive", "causal_sample", "causal")
BLOCK_REPS = 128
EXACT_ATOL = 1e-9
COND_LIMIT = 1e10
COMPACT_FRACTION = 0.6


class AllDrawsDegenerateError(RuntimeError):
    pass


@dataclass
class MonteCarloReport:
    reps: int
    seed: int
    ci_level: float
    n: int
    k: int
    used: int
    skipped: int
    theta_causal: list
    mean_theta_hat: list
    var_theta_hat: list
    mean_sample_size: float
    error_mean: dict
    error_var: dict
    mean_se2: dict
    calibration: dict
    coverage: dict
    degenerate_exact: dict
    replications: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class _Context:
    """Everything about the population that does not change across replications."""

    def __init__(self, pop: FinitePopulation):
        self.pop = pop
        self.lin = pop.outcomes.as_linear()
        self.z = np.asarray(pop.attributes, dtype=float)
        self.n, self.q = self.z.shape
        self.k = self.lin.k
        law = assignment_marginals(pop.assignment, self.n)
        self.binary = isinstance(pop.outcomes, BinaryPotentialOutcomes) or (
            self.k == 1 and all(np.all((s == 0) | (s == 1)) for s in law.support)
        )
        tr = transform_causes(law.mean(), self.z)
        outer = expected_outer_per_unit(self.lin, law, self.z, tr.lambda_)
        omega = MomentMatrices(symmetrize(outer.mean(axis=0)), self.k, self.q, CAUSAL)
        self.theta_causal = general_estimands(omega).theta
        self.outer_flat = outer.reshape(self.n, -1)
        self.d = outer.shape[1]
        self.zz_flat = _zz_flat(self.z)
        self.zz_total = self.z.T @ self.z

    def draw_block(self, seed: int, reps: range):
        r = np.empty((len(reps), self.n))
        u = np.empty((len(reps), self.n, self.k))
        for j, rep in enumerate(reps):
            rng = replication_stream(seed, rep)
            r[j], u[j] = draw(self.pop.sampling, self.pop.assignment, self.n, rng)
        if self.k == 1:
            y = u[:, :, 0] * self.lin.theta_unit[:, 0] + self.lin.xi
        else:
            y = (u * self.lin.theta_unit).sum(axis=2) + self.lin.xi
        return r, u, y


def _well_conditioned(m: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvalsh(m)
    top = ev[:, -1]
    return (top > 0) & (ev[:, 0] > top / COND_LIMIT)


def _solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if b.ndim == a.ndim - 1:
        return np.linalg.solve(a, b[..., None])[..., 0]
    return np.linalg.solve(a, b)


def _weighted(w, a):
    return a if w is None else w[:, None, :] * a


def _cross_z(a, z):
    """sum_i a[b, :, i] z_i' for every replication: (b, k, n) -> (b, k, q).

    ``z`` is either the shared (n, q) attribute matrix, in which case the
    sums are one matrix product, or a per-replication (b, n, q) stack.
    """
    if z.ndim == 3:
        return a @ z
    b, k, n = a.shape
    return (a.reshape(b * k, n) @ z).reshape(b, k, z.shape[1])


def _times_z(coef, z):
    """coef[b] @ z_i for every unit: (b, k, q) -> (b, k, n)."""
    if z.ndim == 3:
        return coef @ np.swapaxes(z, 1, 2)
    b, k, q = coef.shape
    return (coef.reshape(b * k, q) @ z.T).reshape(b, k, -1)


def _zz_flat(z):
    return np.einsum("ip,iq->ipq", z, z).reshape(len(z), -1)


class _Sums:
    """Sufficient statistics of one weighted regression per replication.

    Arrays are laid out (replication, cause, unit) so that every sum over
    units is a matrix product with the attribute matrix. ``zz`` is the
    (b, q, q) weighted attribute cross-product, computed by the caller.
    """

    def __init__(self, w, ut, z, zz):
        b, k, n = ut.shape
        self.w = w
        self.z = z
        self.zz = zz
        self.big_n = np.full(b, float(n)) if w is None else w.sum(axis=1)
        self.lam = _solve(zz, np.swapaxes(_cross_z(_weighted(w, ut), z), 1, 2))  # (b, q, k)
        self.xh = ut - _times_z(np.swapaxes(self.lam, 1, 2), z)
        self.wxh = _weighted(w, self.xh)
        self.xx = self.wxh @ np.swapaxes(self.xh, 1, 2)

    def fit(self, y, with_variance: bool = True):
        theta = _solve(self.xx, (self.wxh @ y[:, :, None])[..., 0])
        if not with_variance:
            return theta, None
        w, z = self.w, self.z
        # X_hat is orthogonal to Z in the weighted sample, so the attribute
        # coefficients of the (X_hat, Z) regression come from Z alone
        wy = (y if w is None else w * y)[:, None, :]
        gamma = _solve(self.zz, _cross_z(wy, z)[:, 0, :])
        eps = y - (theta[:, None, :] @ self.xh)[:, 0, :] - _times_z(gamma[:, None, :], z)[:, 0, :]
        xe = self.xh * eps[:, None, :]
        wxe = _weighted(w, xe)
        s_ee = wxe @ np.swapaxes(xe, 1, 2)
        s_xez = _cross_z(wxe, z)  # (b, k, q)
        g = np.swapaxes(_solve(self.zz, np.swapaxes(s_xez, 1, 2)), 1, 2)
        # sum w (xe - g z)(xe - g z)' = s_ee - g (sum w z xe') since g s_zz = s_xez
        s_dev = s_ee - g @ np.swapaxes(s_xez, 1, 2)
        nn = self.big_n[:, None, None]
        return theta, (self.big_n, self.xx / nn, _sym(s_ee) / nn, _sym(s_dev) / nn)


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, 1, 2))


def batched_least_squares(w, u, y, z, with_variance: bool = True):
    """Weighted (0/1) least squares of y on (u, z) for a stack of replications.

    Mirrors :func:`fit_ols` followed by :func:`general_variance`, written as
    sums over the population weighted by the sampling indicators so that
    replications of different sample size share one array shape. ``w=None``
    means every unit is included. ``u`` is (reps, units, k).
    """
    z = np.asarray(z, dtype=float)
    ut = np.ascontiguousarray(np.swapaxes(u, 1, 2))
    flat = _zz_flat(z)
    zz = np.broadcast_to(flat.sum(axis=0), (len(ut), flat.shape[1])) if w is None else w @ flat
    return _Sums(w, ut, z, zz.reshape(len(ut), z.shape[1], z.shape[1])).fit(y, with_variance)


def _compact(r, ut, y, z):
    """Gather each replication's sampled units into a zero-padded stack.

    Returns (w, ut, y, z) restricted to the largest sample in the block, with
    w = 0 on padding, or the inputs unchanged when that would not save work.
    """
    b, n = r.shape
    sizes = r.sum(axis=1).astype(np.int64)
    m = int(sizes.max())
    if m > COMPACT_FRACTION * n:
        return r, ut, y, z
    rows, cols = np.nonzero(r > 0.0)
    starts = np.cumsum(sizes) - sizes
    pos = np.arange(len(rows)) - np.repeat(starts, sizes)
    take = np.zeros((b, m), dtype=np.int64)
    w = np.zeros((b, m))
    take[rows, pos] = cols
    w[rows, pos] = 1.0
    ar = np.arange(b)[:, None]
    return w, ut[ar, :, take].transpose(0, 2, 1), y[ar, take], z[take]


def _sandwich(h, m):
    hinv = np.linalg.inv(h)
    v = hinv @ m @ hinv
    return 0.5 * (v + np.swapaxes(v, 1, 2))


def _block(ctx: _Context, seed: int, reps: range):
    b = len(reps)
    k, q = ctx.k, ctx.q
    r, u, y = ctx.draw_block(seed, reps)
    theta_hat = np.full((b, k), np.nan)
    targets = np.full((b, len(TARGETS), k), np.nan)
    v_diag = np.full((b, len(ESTIMATORS), k), np.nan)
    sizes = r.sum(axis=1)
    ut = np.ascontiguousarray(np.swapaxes(u, 1, 2))

    valid = sizes >= k + q + 1
    if ctx.binary:
        treated = (r * ut[:, 0]).sum(axis=1)
        valid &= (treated >= 2) & (sizes - treated >= 2)
    zz = (r @ ctx.zz_flat).reshape(b, q, q)
    valid &= _well_conditioned(zz)
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return valid, sizes, theta_hat, targets, v_diag

    # plain slices avoid copying the block when every draw is usable
    pick = slice(None) if idx.size == b else idx
    w, us, ys, zs = _compact(r[pick], ut[pick], y[pick], ctx.z)
    s = _Sums(w, us, zs, zz[pick])
    keep = _well_conditioned(s.xx)
    if not keep.all():
        valid[idx[~keep]] = False
        idx = idx[keep]
        if idx.size == 0:
            return valid, sizes, theta_hat, targets, v_diag
        w, us, ys = w[keep], us[keep], ys[keep]
        zs = zs[keep] if zs.ndim == 3 else zs
        s = _Sums(w, us, zs, zz[idx])
    th, (big_n, h, d_ehw, d_z) = s.fit(ys)
    rho = (big_n / ctx.n)[:, None, None]
    v_ehw = _sandwich(h, d_ehw)
    mats = {
        "ehw": v_ehw,
        "causal": _sandwich(h, rho * d_z + (1.0 - rho) * d_ehw),
        "causal_sample": _sandwich(h, d_z),
        "descriptive": (1.0 - rho) * v_ehw,
    }
    theta_hat[idx] = th
    for e, name in enumerate(ESTIMATORS):
        v_diag[idx, e] = np.diagonal(mats[name], axis1=1, axis2=2)

    if np.all(big_n == ctx.n):
        targets[idx, 0] = th
    else:
        pick = slice(None) if idx.size == b else idx
        total_zz = np.broadcast_to(ctx.zz_total, (idx.size, q, q))
        targets[idx, 0], _ = _Sums(None, ut[pick], ctx.z, total_zz).fit(y[pick], with_variance=False)
    omega_t = (r[idx] @ ctx.outer_flat / big_n[:, None]).reshape(-1, ctx.d, ctx.d)
    targets[idx, 1] = _solve(omega_t[:, 1:, 1:], omega_t[:, 1:, 0])[:, :k]
    targets[idx, 2] = ctx.theta_causal
    return valid, sizes, theta_hat, targets, v_diag


def _block_reference(ctx: _Context, seed: int, reps: range):
    """Replication-by-replication version built on fit_ols / general_variance."""
    b = len(reps)
    k = ctx.k
    r, u, y = ctx.draw_block(seed, reps)
    law = assignment_marginals(ctx.pop.assignment, ctx.n)
    theta_hat = np.full((b, k), np.nan)
    targets = np.full((b, len(TARGETS), k), np.nan)
    v_diag = np.full((b, len(ESTIMATORS), k), np.nan)
    sizes = r.sum(axis=1)
    valid = np.zeros(b, bool)
    for j in range(b):
        s = r[j] == 1
        if ctx.binary:
            n1 = u[j, s, 0].sum()
            if n1 < 2 or s.sum() - n1 < 2:
                continue
        try:
            fit = fit_ols(SampleData(y[j, s], u[j, s], ctx.z[s]))
            rep = general_variance(fit, ctx.n)
            descr = fit_ols(SampleData(y[j], u[j], ctx.z)).theta_hat
            omega_t, _ = exact_moments(ctx.lin, law, ctx.z, r=r[j])
        except (ValueError, np.linalg.LinAlgError):
            continue
        valid[j] = True
        theta_hat[j] = fit.theta_hat
        targets[j] = [descr, general_estimands(omega_t).theta, ctx.theta_causal]
        v_diag[j] = [np.diag(rep.matrix(name)) for name in ESTIMATORS]
    return valid, sizes, theta_hat, targets, v_diag


def monte_carlo(
    pop: FinitePopulation,
    reps: int,
    seed: int,
    ci_level: float = 0.95,
    workers: int = 1,
    engine: str = "batched",
    keep_draws: int = 100,
) -> MonteCarloReport:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if not 0.0 < ci_level < 1.0:
        raise ValueError("ci_level must lie in (0, 1)")
    ctx = _Context(pop)
    block_fn = {"batched": _block, "reference": _block_reference}[engine]
    k = ctx.k
    valid = np.zeros(reps, bool)
    sizes = np.zeros(reps)
    theta_hat = np.full((reps, k), np.nan)
    targets = np.full((reps, len(TARGETS), k), np.nan)
    v_diag = np.full((reps, len(ESTIMATORS), k), np.nan)
    blocks = [range(s, min(s + BLOCK_REPS, reps)) for s in range(0, reps, BLOCK_REPS)]

    def run(block):
        out = block_fn(ctx, seed, block)
        sl = slice(block.start, block.stop)
        valid[sl], sizes[sl], theta_hat[sl], targets[sl], v_diag[sl] = out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    else:
        for block in blocks:
            run(block)

    used = int(valid.sum())
    if used == 0:
        raise AllDrawsDegenerateError("every replication was degenerate")
    th = theta_hat[valid]
    tg = targets[valid]
    big_n = sizes[valid]
    se = np.sqrt(np.clip(v_diag[valid], 0.0, None) / big_n[:, None, None])
    crit = float(stats.norm.ppf(0.5 + ci_level / 2.0))

    def _var(a):
        return np.var(a, axis=0, ddof=1) if len(a) > 1 else np.full(a.shape[1:], np.nan)

    error_mean, error_var, coverage, degenerate = {}, {}, {}, {}
    for t, target in enumerate(TARGETS):
        err = th - tg[:, t]
        error_mean[target] = err.mean(axis=0).tolist()
        error_var[target] = _var(err).tolist()
    for e, name in enumerate(ESTIMATORS):
        coverage[name] = {}
        # share of replications with a zero standard error, where coverage
        # means exact agreement with the target
        degenerate[name] = (se[:, e] == 0).mean(axis=0).tolist()
        for t, target in enumerate(TARGETS):
            err = np.abs(th - tg[:, t])
            half = crit * se[:, e]
            exact = err <= EXACT_ATOL * np.maximum(1.0, np.abs(tg[:, t]))
            covered = np.where(half > 0, err <= half, exact)
            coverage[name][target] = covered.mean(axis=0).tolist()
    mean_se2 = {name: (se[:, e] ** 2).mean(axis=0).tolist() for e, name in enumerate(ESTIMATORS)}
    # var(theta_hat) - mean(se^2), with a paired Monte Carlo standard error
    sq_dev = (th - th.mean(axis=0)) ** 2 * (used / max(used - 1, 1))
    calibration = {}
    for e, name in enumerate(ESTIMATORS):
        diff = sq_dev - se[:, e] ** 2
        calibration[name] = {
            "gap": diff.mean(axis=0).tolist(),
            "gap_mcse": (diff.std(axis=0, ddof=1) / np.sqrt(used)).tolist() if used > 1 else [float("nan")] * k,
        }

    draws = []
    if reps <= keep_draws:
        for rep in range(reps):
            rec = {"rep": rep, "sample_size": int(sizes[rep]), "used": bool(valid[rep])}
            if valid[rep]:
                rec["theta_hat"] = theta_hat[rep].tolist()
                rec["targets"] = {t: targets[rep, i].tolist() for i, t in enumerate(TARGETS)}
                rec["se"] = {
                    name: np.sqrt(np.clip(v_diag[rep, e], 0, None) / sizes[rep]).tolist()
                    for e, name in enumerate(ESTIMATORS)
                }
            draws.append(rec)

    return MonteCarloReport(
        reps=reps,
        seed=seed,
        ci_level=ci_level,
        n=ctx.n,
        k=k,
        used=used,
        skipped=reps - used,
        theta_causal=ctx.theta_causal.tolist(),
        mean_theta_hat=th.mean(axis=0).tolist(),
        var_theta_hat=_var(th).tolist(),
        mean_sample_size=float(big_n.mean()),
        error_mean=error_mean,
        error_var=error_var,
        mean_se2=mean_se2,
        calibration=calibration,
        coverage=coverage,
        degenerate_exact=degenerate,
        replications=draws,
    )
