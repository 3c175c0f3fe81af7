"""Exact moments of the difference-in-means estimator by full enumeration.

Every (sample, assignment) pair under fixed-size simple random sampling and
complete randomization is equally likely, so exact moments are plain averages
over the C(n, N) x C(n, n1) grid. Moments are reported per cell of sampled
arm sizes (N1, N0) because the closed-form variances condition on them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..population import BinaryPotentialOutcomes, CompleteRandomization, FixedSizeSRS
from ..variance import binary_variance_components, population_dispersions

MAX_PAIRS = 10**7
CHUNK_ENTRIES = 1 << 20


class EnumerationBudgetError(ValueError):
    pass


def unrank_combination(rank: int, n: int, m: int) -> tuple[int, ...]:
    """The ``rank``-th m-subset of range(n) in lexicographic order."""
    if not 0 <= rank < math.comb(n, m):
        raise ValueError("rank out of range")
    out = []
    start = 0
    for slot in range(m):
        for c in range(start, n):
            block = math.comb(n - c - 1, m - slot - 1)
            if rank < block:
                out.append(c)
                start = c + 1
                break
            rank -= block
    return tuple(out)


def subset_matrix(n: int, m: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Indicator rows for the m-subsets with lexicographic ranks in [start, stop)."""
    total = math.comb(n, m)
    stop = total if stop is None else min(stop, total)
    rows = max(stop - start, 0)
    out = np.zeros((rows, n))
    if rows == 0:
        return out
    combo = list(unrank_combination(start, n, m))
    for row in range(rows):
        out[row, combo] = 1.0
        # lexicographic successor
        i = m - 1
        while i >= 0 and combo[i] == n - m + i:
            i -= 1
        if i < 0:
            break
        combo[i] += 1
        for j in range(i + 1, m):
            combo[j] = combo[j - 1] + 1
    return out


@dataclass
class CellMoments:
    N1: int
    N0: int
    probability: float
    excluded: bool
    mean_theta_hat: float | None = None
    var_theta_hat: float | None = None
    mean_var_given_x: float | None = None
    var_theta_descr: float | None = None
    mean_var_given_r: float | None = None
    var_theta_causal_sample: float | None = None
    max_bias_given_x: float | None = None
    max_bias_given_r: float | None = None
    mean_v_ehw_hat: float | None = None
    mean_v_ehw_tilde: float | None = None
    v_total: float | None = None
    v_sampling: float | None = None
    v_design_given_sampling: float | None = None
    v_design: float | None = None
    v_sampling_given_design: float | None = None
    v_ehw: float | None = None


@dataclass
class EnumerationReport:
    n: int
    N: int
    n1: int
    pairs: int
    cells: list
    included_probability: float
    overall_mean_theta_hat: float
    overall_var_theta_hat: float
    theta_causal: float

    def cell(self, N1: int) -> CellMoments:
        for c in self.cells:
            if c.N1 == N1:
                return c
        raise KeyError(N1)

    def to_dict(self) -> dict:
        return asdict(self)


def _chunk_stats(rows, xs, y1, y0, N):
    """Per-cell sums over one block of sample rows against every assignment."""
    cells = N + 1
    n1_mat = rows @ xs.T
    n0_mat = N - n1_mat
    s1 = rows @ (xs * y1).T
    q1 = rows @ (xs * y1**2).T
    s0 = (rows @ y0)[:, None] - rows @ (xs * y0).T
    q0 = (rows @ y0**2)[:, None] - rows @ (xs * y0**2).T
    cell_idx = n1_mat.round().astype(int)
    ok = (n1_mat >= 1) & (n0_mat >= 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        est = np.where(ok, s1 / n1_mat - s0 / n0_mat, 0.0)
        two = (n1_mat >= 2) & (n0_mat >= 2)
        var1 = (q1 - s1**2 / n1_mat) / (n1_mat - 1)
        var0 = (q0 - s0**2 / n0_mat) / (n0_mat - 1)
        v_tilde = np.where(two, var1 / n1_mat + var0 / n0_mat, 0.0)
        v_hat = np.where(two, (n1_mat - 1) / n1_mat**2 * var1 + (n0_mat - 1) / n0_mat**2 * var0, 0.0)

    a, b = est.shape
    out = {}
    out["count"] = np.zeros(cells)
    out["s"] = np.zeros(cells)
    out["ss"] = np.zeros(cells)
    out["vt"] = np.zeros(cells)
    out["vh"] = np.zeros(cells)
    out["cnt_x"] = np.zeros((cells, b))
    out["s_x"] = np.zeros((cells, b))
    out["cnt_r"] = np.zeros((cells, a))
    out["s_r"] = np.zeros((cells, a))
    for c in range(cells):
        m = (cell_idx == c).astype(float)
        if not m.any():
            continue
        me = m * est
        out["count"][c] = m.sum()
        out["s"][c] = me.sum()
        out["ss"][c] = (me * est).sum()
        out["vt"][c] = (m * v_tilde).sum()
        out["vh"][c] = (m * v_hat).sum()
        out["cnt_x"][c] = m.sum(axis=0)
        out["s_x"][c] = me.sum(axis=0)
        out["cnt_r"][c] = m.sum(axis=1)
        out["s_r"][c] = me.sum(axis=1)
    return out


def enumerate_exact(
    pop: BinaryPotentialOutcomes,
    sampling: FixedSizeSRS,
    assignment: CompleteRandomization,
    workers: int = 1,
    max_pairs: int = MAX_PAIRS,
) -> EnumerationReport:
    if not isinstance(pop, BinaryPotentialOutcomes):
        raise TypeError("enumeration needs binary potential outcomes")
    if not isinstance(sampling, FixedSizeSRS) or not isinstance(assignment, CompleteRandomization):
        raise TypeError("enumeration supports fixed-size SRS with complete randomization only")
    n, N, n1 = pop.n, sampling.size, assignment.n_treated
    n0 = n - n1
    if not (1 <= N <= n and 1 <= n1 <= n - 1):
        raise ValueError("invalid design sizes")
    n_r, n_x = math.comb(n, N), math.comb(n, n1)
    if n_r * n_x > max_pairs:
        raise EnumerationBudgetError(f"{n_r} x {n_x} pairs exceeds the budget of {max_pairs}")

    # centre each potential outcome so raw second moments stay well conditioned
    shift = float(pop.y1.mean() - pop.y0.mean())
    y1 = pop.y1 - pop.y1.mean()
    y0 = pop.y0 - pop.y0.mean()
    xs = subset_matrix(n, n1)
    y_real = xs * y1 + (1 - xs) * y0
    theta_descr = (xs * y_real).sum(axis=1) / n1 - ((1 - xs) * y_real).sum(axis=1) / n0

    rows_per_chunk = max(1, CHUNK_ENTRIES // n_x)
    bounds = [(s, min(s + rows_per_chunk, n_r)) for s in range(0, n_r, rows_per_chunk)]

    def work(bound):
        rows = subset_matrix(n, N, *bound)
        theta_cs = rows @ (y1 - y0) / N
        stats = _chunk_stats(rows, xs, y1, y0, N)
        stats["theta_cs"] = theta_cs
        return stats

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]

    # fixed chunk order keeps the reduction independent of the worker count
    total = {}
    for key in ("count", "s", "ss", "vt", "vh", "cnt_x", "s_x"):
        acc = parts[0][key].copy()
        for p in parts[1:]:
            acc += p[key]
        total[key] = acc
    cnt_r = np.concatenate([p["cnt_r"] for p in parts], axis=1)
    s_r = np.concatenate([p["s_r"] for p in parts], axis=1)
    theta_cs = np.concatenate([p["theta_cs"] for p in parts])

    d = population_dispersions(pop.y1, pop.y0)
    n_pairs = n_r * n_x
    cells = []
    inc_prob = 0.0
    inc_s = inc_ss = inc_count = 0.0
    for c in range(N + 1):
        count = total["count"][c]
        N1, N0 = c, N - c
        prob = count / n_pairs
        excluded = N1 < 1 or N0 < 1
        if count == 0:
            continue
        cm = CellMoments(N1=N1, N0=N0, probability=prob, excluded=excluded)
        cells.append(cm)
        if excluded:
            continue
        inc_prob += prob
        inc_s += total["s"][c]
        inc_ss += total["ss"][c]
        inc_count += count
        mean = total["s"][c] / count
        var = total["ss"][c] / count - mean**2
        cm.mean_theta_hat = mean + shift
        cm.var_theta_hat = var

        cx, sx = total["cnt_x"][c], total["s_x"][c]
        hit = cx > 0
        cond_mean_x = sx[hit] / cx[hit]
        cm.mean_var_given_x = (total["ss"][c] - np.sum(sx[hit] ** 2 / cx[hit])) / count
        td = theta_descr[hit]
        td_mean = np.sum(cx[hit] * td) / count
        cm.var_theta_descr = float(np.sum(cx[hit] * (td - td_mean) ** 2) / count)
        cm.max_bias_given_x = float(np.max(np.abs(cond_mean_x - td)))

        cr, sr = cnt_r[c], s_r[c]
        hit = cr > 0
        cond_mean_r = sr[hit] / cr[hit]
        cm.mean_var_given_r = (total["ss"][c] - np.sum(sr[hit] ** 2 / cr[hit])) / count
        tc = theta_cs[hit]
        tc_mean = np.sum(cr[hit] * tc) / count
        cm.var_theta_causal_sample = float(np.sum(cr[hit] * (tc - tc_mean) ** 2) / count)
        cm.max_bias_given_r = float(np.max(np.abs(cond_mean_r - tc)))

        comp = binary_variance_components(d, N1, N0, n1, n0, n)
        cm.v_total = comp.v_total
        cm.v_sampling = comp.v_sampling
        cm.v_design_given_sampling = comp.v_design_given_sampling
        cm.v_design = comp.v_design
        cm.v_sampling_given_design = comp.v_sampling_given_design
        if N1 >= 2 and N0 >= 2:
            cm.mean_v_ehw_tilde = total["vt"][c] / count
            cm.mean_v_ehw_hat = total["vh"][c] / count
            cm.v_ehw = d.s2_1 / N1 + d.s2_0 / N0

    overall_mean = inc_s / inc_count if inc_count else float("nan")
    overall_var = inc_ss / inc_count - overall_mean**2 if inc_count else float("nan")
    return EnumerationReport(
        n=n,
        N=N,
        n1=n1,
        pairs=n_pairs,
        cells=cells,
        included_probability=inc_prob,
        overall_mean_theta_hat=overall_mean + shift,
        overall_var_theta_hat=overall_var,
        theta_causal=float(np.mean(pop.y1 - pop.y0)),
    )
