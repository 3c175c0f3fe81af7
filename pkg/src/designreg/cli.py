"""Command-line entry point.

Exit codes: 0 success, 2 bad data or configuration, 3 singular design.
Errors are reported as one JSON object on standard error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bayes import BayesModel, posterior_causal_n, posterior_descriptive_n, posterior_super_causal
from .io import DataError, dumps, load_population, parse_csv, write_atomic
from .lab import AllDrawsDegenerateError, EnumerationBudgetError, enumerate_exact, monte_carlo
from .linalg import SingularDesignError
from .population import BinaryPotentialOutcomes, CompleteRandomization, FixedSizeSRS
from .regression import fit_ols
from .variance import ESTIMATORS, binary_ehw, general_variance

EXIT_OK = 0
EXIT_DATA = 2
EXIT_SINGULAR = 3

ESTIMAND_CHOICES = ("descriptive", "causal-sample", "causal", "all")
_ESTIMATOR_OF = {"descriptive": "descriptive", "causal-sample": "causal_sample", "causal": "causal"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DataError(f"usage: {message}")


@dataclass
class RunConfig:
    command: str
    data: str
    outcome: str | None = None
    causes: tuple = ()
    attributes: tuple = ()
    population_size: int | None = None
    estimand: str = "all"
    reps: int = 1000
    seed: int = 0
    ci: float = 0.95
    out: str | None = None
    workers: int = 1
    n1: int | None = None
    n0: int | None = None
    sigma1: float | None = None
    sigma0: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        if set(self.causes) & set(self.attributes):
            raise DataError("cause and attribute columns overlap")
        if self.outcome is not None and (self.outcome in self.causes or self.outcome in self.attributes):
            raise DataError("outcome column is also listed as a regressor")
        if self.reps < 1:
            raise DataError("--reps must be at least 1")
        if not 0.0 < self.ci < 1.0:
            raise DataError("--ci must lie in (0, 1)")
        if self.workers < 1:
            raise DataError("--workers must be at least 1")
        if self.estimand not in ESTIMAND_CHOICES:
            raise DataError(f"--estimand must be one of {ESTIMAND_CHOICES}")


def _names(text: str | None) -> tuple:
    if not text:
        return ()
    return tuple(s.strip() for s in text.split(",") if s.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="designreg", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data_help):
        p.add_argument("--data", required=True, help=data_help)
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("estimate", help="regression estimates with sampling/design-based SEs", allow_abbrev=False)
    common(p, "CSV file with a header row")
    p.add_argument("--outcome", required=True)
    p.add_argument("--causes", required=True, help="comma-separated cause columns")
    p.add_argument("--attributes", default="", help="comma-separated attribute columns")
    p.add_argument("--population-size", type=int)
    p.add_argument("--estimand", default="all", choices=ESTIMAND_CHOICES)

    p = sub.add_parser("simulate", help="seeded Monte Carlo on a population spec", allow_abbrev=False)
    common(p, "population spec (JSON)")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ci", type=float, default=0.95)
    p.add_argument("--estimand", default="all", choices=ESTIMAND_CHOICES)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("enumerate", help="exact enumeration on a small population spec", allow_abbrev=False)
    common(p, "population spec (JSON)")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("bayes", help="closed-form posteriors for a binary cause", allow_abbrev=False)
    common(p, "CSV file with a header row")
    p.add_argument("--outcome", required=True)
    p.add_argument("--causes", required=True, help="the single binary cause column")
    p.add_argument("--population-size", type=int, required=True)
    p.add_argument("--n1", type=int, required=True, help="treated units in the population")
    p.add_argument("--n0", type=int, required=True, help="control units in the population")
    p.add_argument("--sigma1", type=float, required=True)
    p.add_argument("--sigma0", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    return parser


def config_from_args(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    kw = vars(args).copy()
    kw["causes"] = _names(kw.get("causes"))
    kw["attributes"] = _names(kw.get("attributes"))
    return RunConfig(**kw)


# --------------------------------------------------------------------------
# commands


def run_estimate(cfg: RunConfig) -> dict:
    data = parse_csv(cfg.data, cfg.outcome, list(cfg.causes), list(cfg.attributes), cfg.population_size)
    fit = fit_ols(data)
    rep = general_variance(fit)
    keep = ESTIMATORS if cfg.estimand == "all" else ("ehw", _ESTIMATOR_OF[cfg.estimand])
    coefs = []
    for j, name in enumerate(data.cause_names):
        row = {"name": name, "estimate": float(fit.theta_hat[j])}
        for est in keep:
            row[f"se_{est}"] = float(rep.se(est)[j])
        coefs.append(row)
    out = {
        "command": "estimate",
        "N": data.N,
        "n_population": data.n_population,
        "rho_hat": rep.rho_hat,
        "causes": list(data.cause_names),
        "attributes": list(data.attribute_names),
        "theta_hat": fit.theta_hat,
        "gamma_hat": fit.gamma_hat,
        "lambda_hat": fit.lambda_hat,
        "coefficients": coefs,
        "matrices": {
            "h_hat": rep.h_hat,
            "delta_ehw_hat": rep.delta_ehw_hat,
            "g_hat": rep.g_hat,
            "delta_z_hat": rep.delta_z_hat,
            **{f"v_{est}": rep.matrix(est) for est in keep},
        },
    }
    u = data.u
    if data.k == 1 and data.q == 1 and np.all((u == 0) | (u == 1)):
        x = u[:, 0]
        block = {"N1": int(x.sum()), "N0": int(len(x) - x.sum())}
        if block["N1"] >= 2 and block["N0"] >= 2:
            block["v_ehw_hat"], block["v_ehw_tilde"] = binary_ehw(data.y, x)
        out["binary"] = block
    return out


def run_simulate(cfg: RunConfig) -> dict:
    pop = load_population(cfg.data)
    rep = monte_carlo(pop, cfg.reps, cfg.seed, cfg.ci, workers=cfg.workers)
    out = {"command": "simulate", **rep.to_dict()}
    if cfg.estimand != "all":
        target = _ESTIMATOR_OF[cfg.estimand]
        out["error_mean"] = {target: out["error_mean"][target]}
        out["error_var"] = {target: out["error_var"][target]}
        out["coverage"] = {e: {target: c[target]} for e, c in out["coverage"].items()}
    return out


def run_enumerate(cfg: RunConfig) -> dict:
    pop = load_population(cfg.data)
    if not isinstance(pop.outcomes, BinaryPotentialOutcomes):
        raise DataError("enumerate needs binary potential outcomes")
    if not isinstance(pop.sampling, FixedSizeSRS) or not isinstance(pop.assignment, CompleteRandomization):
        raise DataError("enumerate needs fixed-size SRS sampling and complete randomization")
    rep = enumerate_exact(pop.outcomes, pop.sampling, pop.assignment, workers=cfg.workers)
    return {"command": "enumerate", **rep.to_dict()}


def run_bayes(cfg: RunConfig) -> dict:
    data = parse_csv(cfg.data, cfg.outcome, list(cfg.causes), [], cfg.population_size)
    if data.k != 1:
        raise DataError("bayes needs exactly one binary cause column")
    x = data.u[:, 0]
    if not np.all((x == 0) | (x == 1)):
        raise DataError("bayes needs a binary (0/1) cause")
    N1, N0 = int(x.sum()), int(len(x) - x.sum())
    if N1 < 1 or N0 < 1:
        raise DataError("both arms must appear in the sample")
    model = BayesModel(
        sigma1=cfg.sigma1,
        sigma0=cfg.sigma0,
        kappa=cfg.kappa,
        n=cfg.population_size,
        n1=cfg.n1,
        n0=cfg.n0,
        N1=N1,
        N0=N0,
        ybar1=float(data.y[x == 1].mean()),
        ybar0=float(data.y[x == 0].mean()),
    )
    posts = [posterior_super_causal(model), posterior_descriptive_n(model), posterior_causal_n(model)]
    return {
        "command": "bayes",
        "N1": N1,
        "N0": N0,
        "ybar1": model.ybar1,
        "ybar0": model.ybar0,
        "posteriors": {p.estimand: {"mean": p.mean, "variance": p.variance} for p in posts},
    }


COMMANDS = {"estimate": run_estimate, "simulate": run_simulate, "enumerate": run_enumerate, "bayes": run_bayes}


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(dumps({"error": kind, "message": message, "exit_code": code}))
    return code


def main(argv=None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        report = COMMANDS[cfg.command](cfg)
    except SingularDesignError as err:
        return _fail(EXIT_SINGULAR, "singular_design", str(err))
    except (DataError, EnumerationBudgetError, AllDrawsDegenerateError, ValueError, TypeError) as err:
        return _fail(EXIT_DATA, type(err).__name__, str(err))
    text = dumps(report)
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
