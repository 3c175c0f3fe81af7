"""CSV ingestion, population spec files and JSON report serialization."""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

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
    intercept_only,
)
from .regression import SampleData


class DataError(ValueError):
    """Malformed input data or configuration (CLI exit code 2)."""


# --------------------------------------------------------------------------
# JSON output


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        if x == int(x) and abs(x) < 1e16:
            return f"{x:.1f}"
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, np.ndarray):
        return _fmt(x.tolist())
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _fmt(obj) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file and rename, so errors never leave partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# population spec files

_TOP_KEYS = {"n", "outcomes", "attributes", "causes", "sampling", "assignment"}


def _check_keys(obj, allowed: set, where: str, required: set | None = None) -> None:
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise DataError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = (allowed if required is None else required) - set(obj)
    if missing:
        raise DataError(f"{where}: missing key(s) {sorted(missing)}")


def population_from_dict(spec: dict) -> FinitePopulation:
    _check_keys(spec, _TOP_KEYS, "population spec")
    n = spec["n"]
    if not isinstance(n, int) or n < 1:
        raise DataError("population spec: n must be a positive integer")

    out = spec["outcomes"]
    if not isinstance(out, dict) or "kind" not in out:
        raise DataError("outcomes: missing kind")
    if out["kind"] == "binary":
        _check_keys(out, {"kind", "y1", "y0"}, "outcomes")
        outcomes = BinaryPotentialOutcomes(out["y1"], out["y0"])
    elif out["kind"] == "linear":
        _check_keys(out, {"kind", "theta", "xi"}, "outcomes")
        outcomes = LinearPotentialOutcomes(out["theta"], out["xi"])
    else:
        raise DataError(f"outcomes: unknown kind {out['kind']!r}")
    if outcomes.n != n:
        raise DataError(f"outcomes describe {outcomes.n} units, n = {n}")

    z = intercept_only(n) if spec["attributes"] is None else np.asarray(spec["attributes"], dtype=float)

    causes = None
    c = spec["causes"]
    if c is not None:
        if not isinstance(c, dict) or "kind" not in c:
            raise DataError("causes: missing kind")
        if c["kind"] == "bernoulli":
            _check_keys(c, {"kind", "p"}, "causes")
            causes = BernoulliCauses(c["p"])
        elif c["kind"] == "discrete":
            _check_keys(c, {"kind", "support", "probs"}, "causes")
            causes = DiscreteCauses(c["support"], c["probs"])
        else:
            raise DataError(f"causes: unknown kind {c['kind']!r}")

    s = spec["sampling"]
    if not isinstance(s, dict) or "kind" not in s:
        raise DataError("sampling: missing kind")
    if s["kind"] == "srs":
        _check_keys(s, {"kind", "size"}, "sampling")
        sampling = FixedSizeSRS(int(s["size"]))
    elif s["kind"] == "bernoulli":
        _check_keys(s, {"kind", "rate"}, "sampling")
        sampling = BernoulliSampling(float(s["rate"]))
    else:
        raise DataError(f"sampling: unknown kind {s['kind']!r}")

    a = spec["assignment"]
    if not isinstance(a, dict) or "kind" not in a:
        raise DataError("assignment: missing kind")
    if a["kind"] == "complete":
        _check_keys(a, {"kind", "n_treated"}, "assignment")
        if causes is not None:
            raise DataError("causes must be null under complete randomization")
        assignment = CompleteRandomization(int(a["n_treated"]))
    elif a["kind"] == "independent":
        _check_keys(a, {"kind"}, "assignment")
        if causes is None:
            raise DataError("assignment: independent assignment needs a causes law")
        assignment = IndependentAssignment(causes)
    else:
        raise DataError(f"assignment: unknown kind {a['kind']!r}")

    pop = FinitePopulation(outcomes, z, sampling, assignment)
    problems = pop.validate()
    if problems:
        raise DataError("invalid population: " + "; ".join(problems))
    return pop


def population_to_dict(pop: FinitePopulation) -> dict:
    if isinstance(pop.outcomes, BinaryPotentialOutcomes):
        outcomes = {"kind": "binary", "y1": pop.outcomes.y1.tolist(), "y0": pop.outcomes.y0.tolist()}
    else:
        outcomes = {"kind": "linear", "theta": pop.outcomes.theta_unit.tolist(), "xi": pop.outcomes.xi.tolist()}
    causes = pop.causes
    if causes is None:
        causes_d = None
    elif isinstance(causes, BernoulliCauses):
        causes_d = {"kind": "bernoulli", "p": causes.p.tolist()}
    else:
        causes_d = {
            "kind": "discrete",
            "support": [s.tolist() for s in causes.support],
            "probs": [p.tolist() for p in causes.probs],
        }
    if isinstance(pop.sampling, FixedSizeSRS):
        sampling = {"kind": "srs", "size": pop.sampling.size}
    else:
        sampling = {"kind": "bernoulli", "rate": pop.sampling.rate}
    if isinstance(pop.assignment, CompleteRandomization):
        assignment = {"kind": "complete", "n_treated": pop.assignment.n_treated}
    else:
        assignment = {"kind": "independent"}
    return {
        "n": pop.n,
        "outcomes": outcomes,
        "attributes": pop.attributes.tolist(),
        "causes": causes_d,
        "sampling": sampling,
        "assignment": assignment,
    }


def load_population(path) -> FinitePopulation:
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"population spec not found: {path}") from None
    except json.JSONDecodeError as err:
        raise DataError(f"population spec is not valid JSON: {err}") from None
    try:
        return population_from_dict(spec)
    except (TypeError, ValueError) as err:
        if isinstance(err, DataError):
            raise
        raise DataError(f"population spec: {err}") from None


# --------------------------------------------------------------------------
# CSV


def parse_csv(path, outcome: str, causes: list[str], attributes: list[str] = (), n_population: int | None = None) -> SampleData:
    """Read a sample from a headed CSV file.

    An intercept is prepended to the attributes unless one of the named
    attribute columns is already all ones, in which case that column is moved
    to the front.
    """
    causes = list(causes)
    attributes = list(attributes)
    if not causes:
        raise DataError("at least one cause column is required")
    if outcome in causes or outcome in attributes:
        raise DataError("outcome column also listed as a regressor")
    if set(causes) & set(attributes):
        raise DataError("cause and attribute columns overlap")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [row for row in reader if row]
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None
    if header is None:
        raise DataError("data file is empty (header row required)")
    header = [h.strip() for h in header]
    for name in [outcome, *causes, *attributes]:
        if name not in header:
            raise DataError(f"missing column: {name!r}")

    def column(name):
        j = header.index(name)
        out = np.empty(len(rows))
        for i, row in enumerate(rows):
            cell = row[j].strip() if j < len(row) else ""
            try:
                out[i] = float(cell)
            except ValueError:
                raise DataError(f"non-numeric value {cell!r} in column {name!r}, row {i + 2}") from None
            if not math.isfinite(out[i]):
                raise DataError(f"non-finite value in column {name!r}, row {i + 2}")
        return out

    y = column(outcome)
    u = np.column_stack([column(c) for c in causes])
    zcols = [column(a) for a in attributes]
    ones = [j for j, col in enumerate(zcols) if np.all(col == 1.0)]
    if ones:
        j = ones[0]
        zcols.insert(0, zcols.pop(j))
        attributes.insert(0, attributes.pop(j))
    else:
        zcols.insert(0, np.ones(len(rows)))
        attributes.insert(0, "(intercept)")
    z = np.column_stack(zcols)
    k, q = u.shape[1], z.shape[1]
    if len(rows) < k + q + 1:
        raise DataError(f"need at least k+q+1 = {k + q + 1} rows, got {len(rows)}")
    if n_population is not None and n_population < len(rows):
        raise DataError(f"population size {n_population} is smaller than the {len(rows)} sampled rows")
    return SampleData(y, u, z, n_population, tuple(causes), tuple(attributes))
