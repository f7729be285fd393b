"""JSON schemas for the CLI and library: matrices as row-major arrays of
arrays, jump measures as {"atoms": [{"x": [...], "mass": m}, ...]},
partitions as lists of 1-based index lists, covariance functions as
{"family": ..., "params": {...}}.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import (
    BlockPartition,
    CovFunction,
    CovarianceMatrix,
    DiscreteJointDistribution,
    DiscreteLevyMeasure,
    IdTriplet,
    TimeGrid,
    validate_partition,
)
from .simulate import (
    BatchSource,
    GaussianSource,
    IncrementSource,
    MaModel,
    MaWindowSource,
    Source,
    TripletSource,
    brownian_antithetic_source,
)

__all__ = [
    "read_json",
    "load_matrix",
    "load_levy",
    "load_triplet",
    "load_covfun",
    "load_ma_model",
    "load_distribution",
    "parse_blocks",
    "load_batch_csv",
    "source_from_spec",
    "parse_source",
]


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _resolve(obj):
    """Accept a parsed object, a JSON string, or a path to a JSON file."""
    if isinstance(obj, (str, Path)):
        p = Path(obj)
        if p.exists():
            return read_json(p)
        return json.loads(str(obj))
    return obj


def load_matrix(obj) -> CovarianceMatrix:
    data = _resolve(obj)
    if isinstance(data, dict):
        data = data.get("sigma", data.get("matrix", data.get("entries")))
    return CovarianceMatrix(np.asarray(data, dtype=float))


def load_levy(obj) -> DiscreteLevyMeasure:
    data = _resolve(obj)
    atoms = data["atoms"]
    if not atoms:
        raise ValueError("a jump measure file must state at least one atom or a dim")
    dim = len(atoms[0]["x"])
    return DiscreteLevyMeasure(dim, [(np.asarray(a["x"], dtype=float), a["mass"]) for a in atoms])


def load_triplet(obj) -> IdTriplet:
    data = _resolve(obj)
    gaussian = CovarianceMatrix(np.asarray(data["gaussian"], dtype=float))
    levy_spec = data.get("levy", {"atoms": []})
    if levy_spec.get("atoms"):
        levy = load_levy(levy_spec)
    else:
        levy = DiscreteLevyMeasure.empty(gaussian.dim)
    return IdTriplet(np.asarray(data["drift"], dtype=float), gaussian, levy)


def load_covfun(obj) -> CovFunction:
    return CovFunction.from_spec(_resolve(obj))


def load_ma_model(obj) -> MaModel:
    data = _resolve(obj)
    cov = CovarianceMatrix(np.asarray(data["innovation_cov"], dtype=float))
    thetas = data.get("thetas", data.get("coefficients", []))
    return MaModel(cov, tuple(np.asarray(t, dtype=float) for t in thetas))


def load_distribution(obj) -> DiscreteJointDistribution:
    data = _resolve(obj)
    return DiscreteJointDistribution(data["support"], data["probs"])


def parse_blocks(obj, index_count: int) -> BlockPartition:
    """Parse a partition spec: 'singleton', 'single', JSON, or a file path."""
    if isinstance(obj, str):
        if obj in ("singleton", "singletons"):
            return BlockPartition.singletons(index_count)
        if obj in ("single", "one"):
            return BlockPartition.single(index_count)
    data = _resolve(obj)
    return validate_partition(data, index_count)


def load_batch_csv(path) -> np.ndarray:
    """Read a sample batch CSV, tolerating an optional header row."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(x) for x in first.strip().split(",")]
    except ValueError:
        skip = 1
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=skip))


def source_from_spec(spec) -> Source:
    """Build a sampling source from its JSON description.

    Kinds: gaussian (sigma), triplet, increments (covfun + grid), ma
    (innovation_cov + thetas + window), csv (path), and the built-in name
    "brownian-antithetic".
    """
    if isinstance(spec, str) and spec == "brownian-antithetic":
        return brownian_antithetic_source()
    data = _resolve(spec)
    kind = data["kind"]
    if kind == "gaussian":
        return GaussianSource(load_matrix(data["sigma"]))
    if kind == "triplet":
        return TripletSource(load_triplet(data))
    if kind == "increments":
        grid = TimeGrid(np.asarray(data["grid"], dtype=float))
        return IncrementSource(load_covfun(data["covfun"]), grid)
    if kind == "ma":
        model = load_ma_model(data)
        return MaWindowSource(model, int(data.get("window", 2)))
    if kind == "csv":
        return BatchSource(load_batch_csv(data["path"]), label=str(data["path"]))
    if kind == "brownian-antithetic":
        grid = TimeGrid(np.asarray(data.get("grid", [0.0, 1.0, 2.0]), dtype=float))
        return brownian_antithetic_source(grid)
    raise ValueError(f"unknown source kind {kind!r}")


def parse_source(text: str) -> Source:
    """CLI source argument: builtin name, inline JSON, or a spec file path."""
    if text == "brownian-antithetic":
        return brownian_antithetic_source()
    return source_from_spec(text)
