"""Domain types and primitive operations: block partitions, Levy-Khinchin
triplets with finite discrete jump measures, covariance-function families,
support-set predicates and the characteristic function.

All types are immutable after construction and all operations are pure, so
everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PASS",
    "VIOLATION",
    "INCONCLUSIVE",
    "ERROR",
    "Verdict",
    "BlockPartition",
    "CovarianceMatrix",
    "DiscreteLevyMeasure",
    "IdTriplet",
    "TimeGrid",
    "DiscreteJointDistribution",
    "CovFunction",
    "validate_partition",
    "project_levy_pair",
    "membership_S",
    "monotone_trajectory_predicate",
    "increments_covariance",
    "char_function_eval",
]

# Verdict statuses.
PASS = "PASS"
VIOLATION = "VIOLATION"
INCONCLUSIVE = "INCONCLUSIVE"
ERROR = "ERROR"

#: relative PSD slack: smallest eigenvalue may dip to -PSD_RTOL * trace(M)
PSD_RTOL = 1e-10

#: absolute tolerance for exact matrix-entry sign checks
ENTRY_TOL = 1e-12


@dataclass(frozen=True)
class Verdict:
    """Structured outcome of a check or statistical test.

    ``evidence`` carries the worst witness found (shape depends on the
    check); statistical verdicts additionally record sample sizes and
    significance levels in ``statistics``.
    """

    status: str
    evidence: dict = field(default_factory=dict)
    statistics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in (PASS, VIOLATION, INCONCLUSIVE, ERROR):
            raise ValueError(f"unknown verdict status {self.status!r}")
        if self.status == VIOLATION and not self.evidence:
            raise ValueError("a VIOLATION verdict must carry a witness")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "evidence": self.evidence,
            "statistics": self.statistics,
        }


@dataclass(frozen=True)
class BlockPartition:
    """A partition of the index set {1..index_count} into ordered blocks.

    Indices are 1-based externally (as in the JSON schema); each block keeps
    the fixed linear order in which its indices were given.
    """

    index_count: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = set()
        for b in self.blocks:
            if len(b) == 0:
                raise ValueError("empty block")
            for i in b:
                if not (1 <= i <= self.index_count):
                    raise ValueError(f"index {i} out of range 1..{self.index_count}")
                if i in seen:
                    raise ValueError(f"index {i} appears in more than one block")
                seen.add(i)
        if len(seen) != self.index_count:
            missing = sorted(set(range(1, self.index_count + 1)) - seen)
            raise ValueError(f"indices not covered by any block: {missing}")

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_of(self, k: int) -> int:
        """0-based position of the block containing index k (1-based)."""
        for pos, b in enumerate(self.blocks):
            if k in b:
                return pos
        raise ValueError(f"index {k} out of range")

    def same_block(self, k: int, l: int) -> bool:
        return self.block_of(k) == self.block_of(l)

    def cross_pairs(self):
        """All pairs (k, l), k < l, lying in different blocks (1-based)."""
        labels = self.labels()
        for k in range(1, self.index_count + 1):
            for l in range(k + 1, self.index_count + 1):
                if labels[k - 1] != labels[l - 1]:
                    yield k, l

    def labels(self) -> np.ndarray:
        """Array of block positions, entry i-1 for index i."""
        lab = np.empty(self.index_count, dtype=int)
        for pos, b in enumerate(self.blocks):
            for i in b:
                lab[i - 1] = pos
        return lab

    @staticmethod
    def singletons(index_count: int) -> "BlockPartition":
        return BlockPartition(index_count, tuple((i,) for i in range(1, index_count + 1)))

    @staticmethod
    def single(index_count: int) -> "BlockPartition":
        return BlockPartition(index_count, (tuple(range(1, index_count + 1)),))

    def to_lists(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]


def validate_partition(blocks, index_count: int) -> BlockPartition:
    """Validate a raw list of 1-based index lists against |I| = index_count."""
    return BlockPartition(int(index_count), tuple(tuple(int(i) for i in b) for b in blocks))


class CovarianceMatrix:
    """A symmetric positive-semidefinite matrix.

    Symmetry is required up to 1e-12 relative; the smallest eigenvalue may
    dip to -1e-10 * trace to tolerate floating-point Gram matrices.  For
    factorization the negative eigenvalues are clipped to zero.
    """

    def __init__(self, entries):
        m = np.asarray(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance matrix must be square")
        scale = max(np.abs(m).max(), 1.0) if m.size else 1.0
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * scale):
            raise ValueError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        w = np.linalg.eigvalsh(m)
        tr = max(np.trace(m), 0.0)
        if w.min(initial=0.0) < -PSD_RTOL * max(tr, 1e-300):
            raise ValueError(
                f"matrix is not positive semidefinite: min eigenvalue {w.min():.3e}"
            )
        self.entries = m
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def factor(self) -> np.ndarray:
        """Symmetric factor L with L @ L.T = entries (negative eigs clipped)."""
        w, v = np.linalg.eigh(self.entries)
        w = np.clip(w, 0.0, None)
        return v * np.sqrt(w)

    def to_lists(self) -> list[list[float]]:
        return self.entries.tolist()

    def __repr__(self):
        return f"CovarianceMatrix(dim={self.dim})"


class DiscreteLevyMeasure:
    """A finite discrete jump measure: atoms (location, mass), no atom at 0."""

    def __init__(self, dim: int, atoms):
        self.dim = int(dim)
        locs = []
        masses = []
        for x, m in atoms:
            x = np.asarray(x, dtype=float)
            if x.shape != (self.dim,):
                raise ValueError(f"atom location has dimension {x.shape}, expected ({self.dim},)")
            if not m > 0:
                raise ValueError("atom masses must be strictly positive")
            if np.all(x == 0.0):
                raise ValueError("jump measure may not charge the origin")
            locs.append(x)
            masses.append(float(m))
        self.locations = np.array(locs, dtype=float).reshape(len(locs), self.dim)
        self.masses = np.array(masses, dtype=float)
        self.locations.setflags(write=False)
        self.masses.setflags(write=False)

    @property
    def atoms(self):
        return list(zip(self.locations, self.masses))

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def __len__(self):
        return len(self.masses)

    @staticmethod
    def empty(dim: int) -> "DiscreteLevyMeasure":
        return DiscreteLevyMeasure(dim, [])

    def to_dict(self) -> dict:
        return {"atoms": [{"x": x.tolist(), "mass": m} for x, m in self.atoms]}

    def __repr__(self):
        return f"DiscreteLevyMeasure(dim={self.dim}, atoms={len(self)}, mass={self.total_mass:g})"


@dataclass(frozen=True)
class IdTriplet:
    """Levy-Khinchin data (drift, Gaussian covariance, finite jump measure).

    The characteristic function follows the untruncated finite-mass
    convention, with the compensator absorbed into the drift; see
    `char_function_eval`.
    """

    drift: np.ndarray
    gaussian: CovarianceMatrix
    levy: DiscreteLevyMeasure

    def __post_init__(self):
        a = np.asarray(self.drift, dtype=float)
        object.__setattr__(self, "drift", a)
        if a.ndim != 1:
            raise ValueError("drift must be a vector")
        if not (a.shape[0] == self.gaussian.dim == self.levy.dim):
            raise ValueError(
                f"dimension mismatch: drift {a.shape[0]}, gaussian {self.gaussian.dim}, "
                f"levy {self.levy.dim}"
            )

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    def mean(self) -> np.ndarray:
        """E X = drift + sum of mass * location under this convention."""
        if len(self.levy):
            return self.drift + self.levy.masses @ self.levy.locations
        return self.drift.copy()


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing times 0 = t_0 < t_1 < ... < t_n."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or t.shape[0] < 2:
            raise ValueError("a time grid needs at least t_0 and t_1")
        if t[0] != 0.0:
            raise ValueError("time grids must start at t_0 = 0")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("times must be strictly increasing")

    @property
    def n_increments(self) -> int:
        return self.times.shape[0] - 1


class DiscreteJointDistribution:
    """A finite-support joint law, the substrate of the exact oracles."""

    def __init__(self, support, probs):
        pts = np.asarray(support, dtype=float)
        if pts.ndim != 2:
            raise ValueError("support must be a list of vectors")
        p = np.asarray(probs, dtype=float)
        if p.shape != (pts.shape[0],):
            raise ValueError("probs must match support length")
        if np.any(p < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        if len({tuple(x) for x in pts}) != pts.shape[0]:
            raise ValueError("support points must be distinct")
        self.support = pts
        self.probs = p
        self.support.setflags(write=False)
        self.probs.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def __len__(self):
        return self.support.shape[0]

    def marginal(self, cols) -> "DiscreteJointDistribution":
        """Marginal law of the given 0-based coordinate subset."""
        pts = self.support[:, list(cols)]
        agg: dict[tuple, float] = {}
        for x, p in zip(pts, self.probs):
            key = tuple(x)
            agg[key] = agg.get(key, 0.0) + p
        keys = list(agg)
        return DiscreteJointDistribution([list(k) for k in keys], [agg[k] for k in keys])


# ---------------------------------------------------------------------------
# Covariance function families


class CovFunction:
    """A d x d family of covariance functions K^{k,l}(s, t), s, t >= 0.

    Built-in families (JSON spec {"family": ..., "params": {...}}):

    * ``brownian-min``   K^{k,l}(s,t) = C[k,l] * min(s,t)
    * ``fbm``            K^{k,l}(s,t) = C[k,l] * (s^2H + t^2H - |t-s|^2H)/2
    * ``product``        K^{k,l}(s,t) = C[k,l] * s * t
    * ``grid``           tabulated values, evaluation only at grid times
    * ``custom``         an arbitrary callable f(k, l, s, t) (library only)

    ``C`` is a symmetric d x d scale matrix, identity by default, so the
    required symmetry K^{k,l}(s,t) = K^{l,k}(t,s) holds by construction.
    """

    def __init__(self, d, family, params=None, func=None):
        self.d = int(d)
        self.family = family
        self.params = dict(params or {})
        self._func = func
        if family == "fbm":
            H = float(self.params.get("H", 0.5))
            if not (0.0 < H < 1.0):
                raise ValueError("fbm requires Hurst parameter H in (0,1)")
        if family in ("brownian-min", "fbm", "product"):
            scale = self.params.get("scale")
            C = np.eye(self.d) if scale is None else np.asarray(scale, dtype=float)
            if C.shape != (self.d, self.d) or not np.allclose(C, C.T):
                raise ValueError("scale must be a symmetric d x d matrix")
            self._scale = C
        elif family == "grid":
            times = np.asarray(self.params["times"], dtype=float)
            values = np.asarray(self.params["values"], dtype=float)
            if values.shape != (self.d, self.d, len(times), len(times)):
                raise ValueError("grid values must have shape (d, d, m, m)")
            self._grid_times = times
            self._grid_values = values
        elif family == "custom":
            if func is None:
                raise ValueError("custom family requires a callable")
        else:
            raise ValueError(f"unknown covariance family {family!r}")

    def __call__(self, k, l, s, t):
        """Evaluate K^{k,l}(s, t); k, l are 0-based, s and t broadcast."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.family == "brownian-min":
            return self._scale[k, l] * np.minimum(s, t)
        if self.family == "product":
            return self._scale[k, l] * s * t
        if self.family == "fbm":
            H = float(self.params.get("H", 0.5))
            h2 = 2.0 * H
            return self._scale[k, l] * 0.5 * (s**h2 + t**h2 - np.abs(t - s) ** h2)
        if self.family == "grid":
            i = self._grid_index(s)
            j = self._grid_index(t)
            return self._grid_values[k, l][i, j]
        return self._func(k, l, s, t)

    def _grid_index(self, s):
        idx = np.searchsorted(self._grid_times, np.asarray(s, dtype=float))
        idx = np.clip(idx, 0, len(self._grid_times) - 1)
        ok = np.isclose(self._grid_times[idx], s, rtol=0.0, atol=1e-9)
        if not np.all(ok):
            bad = np.asarray(s)[~np.asarray(ok)] if np.ndim(s) else s
            raise ValueError(f"time {bad} is not a grid time of this covariance spec")
        return idx

    @staticmethod
    def from_spec(spec: dict) -> "CovFunction":
        family = spec["family"]
        params = dict(spec.get("params", {}))
        d = int(params.pop("d", spec.get("d", 1)))
        return CovFunction(d, family, params)

    def to_spec(self) -> dict:
        params = dict(self.params)
        for key in ("scale", "times", "values"):
            if isinstance(params.get(key), np.ndarray):
                params[key] = params[key].tolist()
        return {"family": self.family, "d": self.d, "params": params}


# ---------------------------------------------------------------------------
# Operations


def project_levy_pair(nu: DiscreteLevyMeasure, k: int, l: int) -> DiscreteLevyMeasure:
    """Two-dimensional characteristic of nu for the coordinate pair (k, l).

    k and l are 1-based with k < l.  Atoms are projected to their (k, l)
    coordinates, masses of coinciding images are summed, and any mass landing
    at the origin of the plane is discarded.
    """
    if not (1 <= k < l <= nu.dim):
        raise ValueError(f"need 1 <= k < l <= {nu.dim}, got ({k}, {l})")
    agg: dict[tuple[float, float], float] = {}
    for x, m in nu.atoms:
        key = (float(x[k - 1]), float(x[l - 1]))
        if key == (0.0, 0.0):
            continue
        agg[key] = agg.get(key, 0.0) + m
    return DiscreteLevyMeasure(2, [(np.array(key), m) for key, m in agg.items()])


def membership_S(x, p: BlockPartition) -> bool:
    """Whether x lies in the closed support set attached to partition p.

    The set is the union of the closed nonnegative orthant, the closed
    nonpositive orthant, and the subspaces supported inside a single block
    (all coordinates outside one block equal to zero).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (p.index_count,):
        raise ValueError(f"vector has dimension {x.shape}, expected ({p.index_count},)")
    if np.all(x >= 0.0) or np.all(x <= 0.0):
        return True
    nonzero = np.flatnonzero(x != 0.0)
    labels = p.labels()
    return len(set(labels[nonzero])) <= 1


def monotone_trajectory_predicate(xs) -> bool:
    """Whether a discrete trajectory x_0..x_n is an admissible jump path.

    True iff the path is coordinatewise nondecreasing, or nonincreasing, or
    constant after the start (x_1 = ... = x_n), or constant up to some index
    m-1 and constant again from m on (a single jump at m).
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    if xs.ndim != 2 or xs.shape[0] < 2:
        raise ValueError("need at least x_0 and x_1, all of equal dimension")
    diffs = np.diff(xs, axis=0)
    if np.all(diffs >= 0.0) or np.all(diffs <= 0.0):
        return True
    flat = np.all(diffs == 0.0, axis=1)  # flat[i]: x_i == x_{i+1}
    n = diffs.shape[0]
    if np.all(flat[1:]):  # x_1 = ... = x_n
        return True
    for m in range(2, n + 1):  # x_0 = .. = x_{m-1} and x_m = .. = x_n
        if np.all(flat[: m - 1]) and np.all(flat[m:]):
            return True
    return False


def increments_covariance(K: CovFunction, grid: TimeGrid) -> CovarianceMatrix:
    """Covariance of the stacked increment vector of a Gaussian process.

    Row (i, k) of the result corresponds to coordinate k of the i-th
    increment (increment-major ordering); entries are rectangle increments
    of K^{k,l} over consecutive grid cells.  Raises if the result is not
    PSD within tolerance, which signals an invalid covariance spec.
    """
    t = grid.times
    d = K.d
    n = grid.n_increments
    out = np.empty((n * d, n * d))
    for k in range(d):
        for l in range(d):
            # rectangle increment over (t_{i-1}, t_i] x (t_{j-1}, t_j]
            full = np.array([[K(k, l, t[i], t[j]) for j in range(n + 1)] for i in range(n + 1)])
            rect = full[1:, 1:] - full[1:, :-1] - full[:-1, 1:] + full[:-1, :-1]
            out[k::d, l::d] = rect
    return CovarianceMatrix(out)


def char_function_eval(triplet: IdTriplet, theta) -> complex:
    """Characteristic function of the triplet at theta.

    Untruncated convention, valid because the jump measure has finite mass:
    ln phi(theta) = i<theta, a> - <theta, Sigma theta>/2
                    + sum over atoms of mass * (e^{i<theta, u>} - 1).
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (triplet.dim,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({triplet.dim},)")
    log_phi = 1j * (theta @ triplet.drift) - 0.5 * (theta @ triplet.gaussian.entries @ theta)
    if len(triplet.levy):
        phases = triplet.levy.locations @ theta
        log_phi = log_phi + np.sum(triplet.levy.masses * (np.exp(1j * phases) - 1.0))
    return complex(np.exp(log_phi))
