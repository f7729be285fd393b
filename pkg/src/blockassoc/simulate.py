"""Seed-deterministic samplers for every law the testers and harnesses use.

All randomness is derived from a (seed, stream) pair through
`numpy.random.SeedSequence`, so regenerating a batch with the same seed,
stream and count reproduces identical bits regardless of what else has been
sampled in the process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CovFunction, CovarianceMatrix, IdTriplet, TimeGrid, increments_covariance

__all__ = [
    "rng_for",
    "SampleBatch",
    "MaModel",
    "sample_gaussian_vector",
    "sample_gaussian_increments",
    "sample_compound_poisson_id",
    "sample_hps_pair",
    "sample_stationary_ma",
    "Source",
    "GaussianSource",
    "TripletSource",
    "IncrementSource",
    "MaWindowSource",
    "BatchSource",
    "brownian_antithetic_source",
]


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """A generator for the given master seed and stream path."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=stream)))


@dataclass(frozen=True)
class SampleBatch:
    """A count x dim matrix of i.i.d. rows with its seed provenance."""

    data: np.ndarray
    seed: int
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError("batch data must be a count x dim matrix")
        self.data.setflags(write=False)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MaModel:
    """Gaussian moving-average model X_j = e_j + sum_r Theta_r e_{j-r}.

    Innovations e_j are i.i.d. centered Gaussian with covariance C.  This is
    the canonical strictly stationary family for the limit-theorem harness:
    with Gaussian innovations the weak block-association hypothesis has an
    exact covariance certificate.
    """

    innovation_cov: CovarianceMatrix
    thetas: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        d = self.innovation_cov.dim
        ths = tuple(np.asarray(t, dtype=float) for t in self.thetas)
        for t in ths:
            if t.shape != (d, d):
                raise ValueError(f"coefficient matrix has shape {t.shape}, expected ({d},{d})")
        object.__setattr__(self, "thetas", ths)

    @property
    def d(self) -> int:
        return self.innovation_cov.dim

    @property
    def order(self) -> int:
        return len(self.thetas)

    def lag_covariance(self, h: int) -> np.ndarray:
        """Gamma_h = E X_1 X_{1+h}^T (zero for |h| > order)."""
        q = self.order
        if abs(h) > q:
            return np.zeros((self.d, self.d))
        coeffs = [np.eye(self.d)] + [np.asarray(t) for t in self.thetas]
        C = self.innovation_cov.entries
        out = np.zeros((self.d, self.d))
        h = int(h)
        if h >= 0:
            #  E X_1 X_{1+h}^T = sum_r coeffs[r] C coeffs[r+h]^T
            for r in range(0, q - h + 1):
                out += coeffs[r] @ C @ coeffs[r + h].T
        else:
            out = self.lag_covariance(-h).T
        return out


def sample_gaussian_vector(
    sigma: CovarianceMatrix, count: int, seed: int, stream: tuple[int, ...] = ()
) -> SampleBatch:
    """i.i.d. centered Gaussian rows with the given covariance."""
    rng = rng_for(seed, *stream)
    L = sigma.factor()
    z = rng.standard_normal((count, sigma.dim))
    return SampleBatch(z @ L.T, seed, stream)


def sample_gaussian_increments(
    K: CovFunction, grid: TimeGrid, count: int, seed: int, stream: tuple[int, ...] = ()
) -> SampleBatch:
    """Samples of the stacked increment vector of a Gaussian process.

    Rows have dimension n * d, increment-major, with covariance equal to
    `increments_covariance(K, grid)`.
    """
    return sample_gaussian_vector(increments_covariance(K, grid), count, seed, stream)


def _poisson_jump_sum(rng, count, locations, masses):
    """Sum of a Poisson number of jumps per row, one superposed stream per atom."""
    if len(masses) == 0:
        return 0.0
    counts = rng.poisson(lam=masses, size=(count, len(masses)))
    return counts @ locations


def sample_compound_poisson_id(
    triplet: IdTriplet, count: int, seed: int, stream: tuple[int, ...] = ()
) -> SampleBatch:
    """Exact samples of the ID law with the given finite-activity triplet.

    Each row is drift + Gaussian(Sigma) + compound-Poisson jumps; the atoms
    of the jump measure are superposed as independent Poisson streams, which
    matches the untruncated characteristic-function convention.
    """
    rng = rng_for(seed, *stream)
    L = triplet.gaussian.factor()
    rows = rng.standard_normal((count, triplet.dim)) @ L.T
    rows += triplet.drift
    rows += _poisson_jump_sum(rng, count, triplet.levy.locations, triplet.levy.masses)
    return SampleBatch(rows, seed, stream)


def hps_doubled_triplet(triplet: IdTriplet, alpha: float):
    """Jump atoms of the interpolated pair on the doubled space.

    For each original atom (u, m): ((u, 0), (1-a)m), ((0, u), (1-a)m) and
    the diagonal lift ((u, u), a m).  Together with the Gaussian coupling
    [[S, aS], [aS, S]] and marginal drifts this realizes the interpolating
    characteristic function phi_0^{1-a} phi_1^a exactly.
    """
    d = triplet.dim
    locs = []
    masses = []
    for u, m in triplet.levy.atoms:
        if alpha < 1.0:
            locs.append(np.concatenate([u, np.zeros(d)]))
            masses.append((1.0 - alpha) * m)
            locs.append(np.concatenate([np.zeros(d), u]))
            masses.append((1.0 - alpha) * m)
        if alpha > 0.0:
            locs.append(np.concatenate([u, u]))
            masses.append(alpha * m)
    if locs:
        return np.array(locs), np.array(masses)
    return np.zeros((0, 2 * d)), np.zeros(0)


def sample_hps_pair(
    triplet: IdTriplet, alpha: float, count: int, seed: int, stream: tuple[int, ...] = ()
) -> SampleBatch:
    """Samples of the interpolated pair (Y, Z) on the doubled space.

    Both marginals are distributed as the triplet's law for every alpha;
    alpha = 0 gives independent copies and alpha = 1 the identical copy
    (exactly, row by row).  Rows are (Y, Z) concatenated, dimension 2 * dim.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    rng = rng_for(seed, *stream)
    d = triplet.dim
    L = triplet.gaussian.factor()
    g1 = rng.standard_normal((count, d)) @ L.T
    g2 = rng.standard_normal((count, d)) @ L.T
    y = g1
    z = alpha * g1 + np.sqrt(1.0 - alpha * alpha) * g2
    rows = np.concatenate([y, z], axis=1)
    rows += np.concatenate([triplet.drift, triplet.drift])
    locs, masses = hps_doubled_triplet(triplet, alpha)
    rows += _poisson_jump_sum(rng, count, locs, masses)
    return SampleBatch(rows, seed, stream)


def sample_stationary_ma(
    model: MaModel, length: int, count: int, seed: int, stream: tuple[int, ...] = ()
) -> np.ndarray:
    """count independent stationary paths X_1..X_length, shape (count, length, d).

    Uses a burn-in of q innovations so the paths are exactly stationary.
    """
    q = model.order
    if length <= q:
        raise ValueError(f"length must exceed the MA order {q}")
    rng = rng_for(seed, *stream)
    d = model.d
    L = model.innovation_cov.factor()
    eps = rng.standard_normal((count, length + q, d)) @ L.T
    x = eps[:, q:, :].copy()
    for r, theta in enumerate(model.thetas, start=1):
        x += eps[:, q - r : q - r + length, :] @ theta.T
    return x


# ---------------------------------------------------------------------------
# Sources: the sampling interface the Monte Carlo testers consume.


class Source:
    """A law that can be sampled in i.i.d. rows of a fixed dimension."""

    dim: int
    second_moments_finite: bool = True

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> dict:
        """JSON-serializable description, sufficient to rebuild the source."""
        raise NotImplementedError


class GaussianSource(Source):
    def __init__(self, sigma: CovarianceMatrix):
        self.sigma = sigma
        self.dim = sigma.dim
        self._factor = sigma.factor()

    def sample(self, count, rng):
        return rng.standard_normal((count, self.dim)) @ self._factor.T

    def spec(self):
        return {"kind": "gaussian", "sigma": self.sigma.to_lists()}


class TripletSource(Source):
    def __init__(self, triplet: IdTriplet):
        self.triplet = triplet
        self.dim = triplet.dim
        self._factor = triplet.gaussian.factor()

    def sample(self, count, rng):
        t = self.triplet
        rows = rng.standard_normal((count, self.dim)) @ self._factor.T
        rows += t.drift
        if len(t.levy):
            counts = rng.poisson(lam=t.levy.masses, size=(count, len(t.levy)))
            rows += counts @ t.levy.locations
        return rows

    def spec(self):
        t = self.triplet
        return {
            "kind": "triplet",
            "drift": t.drift.tolist(),
            "gaussian": t.gaussian.to_lists(),
            "levy": t.levy.to_dict(),
        }


class IncrementSource(Source):
    """Stacked Gaussian-process increments over a fixed grid."""

    def __init__(self, K: CovFunction, grid: TimeGrid):
        self.K = K
        self.grid = grid
        cov = increments_covariance(K, grid)
        self.dim = cov.dim
        self._factor = cov.factor()

    def sample(self, count, rng):
        return rng.standard_normal((count, self.dim)) @ self._factor.T

    def spec(self):
        return {
            "kind": "increments",
            "covfun": self.K.to_spec(),
            "grid": self.grid.times.tolist(),
        }


class MaWindowSource(Source):
    """Windows (X_1, ..., X_w) of a stationary MA sequence, flattened."""

    def __init__(self, model: MaModel, window: int):
        self.model = model
        self.window = int(window)
        self.dim = self.window * model.d

    def sample(self, count, rng):
        q = self.model.order
        d = self.model.d
        L = self.model.innovation_cov.factor()
        eps = rng.standard_normal((count, self.window + q, d)) @ L.T
        x = eps[:, q:, :].copy()
        for r, theta in enumerate(self.model.thetas, start=1):
            x += eps[:, q - r : q - r + self.window, :] @ theta.T
        return x.reshape(count, self.dim)

    def spec(self):
        return {
            "kind": "ma",
            "innovation_cov": self.model.innovation_cov.to_lists(),
            "thetas": [t.tolist() for t in self.model.thetas],
            "window": self.window,
        }


class BatchSource(Source):
    """A fixed batch of rows; sampling draws rows with replacement."""

    def __init__(self, data: np.ndarray, label: str = "batch"):
        self.data = np.asarray(data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError("batch must be a count x dim matrix")
        self.dim = self.data.shape[1]
        self.label = label

    def sample(self, count, rng):
        if count >= self.data.shape[0]:
            return self.data
        idx = rng.choice(self.data.shape[0], size=count, replace=False)
        return self.data[idx]

    def spec(self):
        return {"kind": "csv", "path": self.label}


def brownian_antithetic_source(grid: TimeGrid | None = None) -> IncrementSource:
    """Increments of the antithetic planar Brownian motion (Z, -Z).

    The canonical counterexample: independent increments, hence associated
    between the natural 2-coordinate blocks, but never associated across
    the antithetic pair.
    """
    if grid is None:
        grid = TimeGrid(np.array([0.0, 1.0, 2.0]))
    K = CovFunction(2, "brownian-min", {"scale": [[1.0, -1.0], [-1.0, 1.0]]})
    return IncrementSource(K, grid)
