"""Definition-level testing of association properties.

Two routes are provided.  Exact oracles enumerate monotone test functions on
finite discrete laws (binary upper-set indicators for plain association,
monotone chain labelings per block for the block variant) and decide the
definition outright.  Monte Carlo testers draw random monotone function
pairs against a sampler and run one-sided z-tests on the covariance sign,
Bonferroni-corrected across function pairs; their PASS is statistical
evidence, never proof, while a VIOLATION ships a replayable witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import stats

from .core import (
    PASS,
    VIOLATION,
    BlockPartition,
    DiscreteJointDistribution,
    IdTriplet,
    Verdict,
)
from .simulate import (
    SampleBatch,
    BatchSource,
    Source,
    rng_for,
    sample_compound_poisson_id,
    sample_hps_pair,
)

__all__ = [
    "MonotoneFunction",
    "McConfig",
    "gen_monotone_function",
    "mc_block_association_test",
    "mc_weak_block_association_test",
    "mc_negative_block_association_test",
    "exact_discrete_association",
    "exact_discrete_association_witness",
    "exact_discrete_block_association",
    "exact_discrete_block_association_witness",
    "SmoothFunction",
    "HpsReport",
    "hps_formula_verify",
    "replay_witness",
]


# ---------------------------------------------------------------------------
# Monotone test functions


class MonotoneFunction:
    """A coordinatewise nondecreasing function of a fixed dimension.

    Supported forms: sums of half-space indicators 1{<w,x> > c} with w >= 0
    (bounded; the default for covariance existence), shifted coordinate
    maxima max_k(x_k - b_k), and nonnegative linear forms <w,x>.  Functions
    serialize to plain dicts so any Monte Carlo witness can be replayed.
    """

    def __init__(self, dim: int, kind: str, params: dict):
        self.dim = int(dim)
        self.kind = kind
        self.params = params
        if kind == "indicator-sum":
            terms = params["terms"]
            for w, c in terms:
                w = np.asarray(w, dtype=float)
                if w.shape != (self.dim,) or np.any(w < 0.0):
                    raise ValueError("indicator weights must be nonnegative, length dim")
            self._w = np.array([t[0] for t in terms], dtype=float)  # (T, dim)
            self._c = np.array([t[1] for t in terms], dtype=float)
        elif kind == "coordmax":
            b = np.asarray(params["b"], dtype=float)
            if b.shape != (self.dim,):
                raise ValueError("coordmax shift must have length dim")
            self._b = b
        elif kind == "linear":
            w = np.asarray(params["w"], dtype=float)
            if w.shape != (self.dim,) or np.any(w < 0.0):
                raise ValueError("linear weights must be nonnegative, length dim")
            self._w = w
        elif kind == "constant":
            self._value = float(params.get("value", 0.0))
        else:
            raise ValueError(f"unknown monotone function kind {kind!r}")

    @property
    def bounded(self) -> bool:
        return self.kind in ("indicator-sum", "constant")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "indicator-sum":
            return (x @ self._w.T > self._c).sum(axis=1).astype(float)
        if self.kind == "coordmax":
            return (x - self._b).max(axis=1)
        if self.kind == "linear":
            return x @ self._w
        return np.full(x.shape[0], self._value)

    def to_dict(self) -> dict:
        params = self.params
        if self.kind == "indicator-sum":
            params = {"terms": [[np.asarray(w).tolist(), float(c)] for w, c in params["terms"]]}
        elif self.kind == "coordmax":
            params = {"b": np.asarray(params["b"]).tolist()}
        elif self.kind == "linear":
            params = {"w": np.asarray(params["w"]).tolist()}
        return {"dim": self.dim, "kind": self.kind, "params": params}

    @staticmethod
    def from_dict(d: dict) -> "MonotoneFunction":
        return MonotoneFunction(d["dim"], d["kind"], d["params"])

    def is_monotone_sampled(self, rng=None, n_pairs: int = 1000) -> bool:
        """Check f(x) <= f(y) on random dominated pairs x <= y."""
        rng = rng or np.random.default_rng(0)
        x = rng.standard_normal((n_pairs, self.dim))
        y = x + rng.exponential(1.0, size=(n_pairs, self.dim)) * (
            rng.random((n_pairs, self.dim)) < 0.7
        )
        return bool(np.all(self(x) <= self(y) + 1e-12))


def _draw_weights(dim: int, rng) -> np.ndarray:
    """Nonnegative weights, sparse with decent probability of a single spike."""
    if rng.random() < 0.5:
        w = np.zeros(dim)
        w[rng.integers(dim)] = 1.0
        return w
    active = rng.random(dim) < 0.6
    if not active.any():
        active[rng.integers(dim)] = True
    w = np.where(active, rng.exponential(1.0, size=dim), 0.0)
    if w.sum() == 0.0:
        w[rng.integers(dim)] = 1.0
    return w


def gen_monotone_function(dim: int, family: str, seed_or_rng) -> MonotoneFunction:
    """Draw a random monotone function of the requested family.

    ``family`` is one of halfspace, indicator-sum, coordmax, linear.
    Accepts either a seed or a Generator.
    """
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else rng_for(int(seed_or_rng))
    if family == "halfspace":
        return MonotoneFunction(
            dim, "indicator-sum", {"terms": [(_draw_weights(dim, rng), rng.standard_normal())]}
        )
    if family == "indicator-sum":
        n_terms = int(rng.integers(1, 4))
        terms = [(_draw_weights(dim, rng), rng.standard_normal()) for _ in range(n_terms)]
        return MonotoneFunction(dim, "indicator-sum", {"terms": terms})
    if family == "coordmax":
        return MonotoneFunction(dim, "coordmax", {"b": rng.standard_normal(dim)})
    if family == "linear":
        return MonotoneFunction(dim, "linear", {"w": _draw_weights(dim, rng)})
    raise ValueError(f"unknown monotone function family {family!r}")


def _draw_indicator_terms(dim: int, rng, max_terms: int = 2) -> list[tuple[np.ndarray, float]]:
    """Weights and quantile levels of an indicator-sum test function.

    Thresholds are fixed later at pilot-sample quantiles of the projections,
    which keeps the indicators informative whatever the source's location
    and scale; the pilot rows are excluded from the test statistic, so the
    calibration does not bias the covariance estimate.
    """
    n_terms = int(rng.integers(1, max_terms + 1))
    return [(_draw_weights(dim, rng), float(rng.uniform(0.15, 0.85))) for _ in range(n_terms)]


def _indicator_from_terms(dim, terms, thresholds) -> MonotoneFunction:
    return MonotoneFunction(
        dim,
        "indicator-sum",
        {"terms": [(w, float(c)) for (w, _), c in zip(terms, thresholds)]},
    )


def _pilot_thresholds(pilot_proj: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Per-column empirical quantiles of pilot projections at given levels."""
    srt = np.sort(pilot_proj, axis=0)
    idx = np.clip((levels * (srt.shape[0] - 1)).astype(int), 0, srt.shape[0] - 1)
    return srt[idx, np.arange(srt.shape[1])]


# ---------------------------------------------------------------------------
# Monte Carlo testers


@dataclass(frozen=True)
class McConfig:
    """Statistical policy of the Monte Carlo testers.

    One-sided z-tests per function pair, Bonferroni-corrected familywise at
    ``alpha_sig`` across ``n_pairs`` pairs.
    """

    n_samples: int = 100_000
    n_pairs: int = 200
    alpha_sig: float = 0.01
    seed: int = 42
    family_weights: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_samples < 1000:
            raise ValueError("need at least 1000 samples")
        if self.n_pairs < 1:
            raise ValueError("need at least one function pair")
        if not (0.0 < self.alpha_sig < 1.0):
            raise ValueError("significance level must lie in (0, 1)")


def _as_source(source) -> Source:
    if isinstance(source, Source):
        return source
    if isinstance(source, SampleBatch):
        return BatchSource(source.data)
    if isinstance(source, np.ndarray):
        return BatchSource(source)
    raise TypeError(f"cannot interpret {type(source).__name__} as a sample source")


def _cov_and_se(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Covariance estimate and its standard error (delta method)."""
    n = a.shape[0]
    da = a - a.mean()
    db = b - b.mean()
    cov = float(da @ db) / n
    prod = da * db
    se = float(prod.std()) / np.sqrt(n)
    return cov, se


def _mc_association_core(source, p: BlockPartition, cfg: McConfig, mode: str) -> Verdict:
    """Shared machinery of the three Monte Carlo association testers.

    mode: "block" (g, h on the full block image), "weak" (g, h on disjoint
    random block subsets) or "negative" (weak design, flipped inequality).
    """
    source = _as_source(source)
    if source.dim != p.index_count:
        raise ValueError(f"source dim {source.dim} != partition size {p.index_count}")
    n_blocks = p.n_blocks
    if mode in ("weak", "negative") and n_blocks < 2:
        raise ValueError("weak/negative tests need at least 2 blocks")
    data = source.sample(cfg.n_samples, rng_for(cfg.seed, 0))
    if data.shape[0] < 1000:
        raise ValueError("insufficient samples from source")
    n_cal = max(200, min(1000, data.shape[0] // 10))
    # indicator evaluation is threshold-crossing only; single precision is
    # ample and halves the memory traffic of the batched projections
    data32 = np.asarray(data, dtype=np.float32)
    pilot, test = data32[:n_cal], data32[n_cal:]
    blocks0 = [[i - 1 for i in b] for b in p.blocks]

    flip = -1.0 if mode == "negative" else 1.0
    z_crit = float(stats.norm.isf(cfg.alpha_sig / cfg.n_pairs))
    worst = None  # (z, witness dict)
    n_degenerate = 0
    n_rejected = 0

    # draw every trial's function specs up front (one derived stream each),
    # then evaluate the per-block indicators in batched matmuls over trial
    # chunks; only the small g/h compositions stay per-trial.
    trials = []
    for trial in range(cfg.n_pairs):
        rng = rng_for(cfg.seed, 1, trial)
        f_terms = [_draw_indicator_terms(len(b), rng) for b in blocks0]
        if mode == "block":
            g_cols = h_cols = list(range(n_blocks))
        else:
            perm = rng.permutation(n_blocks)
            split = int(rng.integers(1, n_blocks))
            g_cols = sorted(perm[:split].tolist())
            h_cols = sorted(perm[split:].tolist())
        g_terms = _draw_indicator_terms(len(g_cols), rng)
        h_terms = _draw_indicator_terms(len(h_cols), rng)
        trials.append((f_terms, g_cols, h_cols, g_terms, h_terms))

    chunk_size = 16
    for chunk_start in range(0, cfg.n_pairs, chunk_size):
        chunk = trials[chunk_start : chunk_start + chunk_size]
        nc = len(chunk)
        f3p = np.empty((n_blocks, nc, pilot.shape[0]), dtype=np.float32)
        f3t = np.empty((n_blocks, nc, test.shape[0]), dtype=np.float32)
        f_thresholds = [[None] * n_blocks for _ in range(nc)]
        for bi, b in enumerate(blocks0):
            W = np.column_stack(
                [w for (f_terms, *_rest) in chunk for (w, _) in f_terms[bi]]
            ).astype(np.float32)
            levels = np.array([lv for (f_terms, *_r) in chunk for (_, lv) in f_terms[bi]])
            counts = np.array([len(f_terms[bi]) for (f_terms, *_r) in chunk])
            starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
            c = _pilot_thresholds(pilot[:, b] @ W, levels)
            for t in range(nc):
                f_thresholds[t][bi] = c[starts[t] : starts[t] + counts[t]]
            ind_p = (pilot[:, b] @ W > c).T
            ind_t = (test[:, b] @ W > c).T
            f3p[bi] = ind_p[starts]
            f3t[bi] = ind_t[starts]
            extra = np.flatnonzero(counts > 1)
            if extra.size:
                f3p[bi][extra] += ind_p[starts[extra] + 1]
                f3t[bi][extra] += ind_t[starts[extra] + 1]

        # evaluate every trial's g and h in one batched pass: zero-extend the
        # term weights from the trial's block subset to all blocks (the
        # padded coordinates never contribute), project, calibrate the
        # thresholds on the pilot projections, count indicator hits
        max_t = max(
            len(terms) for *_x, g_terms, h_terms in chunk for terms in (g_terms, h_terms)
        )
        proj_w = np.zeros((nc, 2 * max_t, n_blocks), dtype=np.float32)
        levels = np.zeros((nc, 2, max_t))
        for t, (f_terms, g_cols, h_cols, g_terms, h_terms) in enumerate(chunk):
            for side, (cols, terms) in enumerate(((g_cols, g_terms), (h_cols, h_terms))):
                for a, (w, lv) in enumerate(terms):
                    proj_w[t, side * max_t + a, cols] = w
                    levels[t, side, a] = lv
        pp = (proj_w @ f3p.transpose(1, 0, 2)).reshape(nc, 2, max_t, -1)
        pt = (proj_w @ f3t.transpose(1, 0, 2)).reshape(nc, 2, max_t, -1)
        srt = np.sort(pp, axis=3)
        idx = np.clip((levels * (srt.shape[3] - 1)).astype(int), 0, srt.shape[3] - 1)
        thresholds = np.take_along_axis(srt, idx[..., None], axis=3)[..., 0]
        # a padded term projects to identically 0 with threshold 0, so the
        # strict inequality keeps it out of the count
        counts_gh = (pt > thresholds[..., None]).sum(axis=2, dtype=np.float32)
        a_vals = counts_gh[:, 0]  # (nc, n_test)
        b_all = counts_gh[:, 1]
        da = a_vals - a_vals.mean(axis=1, dtype=np.float64, keepdims=True)
        db = b_all - b_all.mean(axis=1, dtype=np.float64, keepdims=True)
        prod = np.multiply(da, db, dtype=np.float64)
        covs = prod.mean(axis=1)
        ses = prod.std(axis=1) / np.sqrt(prod.shape[1])

        for t, (f_terms, g_cols, h_cols, g_terms, h_terms) in enumerate(chunk):
            trial = chunk_start + t
            cov, se = float(covs[t]), float(ses[t])
            if se == 0.0:
                n_degenerate += 1
                continue
            z = flip * cov / se
            if z < -z_crit:
                n_rejected += 1
            if worst is None or z < worst[0]:
                gc = [float(thresholds[t, 0, a]) for a in range(len(g_terms))]
                hc = [float(thresholds[t, 1, a]) for a in range(len(h_terms))]
                g = _indicator_from_terms(len(g_cols), g_terms, gc)
                h = _indicator_from_terms(len(h_cols), h_terms, hc)
                fs = [
                    _indicator_from_terms(len(b), terms, f_thresholds[t][bi])
                    for bi, (b, terms) in enumerate(zip(blocks0, f_terms))
                ]
                worst = (
                    z,
                    {
                        "trial": trial,
                        "mode": mode,
                        "estimate": cov,
                        "se": se,
                        "z": z,
                        "n_test": int(test.shape[0]),
                        "blocks": p.to_lists(),
                        "g_blocks": g_cols,
                        "h_blocks": h_cols,
                        "functions": {
                            "f": [f.to_dict() for f in fs],
                            "g": g.to_dict(),
                            "h": h.to_dict(),
                        },
                        "source": source.spec(),
                        "seed": cfg.seed,
                    },
                )
    statistics = {
        "n_samples": int(data.shape[0]),
        "n_calibration": n_cal,
        "n_pairs": cfg.n_pairs,
        "alpha_sig": cfg.alpha_sig,
        "bonferroni_level": cfg.alpha_sig / cfg.n_pairs,
        "z_critical": z_crit,
        "n_rejected": n_rejected,
        "n_degenerate": n_degenerate,
        "worst_z": worst[0] if worst else None,
        "note": "PASS is statistical evidence at the configured level, not proof",
    }
    if n_rejected > 0:
        return Verdict(VIOLATION, evidence={"witness": worst[1]}, statistics=statistics)
    return Verdict(PASS, statistics=statistics)


def mc_block_association_test(source, p: BlockPartition, cfg: McConfig) -> Verdict:
    """Monte Carlo falsification of association between blocks.

    Each trial composes random monotone per-block functions with a random
    monotone pair (g, h) on the block image and z-tests the sign of
    Cov(g(F), h(F)).
    """
    return _mc_association_core(source, p, cfg, "block")


def mc_weak_block_association_test(source, p: BlockPartition, cfg: McConfig) -> Verdict:
    """As the block test, but g and h act on disjoint random block subsets."""
    return _mc_association_core(source, p, cfg, "weak")


def mc_negative_block_association_test(source, p: BlockPartition, cfg: McConfig) -> Verdict:
    """Negative association between blocks: the same design, inequality flipped."""
    return _mc_association_core(source, p, cfg, "negative")


def replay_witness(witness: dict, seed: int | None = None, n_samples: int | None = None) -> Verdict:
    """Re-evaluate a serialized violation witness on a fresh batch.

    With the recorded seed the covariance estimate reproduces up to Monte
    Carlo noise on the recorded trial's own stream; with a different seed
    the negative sign should persist as a property of the law.
    """
    from .io import source_from_spec  # local import; io depends on samplers

    source = source_from_spec(witness["source"])
    seed = witness["seed"] if seed is None else seed
    n = n_samples or witness["n_test"]
    rng = rng_for(seed, 2, witness.get("trial", 0))
    data = source.sample(n, rng)
    blocks0 = [[i - 1 for i in b] for b in witness["blocks"]]
    fs = [MonotoneFunction.from_dict(d) for d in witness["functions"]["f"]]
    g = MonotoneFunction.from_dict(witness["functions"]["g"])
    h = MonotoneFunction.from_dict(witness["functions"]["h"])
    F = np.column_stack([f(data[:, b]) for f, b in zip(fs, blocks0)])
    cov, se = _cov_and_se(g(F[:, witness["g_blocks"]]), h(F[:, witness["h_blocks"]]))
    flip = -1.0 if witness.get("mode") == "negative" else 1.0
    z = flip * cov / se if se > 0.0 else 0.0
    statistics = {
        "estimate": cov,
        "se": se,
        "z": z,
        "recorded_estimate": witness["estimate"],
        "n_samples": int(data.shape[0]),
        "seed": seed,
    }
    if z < -stats.norm.isf(0.001):
        return Verdict(VIOLATION, evidence={"witness": dict(witness, estimate=cov, se=se, z=z)},
                       statistics=statistics)
    return Verdict(PASS, statistics=statistics)


# ---------------------------------------------------------------------------
# Exact oracles on finite discrete laws


def _upper_sets(support: np.ndarray, budget: int) -> np.ndarray:
    """Boolean matrix of all upper sets of the coordinatewise order on support."""
    k = support.shape[0]
    if k > budget:
        raise ValueError(f"support size {k} exceeds the enumeration budget {budget}")
    le = np.all(support[:, None, :] <= support[None, :, :], axis=2)  # le[i,j]: x_i <= x_j
    members = (np.arange(2**k)[:, None] >> np.arange(k)) & 1  # (2^k, k) bits
    members = members.astype(bool)
    valid = np.ones(2**k, dtype=bool)
    for i in range(k):
        for j in range(k):
            if i != j and le[i, j]:
                valid &= ~(members[:, i] & ~members[:, j])
    return members[valid]


def exact_discrete_association_witness(
    dist: DiscreteJointDistribution, budget: int = 16
) -> tuple[bool, dict | None]:
    """Exact association verdict with the worst upper-set pair as witness.

    Binary upper-set indicators suffice for association of a finite law
    (the classical reduction of monotone test functions to indicators), so
    enumerating all pairs of upper sets decides the definition outright.
    """
    if dist.dim == 1:
        return True, None
    U = _upper_sets(dist.support, budget).astype(float)
    pu = U @ dist.probs
    puv = (U * dist.probs) @ U.T
    cov = puv - np.outer(pu, pu)
    i, j = np.unravel_index(np.argmin(cov), cov.shape)
    if cov[i, j] >= -1e-12:
        return True, None
    witness = {
        "upper_set_a": dist.support[U[i].astype(bool)].tolist(),
        "upper_set_b": dist.support[U[j].astype(bool)].tolist(),
        "covariance": float(cov[i, j]),
    }
    return False, witness


def exact_discrete_association(dist: DiscreteJointDistribution, budget: int = 16) -> bool:
    """Exact verdict: is the finite law associated?"""
    ok, _ = exact_discrete_association_witness(dist, budget)
    return ok


def _monotone_labelings(support: np.ndarray) -> list[tuple[int, ...]]:
    """All order-preserving surjections of the support poset onto chains.

    Returned as dense rank tuples (one rank per support point).  These
    exhaust the distributional images of monotone real functions of the
    block, up to order isomorphism.
    """
    k = support.shape[0]
    le = np.all(support[:, None, :] <= support[None, :, :], axis=2)
    strict = le & ~le.T
    out = set()
    for ranks in product(range(k), repeat=k):
        ok = True
        for i in range(k):
            for j in range(k):
                if strict[i, j] and ranks[i] > ranks[j]:
                    ok = False
                    break
                if le[i, j] and le[j, i] and ranks[i] != ranks[j]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            # dense-rank normalization
            values = sorted(set(ranks))
            remap = {v: r for r, v in enumerate(values)}
            out.add(tuple(remap[r] for r in ranks))
    return sorted(out)


def exact_discrete_block_association_witness(
    dist: DiscreteJointDistribution, p: BlockPartition, budget: int = 50_000
) -> tuple[bool, dict | None]:
    """Exact block-association verdict with the failing combination as witness.

    Enumerates, per block, every monotone labeling of the block's support
    onto a chain (multi-level images matter because the same per-block
    function is shared between both outer test functions), composes each
    combination into an n-dimensional discrete law and decides its
    association exactly.  Raises if the combination count exceeds budget.
    """
    if dist.dim != p.index_count:
        raise ValueError(f"distribution dim {dist.dim} != partition size {p.index_count}")
    if p.n_blocks == 1:
        return True, None
    blocks0 = [[i - 1 for i in b] for b in p.blocks]
    per_block = []
    for b in blocks0:
        pts = dist.support[:, b]
        uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
        labelings = _monotone_labelings(uniq)
        per_block.append((inverse, labelings))
    total = int(np.prod([len(lab) for _, lab in per_block]))
    if total > budget:
        raise ValueError(f"{total} labeling combinations exceed the budget {budget}")
    for combo in product(*[labelings for _, labelings in per_block]):
        image = np.column_stack(
            [np.asarray(ranks)[inverse] for (inverse, _), ranks in zip(per_block, combo)]
        )
        uniq, inv = np.unique(image, axis=0, return_inverse=True)
        probs = np.bincount(inv, weights=dist.probs, minlength=uniq.shape[0])
        composed = DiscreteJointDistribution(uniq, probs / probs.sum())
        ok, inner = exact_discrete_association_witness(composed, budget=16)
        if not ok:
            return False, {"labelings": [list(r) for r in combo], **inner}
    return True, None


def exact_discrete_block_association(
    dist: DiscreteJointDistribution, p: BlockPartition, budget: int = 50_000
) -> bool:
    """Exact verdict: is the finite law associated between the blocks of p?"""
    ok, _ = exact_discrete_block_association_witness(dist, p, budget)
    return ok


# ---------------------------------------------------------------------------
# Covariance interpolation formula, verified numerically


class SmoothFunction:
    """A C^1-bounded test function with an analytic gradient.

    Forms: "tanh-affine" sum_i c_i tanh(<w_i, x> + b_i) and
    "logistic-product" prod_i sigmoid(<w_i, x> + b_i).
    """

    def __init__(self, dim: int, kind: str, params: dict):
        self.dim = int(dim)
        self.kind = kind
        self.params = params
        if kind == "tanh-affine":
            self._w = np.asarray(params["w"], dtype=float).reshape(-1, self.dim)
            self._b = np.asarray(params["b"], dtype=float)
            self._c = np.asarray(params["c"], dtype=float)
        elif kind == "logistic-product":
            self._w = np.asarray(params["w"], dtype=float).reshape(-1, self.dim)
            self._b = np.asarray(params["b"], dtype=float)
        elif kind == "constant":
            self._value = float(params.get("value", 0.0))
        else:
            raise ValueError(f"unknown smooth function kind {kind!r}")

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "tanh-affine":
            return np.tanh(x @ self._w.T + self._b) @ self._c
        if self.kind == "logistic-product":
            return np.prod(stats.logistic.cdf(x @ self._w.T + self._b), axis=1)
        return np.full(x.shape[0], self._value)

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "tanh-affine":
            t = np.tanh(x @ self._w.T + self._b)
            return ((1.0 - t * t) * self._c) @ self._w
        if self.kind == "logistic-product":
            s = stats.logistic.cdf(x @ self._w.T + self._b)
            val = np.prod(s, axis=1)
            return (val[:, None] * ((1.0 - s) @ self._w))
        return np.zeros_like(x)

    @staticmethod
    def random_tanh(dim: int, rng, n_terms: int = 2) -> "SmoothFunction":
        return SmoothFunction(
            dim,
            "tanh-affine",
            {
                "w": rng.standard_normal((n_terms, dim)),
                "b": rng.standard_normal(n_terms),
                "c": rng.exponential(1.0, n_terms),
            },
        )


@dataclass(frozen=True)
class HpsReport:
    """Both sides of the covariance interpolation identity with uncertainty."""

    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    agree: bool
    n_samples: int
    n_nodes: int
    seed: int

    @property
    def se_combined(self) -> float:
        return float(np.hypot(self.se_lhs, self.se_rhs))

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "se_lhs": self.se_lhs,
            "se_rhs": self.se_rhs,
            "se_combined": self.se_combined,
            "agree": self.agree,
            "n_samples": self.n_samples,
            "n_nodes": self.n_nodes,
            "seed": self.seed,
        }


def hps_formula_verify(
    triplet: IdTriplet,
    psi1: SmoothFunction,
    psi2: SmoothFunction,
    n_samples: int = 100_000,
    n_nodes: int = 8,
    seed: int = 42,
) -> HpsReport:
    """Numerically verify the covariance interpolation identity.

    LHS: Cov(psi1(X), psi2(X)) by Monte Carlo on the triplet's law.  RHS:
    the interpolation integral over the coupling parameter, Gauss-Legendre
    in alpha with Monte Carlo expectations of the Gaussian gradient term
    plus the jump-difference term at each node.  Agreement means
    |LHS - RHS| <= 3 * combined standard error.
    """
    d = triplet.dim
    if psi1.dim != d or psi2.dim != d:
        raise ValueError("test function dimensions must match the triplet")
    batch = sample_compound_poisson_id(triplet, n_samples, seed, stream=(0,))
    lhs, se_lhs = _cov_and_se(psi1.value(batch.data), psi2.value(batch.data))

    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    alphas = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    sigma = triplet.gaussian.entries
    rhs = 0.0
    var_rhs = 0.0
    for i, (alpha, w) in enumerate(zip(alphas, weights)):
        pair = sample_hps_pair(triplet, float(alpha), n_samples, seed, stream=(1, i))
        y, z = pair.data[:, :d], pair.data[:, d:]
        integrand = np.einsum("nd,de,ne->n", psi1.grad(y), sigma, psi2.grad(z))
        for u, m in triplet.levy.atoms:
            integrand = integrand + m * (psi1.value(y + u) - psi1.value(y)) * (
                psi2.value(z + u) - psi2.value(z)
            )
        rhs += w * float(integrand.mean())
        var_rhs += w * w * float(integrand.var()) / n_samples
    se_rhs = float(np.sqrt(var_rhs))
    se = float(np.hypot(se_lhs, se_rhs))
    agree = bool(abs(lhs - rhs) <= 3.0 * se) if se > 0.0 else bool(lhs == rhs)
    return HpsReport(lhs, rhs, se_lhs, se_rhs, agree, n_samples, n_nodes, seed)
