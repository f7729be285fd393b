"""Deterministic checkers for block-association of Gaussian and infinitely
divisible vectors and of process increments.

Exact characterizations (Gaussian vector, Gaussian covariance structure)
return PASS/VIOLATION.  Conditions that are sufficient but not necessary
(the jump-measure support conditions) return PASS/INCONCLUSIVE: a failed
sufficient condition is not evidence of a violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .core import (
    ENTRY_TOL,
    INCONCLUSIVE,
    PASS,
    VIOLATION,
    BlockPartition,
    CovFunction,
    CovarianceMatrix,
    DiscreteLevyMeasure,
    IdTriplet,
    Verdict,
    membership_S,
    monotone_trajectory_predicate,
    project_levy_pair,
)

__all__ = [
    "RectangleWitness",
    "gaussian_block_association",
    "id_sufficient_conditions",
    "levy_support_equivalence",
    "l_superadditivity_check",
    "mixed_derivative_check",
    "id_process_support_check",
]

#: default cap on the number of distinct times in rectangle enumeration
RECTANGLE_TIME_BUDGET = 25


@dataclass(frozen=True)
class RectangleWitness:
    """A rectangle increment K(s1,t1) - K(s2,t1) - K(s1,t2) + K(s2,t2)."""

    k: int
    l: int
    s1: float
    s2: float
    t1: float
    t2: float
    value: float

    def __post_init__(self):
        if not (self.s1 <= self.s2 <= self.t1 <= self.t2):
            raise ValueError("rectangle times must satisfy s1 <= s2 <= t1 <= t2")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "times": [self.s1, self.s2, self.t1, self.t2],
            "value": self.value,
        }


def gaussian_block_association(sigma: CovarianceMatrix, p: BlockPartition) -> Verdict:
    """Exact verdict for a Gaussian vector with covariance sigma.

    The vector is associated between the blocks of p iff every covariance
    entry for a cross-block pair of coordinates is nonnegative.  Within-block
    entries are unconstrained.
    """
    if sigma.dim != p.index_count:
        raise ValueError(f"covariance dim {sigma.dim} != partition size {p.index_count}")
    worst = None
    checked = 0
    for k, l in p.cross_pairs():
        checked += 1
        v = sigma.entries[k - 1, l - 1]
        if worst is None or v < worst[2]:
            worst = (k, l, v)
    if worst is not None and worst[2] < -ENTRY_TOL:
        return Verdict(
            VIOLATION,
            evidence={"pair": [worst[0], worst[1]], "covariance": float(worst[2])},
            statistics={"cross_pairs_checked": checked},
        )
    return Verdict(PASS, statistics={"cross_pairs_checked": checked})


def _pair_in_quadrants(nu2: DiscreteLevyMeasure):
    """Worst atom of a planar measure outside the closed quadrant union."""
    for x, m in nu2.atoms:
        if not (np.all(x >= 0.0) or np.all(x <= 0.0)):
            return x, m
    return None


def id_sufficient_conditions(triplet: IdTriplet, p: BlockPartition) -> Verdict:
    """Sufficient conditions for block-association of an ID vector.

    PASS iff every cross-block Gaussian covariance entry is nonnegative and
    every cross-block planar characteristic of the jump measure sits in the
    closed union of the positive and negative quadrants.  A failed condition
    yields INCONCLUSIVE (the conditions are not necessary), never VIOLATION.
    """
    if triplet.dim != p.index_count:
        raise ValueError(f"triplet dim {triplet.dim} != partition size {p.index_count}")
    sigma = triplet.gaussian.entries
    for k, l in p.cross_pairs():
        if sigma[k - 1, l - 1] < -ENTRY_TOL:
            return Verdict(
                INCONCLUSIVE,
                evidence={
                    "condition": "gaussian",
                    "pair": [k, l],
                    "covariance": float(sigma[k - 1, l - 1]),
                },
            )
        bad = _pair_in_quadrants(project_levy_pair(triplet.levy, k, l))
        if bad is not None:
            x, m = bad
            return Verdict(
                INCONCLUSIVE,
                evidence={
                    "condition": "levy",
                    "pair": [k, l],
                    "atom": x.tolist(),
                    "mass": float(m),
                },
            )
    return Verdict(PASS, statistics={"cross_pairs_checked": sum(1 for _ in p.cross_pairs())})


def levy_support_equivalence(nu: DiscreteLevyMeasure, p: BlockPartition) -> tuple[bool, bool]:
    """Both routes of the support characterization; the components are equal.

    First component: every cross-block planar characteristic is concentrated
    on the closed quadrant union.  Second: every atom of nu lies in the
    support set of `membership_S`.  Computed independently as a dual-route
    check.
    """
    if nu.dim != p.index_count:
        raise ValueError(f"measure dim {nu.dim} != partition size {p.index_count}")
    via_pairs = all(
        _pair_in_quadrants(project_levy_pair(nu, k, l)) is None for k, l in p.cross_pairs()
    )
    via_support = all(membership_S(x, p) for x, _ in nu.atoms)
    return via_pairs, via_support


def l_superadditivity_check(
    K: CovFunction, times, rtol: float = 1e-9, time_budget: int = RECTANGLE_TIME_BUDGET
) -> Verdict:
    """Grid check of rectangle nonnegativity of all covariance functions.

    Evaluates K^{k,l}(s1,t1) - K^{k,l}(s2,t1) - K^{k,l}(s1,t2) + K^{k,l}(s2,t2)
    for every ordered quadruple s1 <= s2 <= t1 <= t2 drawn from ``times`` and
    every coordinate pair.  PASS iff all rectangles are >= -rtol * scale with
    scale = max |K| over the grid.
    """
    t = np.asarray(sorted(set(float(x) for x in times)))
    if np.any(t < 0.0):
        raise ValueError("times must be nonnegative")
    if len(t) > time_budget:
        raise ValueError(f"{len(t)} distinct times exceed the budget of {time_budget}")
    m = len(t)
    worst: RectangleWitness | None = None
    scale = 0.0
    grids = {}
    for k in range(K.d):
        for l in range(K.d):
            full = np.array([[K(k, l, t[i], t[j]) for j in range(m)] for i in range(m)])
            grids[k, l] = full
            scale = max(scale, np.abs(full).max(initial=0.0))
    quads = [
        (i1, i2, j1, j2)
        for i1, i2 in combinations_with_replacement(range(m), 2)
        for j1, j2 in combinations_with_replacement(range(i2, m), 2)
    ]
    n_checked = 0
    for (k, l), full in grids.items():
        for i1, i2, j1, j2 in quads:
            val = full[i1, j1] - full[i2, j1] - full[i1, j2] + full[i2, j2]
            n_checked += 1
            if worst is None or val < worst.value:
                worst = RectangleWitness(
                    k + 1, l + 1, float(t[i1]), float(t[i2]), float(t[j1]), float(t[j2]), float(val)
                )
    stats = {"rectangles_checked": n_checked, "scale": float(scale)}
    if worst is not None and worst.value < -rtol * max(scale, 1e-300):
        return Verdict(VIOLATION, evidence={"rectangle": worst.to_dict()}, statistics=stats)
    if worst is not None:
        stats["worst_rectangle"] = worst.to_dict()
    return Verdict(PASS, statistics=stats)


def mixed_derivative_check(K: CovFunction, times, h: float = 1e-3, rtol: float = 1e-6) -> Verdict:
    """Finite-difference check of the mixed second derivative off the diagonal.

    Central estimate [K(s+h,t+h) - K(s+h,t-h) - K(s-h,t+h) + K(s-h,t-h)] / 4h^2
    at every off-diagonal pair of grid times.  PASS iff all estimates are
    >= -rtol * scale.  Raises if the step straddles the diagonal or leaves
    the nonnegative time region.
    """
    t = np.asarray(sorted(set(float(x) for x in times)))
    estimates = []
    worst = None
    scale = 0.0
    for k in range(K.d):
        for l in range(K.d):
            for s in t:
                for u in t:
                    if s == u:
                        continue
                    if abs(s - u) <= 2.0 * h:
                        raise ValueError(
                            f"step h={h} too large: rectangle at ({s},{u}) crosses the diagonal"
                        )
                    if min(s, u) - h < 0.0:
                        raise ValueError(f"step h={h} leaves the valid region at ({s},{u})")
                    est = (
                        K(k, l, s + h, u + h)
                        - K(k, l, s + h, u - h)
                        - K(k, l, s - h, u + h)
                        + K(k, l, s - h, u - h)
                    ) / (4.0 * h * h)
                    est = float(est)
                    estimates.append(
                        {"k": k + 1, "l": l + 1, "s": float(s), "t": float(u), "estimate": est}
                    )
                    scale = max(scale, abs(est))
                    if worst is None or est < worst["estimate"]:
                        worst = estimates[-1]
    stats = {"estimates": estimates, "h": h}
    if worst is not None and worst["estimate"] < -rtol * max(scale, 1.0):
        return Verdict(VIOLATION, evidence={"point": worst}, statistics=stats)
    return Verdict(PASS, statistics=stats)


def id_process_support_check(atoms, masses=None) -> Verdict:
    """Support check for the jump measure of a purely non-Gaussian ID process.

    ``atoms`` is a list of discrete trajectories (each an array of shape
    (n+1, d)); PASS iff every trajectory satisfies the admissible-path
    predicate (monotone, or constant with at most one jump).
    """
    shaped = [np.atleast_2d(np.asarray(a, dtype=float).T).T for a in atoms]
    shaped = [a if a.ndim == 2 else a[:, None] for a in shaped]
    if shaped:
        shape0 = shaped[0].shape
        for a in shaped[1:]:
            if a.shape != shape0:
                raise ValueError(f"inconsistent trajectory shapes {a.shape} vs {shape0}")
    if masses is not None and len(masses) != len(shaped):
        raise ValueError("masses must match the number of trajectory atoms")
    for idx, a in enumerate(shaped):
        if not monotone_trajectory_predicate(a):
            ev = {"atom_index": idx, "trajectory": a.tolist()}
            if masses is not None:
                ev["mass"] = float(masses[idx])
            return Verdict(VIOLATION, evidence=ev, statistics={"atoms_checked": idx + 1})
    return Verdict(PASS, statistics={"atoms_checked": len(shaped)})
