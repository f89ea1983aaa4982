"""Greedy landmark selection: cover a density estimator from below by a
max of Gaussians.

Each round fits a single dominated Gaussian at the densest reference point
not yet covered within factor s, so the result g satisfies

    g(y) <= f(y) <= (1/s) g(y)   for every reference point y,

with g <= f everywhere.  Selection order is deterministic: ties in the
density argmax break toward the lowest point index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import EmptyReferenceError, InputError
from .mixture import DensityCutoff, GaussianMixture, MaxGaussianCover, PointCloud

Array = NDArray[np.float64]

SELECTION_RULES = ("densest", "greedy-ratio")


@dataclass(frozen=True)
class ReferenceSet:
    """Finite set of points on which the cover inequality is certified."""

    points: PointCloud
    source: str = "explicit"  # {"data-superlevel", "explicit", "grid"}

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CoverParams:
    """Approximation factor s in (0, 1); epsilon = -log s in filtration units.

    ``rule`` selects the next fit point: "densest" (default; required for the
    nested-cutoff prefix property) or the opt-in "greedy-ratio" which picks
    argmin g/f instead.
    """

    s: float
    tie_break: str = "lowest-index"
    rule: str = "densest"

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise InputError("cover parameter s must lie in (0, 1)")
        if self.rule not in SELECTION_RULES:
            raise InputError(f"unknown selection rule {self.rule!r}")
        if self.tie_break != "lowest-index":
            raise InputError("only lowest-index tie-breaking is supported")

    @property
    def epsilon(self) -> float:
        return -float(np.log(self.s))


def superlevel_reference(f: GaussianMixture, data: PointCloud,
                         cutoff: DensityCutoff) -> ReferenceSet:
    """Data points with f >= d0, in input order."""
    if data.dimension != f.dimension:
        raise InputError("data dimension != mixture dimension")
    dens = f.evaluate_many(data.points)
    mask = dens >= cutoff.d0
    if not np.any(mask):
        raise EmptyReferenceError(
            f"no data point has density >= {cutoff.d0}; max is {dens.max():.6g}"
        )
    return ReferenceSet(PointCloud(data.points[mask]), source="data-superlevel")


def select_landmarks(f: GaussianMixture, A: ReferenceSet,
                     params: CoverParams) -> MaxGaussianCover:
    """Run the greedy cover construction until every reference point is
    covered within factor s.

    Terminates after at most |A| rounds: the fit at y matches f(y), so y is
    covered permanently once selected.
    """
    pts = A.points.points
    if pts.shape[1] != f.dimension:
        raise InputError("reference dimension != mixture dimension")
    fvals = f.evaluate_many(pts)
    gvals = np.zeros(len(pts))
    inv2h2 = 1.0 / (2.0 * f.scale**2)

    alive = np.arange(len(pts))  # kept ascending so argmax ties pick lowest index
    zs, bs, ys = [], [], []
    while alive.size:
        if params.rule == "densest":
            j = alive[int(np.argmax(fvals[alive]))]
        else:
            j = alive[int(np.argmin(gvals[alive] / fvals[alive]))]
        y = pts[j]
        b, z = f.fit_at(y)
        zs.append(z)
        bs.append(b)
        ys.append(y)
        d2 = np.einsum("ij,ij->i", pts[alive] - z, pts[alive] - z)
        gvals[alive] = np.maximum(gvals[alive], b * np.exp(-d2 * inv2h2))
        alive = alive[gvals[alive] < params.s * fvals[alive]]

    return MaxGaussianCover(PointCloud(np.asarray(zs)), np.asarray(bs), f.scale,
                            provenance=np.asarray(ys))


@dataclass(frozen=True)
class CoverReport:
    """Sandwich margins of a cover over a reference set.

    Margins are min(f - g) and min(g/s - f); negative values are violations.
    """

    n_points: int
    min_lower_margin: float
    min_upper_margin: float
    lower_violations: int
    upper_violations: int
    worst_index: Optional[int]
    worst_point: Optional[Array]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.lower_violations == 0 and self.upper_violations == 0


def verify_cover(f: GaussianMixture, g: MaxGaussianCover, A: ReferenceSet,
                 s: float, rel_tol: float = 1e-10) -> CoverReport:
    """Check g <= f <= g/s on every reference point.

    Violations are judged relative to f(y); they are report data, not errors.
    """
    if g.dimension != f.dimension or A.points.dimension != f.dimension:
        raise InputError("dimension mismatch between mixture, cover, and reference")
    if abs(g.scale - f.scale) > 1e-12 * f.scale:
        raise InputError("cover scale differs from mixture scale")
    pts = A.points.points
    fv = f.evaluate_many(pts)
    gv = g.evaluate_many(pts)
    lower = fv - gv              # >= 0 when g <= f
    upper = gv / s - fv          # >= 0 when f <= g/s
    slack = rel_tol * fv
    lo_bad = lower < -slack
    up_bad = upper < -slack
    worst_idx = None
    worst_pt = None
    rel = np.minimum(lower, upper) / fv
    if np.any(lo_bad | up_bad):
        worst_idx = int(np.argmin(rel))
        worst_pt = pts[worst_idx]
    return CoverReport(
        n_points=len(pts),
        min_lower_margin=float(lower.min()),
        min_upper_margin=float(upper.min()),
        lower_violations=int(np.count_nonzero(lo_bad)),
        upper_violations=int(np.count_nonzero(up_bad)),
        worst_index=worst_idx,
        worst_point=worst_pt,
        tolerance=rel_tol,
    )


@dataclass(frozen=True)
class NestedCoverReport:
    """Compatibility of covers built at two nested density cutoffs."""

    prefix_holds: bool
    n_high: int
    n_low: int
    max_pointwise_excess: float  # max over samples of g_high - g_low; <= 0 expected

    @property
    def passed(self) -> bool:
        return self.prefix_holds and self.max_pointwise_excess <= 0.0


def nested_reference_check(f: GaussianMixture, data: PointCloud, d_high: float,
                           d_low: float, params: CoverParams,
                           samples: Optional[Array] = None) -> NestedCoverReport:
    """With the densest-first rule, the cover at cutoff d_high is a prefix of
    the cover at d_low <= d_high, and g_high <= g_low pointwise."""
    if d_high < d_low:
        raise InputError("expected d_high >= d_low")
    if params.rule != "densest":
        raise InputError("the prefix property requires the densest-first rule")
    cover_hi = select_landmarks(f, superlevel_reference(f, data, DensityCutoff(d_high)), params)
    cover_lo = select_landmarks(f, superlevel_reference(f, data, DensityCutoff(d_low)), params)
    k = len(cover_hi)
    prefix = k <= len(cover_lo) and bool(
        np.array_equal(cover_hi.landmarks.points, cover_lo.landmarks.points[:k])
        and np.array_equal(cover_hi.coefficients, cover_lo.coefficients[:k])
    )
    if samples is None:
        samples = data.points
    excess = cover_hi.evaluate_many(samples) - cover_lo.evaluate_many(samples)
    return NestedCoverReport(
        prefix_holds=prefix,
        n_high=k,
        n_low=len(cover_lo),
        max_pointwise_excess=float(excess.max()),
    )
