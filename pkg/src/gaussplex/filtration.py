"""Density filtration weights on an alpha complex.

The shipped weight of a simplex is the max of -log f over the power-distance
minimizers q_tau of all its faces.  A sampled variant additionally probes
the interior of each simplex through the piecewise-linear map on the
barycentric subdivision; it exists to validate the shipped weights, never
to replace them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .alpha import AlphaComplex
from .errors import InputError
from .mixture import DensityCutoff, GaussianMixture, MaxGaussianCover

Array = NDArray[np.float64]

_SLACK = 1e-12


def _order_key(item):
    key, w = item
    return (w, len(key), key)


@dataclass(frozen=True)
class FilteredComplex:
    """Simplices with weights whose sublevel sets are subcomplexes.

    Entries are kept in filtration order: by weight, then dimension, then
    lexicographic vertices, which puts every simplex after all its faces.
    """

    entries: tuple[tuple[tuple[int, ...], float], ...]
    units: str = "neg_log_density"

    def __post_init__(self):
        ordered = tuple(sorted(((tuple(k), float(w)) for k, w in self.entries),
                               key=_order_key))
        object.__setattr__(self, "entries", ordered)
        weights = dict(ordered)
        if len(weights) != len(ordered):
            raise InputError("duplicate simplices in filtered complex")
        for key, w in ordered:
            for facet in combinations(key, len(key) - 1):
                if not facet:
                    continue
                if facet not in weights:
                    raise InputError(f"face {facet} of {key} missing")
                if weights[facet] > w:
                    raise InputError(
                        f"sublevel sets not subcomplexes: w{facet} > w{key}"
                    )

    def __len__(self) -> int:
        return len(self.entries)

    def weights(self) -> dict[tuple[int, ...], float]:
        return dict(self.entries)

    def counts(self) -> tuple[int, ...]:
        top = max(len(k) for k, _ in self.entries)
        out = [0] * top
        for key, _ in self.entries:
            out[len(key) - 1] += 1
        return tuple(out)

    def to_json_dict(self) -> dict:
        return {
            "simplices": [{"v": list(k), "w": w} for k, w in self.entries],
            "units": self.units,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FilteredComplex":
        try:
            entries = tuple((tuple(int(v) for v in e["v"]), float(e["w"]))
                            for e in doc["simplices"])
        except KeyError as exc:
            raise InputError(f"filtered-complex JSON missing key {exc}") from exc
        return cls(entries, doc.get("units", "neg_log_density"))

    @classmethod
    def from_json(cls, path) -> "FilteredComplex":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def alpha_filtration(X: AlphaComplex) -> FilteredComplex:
    """The alpha weights themselves as a filtered complex."""
    return FilteredComplex(tuple((k, r.alpha_weight) for k, r in X.simplices.items()))


def witness_weights(f: GaussianMixture, X: AlphaComplex) -> FilteredComplex:
    """w(sigma) = max over faces tau of -log f(q_tau), computed bottom-up.

    Each simplex combines its own barycenter value with its facet weights,
    which already carry the max over all deeper faces.
    """
    keys = sorted(X.simplices, key=lambda v: (len(v), v))
    barys = np.asarray([X.simplices[k].barycenter for k in keys])
    own = f.evaluate_log_many(barys)
    w: dict[tuple[int, ...], float] = {}
    for key, val in zip(keys, own):
        best = float(val)
        if len(key) > 1:
            for facet in combinations(key, len(key) - 1):
                fw = w[facet]
                if fw > best:
                    best = fw
        w[key] = best
    return FilteredComplex(tuple(w.items()))


def sampled_simplex_weights(f: GaussianMixture, X: AlphaComplex,
                            resolution: int = 1) -> FilteredComplex:
    """Validation-grade estimate of max(-log f) over each embedded simplex.

    Every simplex is probed on lattice points of the flags of its face
    poset (the maximal simplices of the barycentric subdivision, with
    vertices at the face minimizers q_tau).  The sample set includes every
    resolution up to ``resolution``, so values are non-decreasing in the
    resolution and reduce exactly to the bottom-up face-max weights at
    resolution 1.
    """
    if resolution < 1:
        raise InputError("resolution must be >= 1")
    base = witness_weights(f, X)
    if resolution == 1:
        return base
    w = base.weights()
    for key in sorted(X.simplices, key=lambda v: (len(v), v)):
        k = len(key) - 1
        if k == 0:
            continue
        pts = []
        for chain in permutations(key):
            # flag of faces: {chain[0]} subset {chain[0..1]} subset ... subset key
            qs = np.asarray([
                X.simplices[tuple(sorted(chain[:j + 1]))].barycenter
                for j in range(k + 1)
            ])
            for res in range(2, resolution + 1):
                for comp in _compositions(res, k + 1):
                    lam = np.asarray(comp, float) / res
                    pts.append(lam @ qs)
        if pts:
            probe = float(f.evaluate_log_many(np.asarray(pts)).max())
            if probe > w[key]:
                w[key] = probe
    # restore face monotonicity (interior probes can exceed a coface's own max)
    for key in sorted(w, key=lambda v: (len(v), v)):
        for facet in combinations(key, len(key) - 1):
            if facet and w[facet] > w[key]:
                w[key] = w[facet]
    return FilteredComplex(tuple(w.items()))


def _compositions(total: int, parts: int):
    """Nonnegative integer tuples of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


@dataclass(frozen=True)
class InterleavingReport:
    """Containment checks tying the cover complex to the density weights.

    ``violations`` lists simplices where the witness weight exceeds the
    alpha weight -- impossible in exact arithmetic since g <= f pointwise.
    ``sample_containment_failures`` counts sample points above the cutoff
    density where the cover dips below s * f.  The two-sided weight sandwich
    is only certified where the cover inequality itself holds, so it is
    reported separately as a conditional count, not asserted globally.
    """

    epsilon: float
    max_weight_gap: float
    violations: tuple = ()
    sample_containment_failures: int = 0
    n_simplices: int = 0
    n_conditional: int = 0
    conditional_violations: int = 0
    n_samples: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations and self.sample_containment_failures == 0


def check_interleaving(f: GaussianMixture, g: MaxGaussianCover, X: AlphaComplex,
                       Y: FilteredComplex, cutoff: DensityCutoff, epsilon: float,
                       samples: Optional[Array] = None) -> InterleavingReport:
    """Verify the testable consequences of the interleaving guarantee.

    Unconditional: every simplex has witness weight <= alpha weight (within
    float slack), because -log f <= -log g everywhere.  Conditional: where
    all face minimizers satisfy the cover sandwich, the alpha weight exceeds
    the witness weight by at most epsilon.  Pointwise: samples above the
    cutoff density must satisfy -log g <= -log f + epsilon.
    """
    wx = {k: r.alpha_weight for k, r in X.simplices.items()}
    wy = Y.weights()
    if set(wx) != set(wy):
        raise InputError("alpha and witness complexes carry different simplices")

    keys = sorted(wx, key=lambda v: (len(v), v))
    barys = np.asarray([X.simplices[k].barycenter for k in keys])
    fq = f.evaluate_many(barys)
    gq = g.evaluate_many(barys)
    sandwich_ok = {k: bool(gq[i] >= np.exp(-epsilon) * fq[i] * (1.0 - _SLACK))
                   for i, k in enumerate(keys)}

    violations = []
    max_gap = -np.inf
    n_cond = 0
    cond_bad = 0
    for key in keys:
        gap = wx[key] - wy[key]
        max_gap = max(max_gap, gap)
        if wy[key] > wx[key] + _SLACK * (1.0 + abs(wx[key])):
            violations.append((key, f"witness weight exceeds alpha weight by {-gap:.3e}"))
        faces_ok = all(
            sandwich_ok[tuple(sorted(tau))]
            for r in range(1, len(key) + 1)
            for tau in combinations(key, r)
        )
        if faces_ok:
            n_cond += 1
            if gap > epsilon + _SLACK * (1.0 + abs(epsilon)):
                cond_bad += 1
                violations.append((key, f"weight gap {gap:.3e} exceeds epsilon"))

    fail = 0
    n_samples = 0
    if samples is not None:
        S = np.asarray(samples, dtype=float)
        if S.ndim == 1:
            S = S.reshape(-1, f.dimension)
        n_samples = S.shape[0]
        fv = f.evaluate_many(S)
        gv = g.evaluate_many(S)
        above = fv >= cutoff.d0
        fail = int(np.count_nonzero(gv[above] < np.exp(-epsilon) * fv[above] * (1.0 - _SLACK)))

    return InterleavingReport(
        epsilon=epsilon,
        max_weight_gap=float(max_gap),
        violations=tuple(violations),
        sample_containment_failures=fail,
        n_simplices=len(keys),
        n_conditional=n_cond,
        conditional_violations=cond_bad,
        n_samples=n_samples,
    )
