"""Power diagrams from Gaussian covers, and their weighted alpha complexes.

The cover g(x) = max_i b_i rho(z_i, x) determines a power diagram on the
landmarks with powers p_i = 2 h^2 log(b_i): with that choice

    min_i (||x - z_i||^2 - p_i) = -2 h^2 log g(x)

identically, so the diagram's weight function is the cover's negative
log-density up to the fixed 2 h^2 unit conversion.  Simplex weights are
stored in -log-density units throughout; raw squared-distance objectives
live only inside the cell solver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import InputError, SolverFailure
from .mixture import MaxGaussianCover, PointCloud
from .qp import DEFAULT_TOL, PowerCellSolver

Array = NDArray[np.float64]

DEFAULT_MAX_DIM = 3


@dataclass(frozen=True)
class PowerDiagram:
    """Landmarks with powers; scale retained for unit conversion."""

    landmarks: PointCloud
    powers: Array
    scale: float

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float).reshape(-1)
        if p.shape[0] != len(self.landmarks):
            raise InputError("power count != landmark count")
        if not (self.scale > 0):
            raise InputError("scale must be positive")
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "scale", float(self.scale))

    def weight_function(self, points) -> Array:
        """min_i (||x - z_i||^2 - p_i) per row, in squared-distance units."""
        X = np.asarray(points, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.landmarks.dimension)
        Z = self.landmarks.points
        x2 = np.einsum("ij,ij->i", X, X)
        z2 = np.einsum("ij,ij->i", Z, Z)
        d2 = x2[:, None] + z2[None, :] - 2.0 * (X @ Z.T)
        return (d2 - self.powers[None, :]).min(axis=1)


def power_diagram_from_cover(g: MaxGaussianCover) -> PowerDiagram:
    """Powers p_i = 2 h^2 log b_i make the diagram reproduce -log g exactly."""
    p = 2.0 * g.scale**2 * np.log(g.coefficients)
    return PowerDiagram(g.landmarks, p, g.scale)


@dataclass(frozen=True)
class SimplexRecord:
    """One simplex with its weight and power-distance minimizer."""

    vertices: tuple[int, ...]
    alpha_weight: float        # -log-density units: power_objective / (2 h^2)
    power_objective: float     # squared-distance units
    barycenter: Array

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


class AlphaComplex:
    """Face-closed collection of weighted simplices over a power diagram."""

    def __init__(self, diagram: PowerDiagram, simplices: dict,
                 max_dim: int, level_cap: Optional[float]):
        self.diagram = diagram
        self.simplices = simplices
        self.max_dim = max_dim
        self.level_cap = level_cap

    def __contains__(self, vertices) -> bool:
        return tuple(vertices) in self.simplices

    def __len__(self) -> int:
        return len(self.simplices)

    def records(self) -> list[SimplexRecord]:
        return [self.simplices[key] for key in sorted(self.simplices, key=lambda v: (len(v), v))]

    def counts(self) -> tuple[int, ...]:
        out = [0] * (self.max_dim + 1)
        for key in self.simplices:
            out[len(key) - 1] += 1
        return tuple(out)

    def vertex_ids(self) -> list[int]:
        return sorted(key[0] for key in self.simplices if len(key) == 1)

    def validate(self, tol: float = 1e-9) -> None:
        """Assert face closure and weight monotonicity under face inclusion."""
        for key, rec in self.simplices.items():
            for facet in combinations(key, len(key) - 1):
                if not facet:
                    continue
                if facet not in self.simplices:
                    raise InputError(f"face closure broken: {facet} missing under {key}")
                if self.simplices[facet].alpha_weight > rec.alpha_weight + tol:
                    raise InputError(
                        f"weight not monotone: w{facet} > w{key}"
                    )

    def to_json_dict(self) -> dict:
        return {
            "h": self.diagram.scale,
            "landmarks": self.diagram.landmarks.points.tolist(),
            "powers": self.diagram.powers.tolist(),
            "max_dim": self.max_dim,
            "level_cap": self.level_cap,
            "simplices": [
                {"v": list(r.vertices), "w": r.alpha_weight, "q": r.barycenter.tolist()}
                for r in self.records()
            ],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "AlphaComplex":
        try:
            diagram = PowerDiagram(PointCloud(doc["landmarks"]),
                                   np.asarray(doc["powers"], float), float(doc["h"]))
            conv = 2.0 * diagram.scale**2
            simplices = {}
            for entry in doc["simplices"]:
                key = tuple(int(v) for v in entry["v"])
                simplices[key] = SimplexRecord(
                    vertices=key,
                    alpha_weight=float(entry["w"]),
                    power_objective=float(entry["w"]) * conv,
                    barycenter=np.asarray(entry["q"], float),
                )
        except KeyError as exc:
            raise InputError(f"complex JSON missing key {exc}") from exc
        return cls(diagram, simplices, int(doc.get("max_dim", DEFAULT_MAX_DIM)),
                   doc.get("level_cap"))

    @classmethod
    def from_json(cls, path) -> "AlphaComplex":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def build_alpha(pd: PowerDiagram, max_dim: int = DEFAULT_MAX_DIM,
                level_cap: Optional[float] = None, tol: float = DEFAULT_TOL,
                edge_prefilter: bool = False) -> AlphaComplex:
    """Enumerate the weighted alpha complex up to ``max_dim``.

    Candidates at each dimension are exactly the vertex sets whose facets all
    survived, so most of the combinatorial blowup never reaches the solver,
    and the solver itself rejects empty intersections early.  A simplex is
    kept when its cell intersection is nonempty and (if ``level_cap`` is set)
    its weight does not exceed the cap.

    ``edge_prefilter`` additionally skips landmark pairs too far apart to
    meet below the cap (a conservative ball-overlap bound); off by default.
    """
    if max_dim < 0:
        raise InputError("max_dim must be >= 0")
    Z = pd.landmarks.points
    n = len(pd.landmarks)
    conv = 2.0 * pd.scale**2
    solver = PowerCellSolver(Z @ Z.T, pd.powers, tol=tol)

    simplices: dict[tuple[int, ...], SimplexRecord] = {}

    def try_simplex(key: tuple[int, ...]) -> bool:
        sol = solver.solve(key)
        if not sol.feasible:
            return False
        obj = sol.objective
        # enforce exact face monotonicity; drift beyond solver noise is a bug
        facet_floor = None
        for facet in combinations(key, len(key) - 1):
            if facet:
                w = simplices[facet].power_objective
                facet_floor = w if facet_floor is None else max(facet_floor, w)
        if facet_floor is not None and obj < facet_floor:
            if obj < facet_floor - 1e3 * solver.tol:
                raise SolverFailure(
                    "cell objective below its face objective",
                    diagnostics={"simplex": key, "objective": obj, "floor": facet_floor},
                )
            obj = facet_floor
        weight = obj / conv
        if level_cap is not None and weight > level_cap:
            return False
        simplices[key] = SimplexRecord(
            vertices=key, alpha_weight=weight, power_objective=obj,
            barycenter=sol.minimizer_coeffs @ Z,
        )
        return True

    for i in range(n):
        try_simplex((i,))
    vertices = [key[0] for key in sorted(simplices)]

    pair_cut = None
    if edge_prefilter and level_cap is not None:
        pair_cut = 4.0 * (level_cap * conv + float(pd.powers.max()))

    prev = sorted(simplices)
    for dim in range(1, max_dim + 1):
        prev_set = set(prev)
        current: list[tuple[int, ...]] = []
        for tail in prev:
            for v in vertices:
                if v <= tail[-1]:
                    continue
                cand = tail + (v,)
                if dim == 1 and pair_cut is not None:
                    gap = Z[cand[0]] - Z[cand[1]]
                    if float(gap @ gap) > pair_cut:
                        continue
                if all(
                    cand[:k] + cand[k + 1:] in prev_set for k in range(dim)
                ):
                    if try_simplex(cand):
                        current.append(cand)
        prev = current
        if not prev:
            break

    return AlphaComplex(pd, simplices, max_dim, level_cap)


def vertex_positions(complex_: AlphaComplex, mode: str = "landmarks") -> dict:
    """Coordinates for drawing: vertex -> landmark, or simplex -> minimizer.

    Barycenter mode supplies the vertex positions of the barycentric
    subdivision, which is where the complex's piecewise-linear embedding
    lives.
    """
    if mode == "landmarks":
        Z = complex_.diagram.landmarks.points
        return {(i,): Z[i] for i in complex_.vertex_ids()}
    if mode == "barycenters":
        return {key: rec.barycenter for key, rec in complex_.simplices.items()}
    raise InputError(f"unknown position mode {mode!r}")
