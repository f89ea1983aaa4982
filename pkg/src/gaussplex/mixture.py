"""Sums and maxes of Gaussian kernels: evaluation, gradients, tangent fits.

The density model is an unnormalized kernel sum

    f(x) = sum_i a_i * exp(-||x - c_i||^2 / (2 h^2)),   a_i > 0,

with one shared scale parameter ``h``.  No volume-normalizing factor is
applied, so values depend only on distances within the data, not on the
embedding dimension; these are *not* probability densities.

Filtration-side code works with ``-log f``, so the log evaluators here
return the negated log directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import InputError, StateError
from .parallel import map_row_blocks

Array = NDArray[np.float64]

# row chunking bound for pairwise-distance blocks (floats per block)
_BLOCK_BUDGET = 4_000_000


def _as_matrix(points) -> Array:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    return pts


def _check_vector(x, m: int) -> Array:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape[0] != m:
        raise InputError(f"point has dimension {v.shape[0]}, expected {m}")
    return v


def _sq_dists(X: Array, C: Array) -> Array:
    """Squared Euclidean distances, (k, n) for X (k, m) and C (n, m)."""
    x2 = np.einsum("ij,ij->i", X, X)
    c2 = np.einsum("ij,ij->i", C, C)
    d2 = x2[:, None] + c2[None, :] - 2.0 * (X @ C.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


@dataclass(frozen=True)
class PointCloud:
    """Nonempty finite set of points in R^m, stored as an (n, m) array."""

    points: Array

    def __post_init__(self):
        pts = _as_matrix(self.points)
        if pts.size == 0:
            raise InputError("point cloud must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise InputError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def from_csv(cls, path) -> "PointCloud":
        """Headerless CSV, one point per row, decimal floats."""
        try:
            pts = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
        except ValueError as exc:
            raise InputError(f"bad point CSV {path}: {exc}") from exc
        return cls(pts)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", fmt="%.17g")

    @classmethod
    def from_json_dict(cls, doc: dict) -> tuple["PointCloud", Optional[Array]]:
        """Parse {"dimension": m, "points": [[..]..], "weights": [..]?}."""
        try:
            pts = _as_matrix(doc["points"])
        except KeyError as exc:
            raise InputError("point JSON missing 'points'") from exc
        if "dimension" in doc and int(doc["dimension"]) != pts.shape[1]:
            raise InputError(
                f"declared dimension {doc['dimension']} != data dimension {pts.shape[1]}"
            )
        weights = None
        if doc.get("weights") is not None:
            weights = np.asarray(doc["weights"], dtype=float)
            if weights.shape[0] != pts.shape[0]:
                raise InputError("weights length != number of points")
        return cls(pts), weights

    @classmethod
    def from_json(cls, path) -> tuple["PointCloud", Optional[Array]]:
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def to_json_dict(self, weights: Optional[Array] = None) -> dict:
        doc = {"dimension": self.dimension, "points": self.points.tolist()}
        if weights is not None:
            doc["weights"] = np.asarray(weights, dtype=float).tolist()
        return doc


@dataclass(frozen=True)
class DensityCutoff:
    """Minimum density d0 > 0; a0 = -log(d0) is the same bound in filtration units."""

    d0: float

    def __post_init__(self):
        if not (self.d0 > 0 and np.isfinite(self.d0)):
            raise InputError("density cutoff must be positive and finite")

    @property
    def a0(self) -> float:
        return -float(np.log(self.d0))


@dataclass(frozen=True)
class GaussianMixture:
    """Positive-coefficient sum of Gaussian kernels with shared scale h."""

    centers: PointCloud
    coefficients: Array
    scale: float

    def __post_init__(self):
        coeff = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if coeff.shape[0] != len(self.centers):
            raise InputError("coefficient count != center count")
        if not np.all(coeff > 0):
            raise InputError("coefficients must all be positive")
        if not (self.scale > 0):
            raise InputError("scale must be positive")
        object.__setattr__(self, "coefficients", coeff)
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def kde(cls, cloud: PointCloud, scale: float,
            weights: Optional[Array] = None) -> "GaussianMixture":
        """Standard estimator: uniform coefficients 1/N unless weights given."""
        n = len(cloud)
        coeff = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, float)
        return cls(cloud, coeff, scale)

    @property
    def dimension(self) -> int:
        return self.centers.dimension

    # ---- evaluation ----

    def _log_terms(self, X: Array) -> Array:
        """(k, n) matrix of log(a_i) - ||x - c_i||^2 / (2 h^2)."""
        d2 = _sq_dists(X, self.centers.points)
        return np.log(self.coefficients)[None, :] - d2 / (2.0 * self.scale**2)

    def _rows_per_block(self) -> int:
        return max(1, _BLOCK_BUDGET // max(len(self.centers), 1))

    def _eval_block(self, X: Array) -> Array:
        terms = self._log_terms(X)
        vals = np.exp(terms).sum(axis=1)
        # all terms underflowed: recover through the log-sum-exp path
        dead = vals < 1e-300
        if np.any(dead):
            vals[dead] = np.exp(-_nll_from_terms(terms[dead]))
        return vals

    def evaluate_many(self, points) -> Array:
        """f at each row of ``points``; strictly positive."""
        X = _as_matrix(points)
        if X.shape[1] != self.dimension:
            raise InputError(f"points have dimension {X.shape[1]}, expected {self.dimension}")
        return map_row_blocks(self._eval_block, X, self._rows_per_block())

    def evaluate(self, x) -> float:
        return float(self.evaluate_many(_check_vector(x, self.dimension)[None, :])[0])

    def evaluate_log_many(self, points) -> Array:
        """-log f at each row, via log-sum-exp; finite for all finite inputs."""
        X = _as_matrix(points)
        if X.shape[1] != self.dimension:
            raise InputError(f"points have dimension {X.shape[1]}, expected {self.dimension}")
        return map_row_blocks(lambda b: _nll_from_terms(self._log_terms(b)), X,
                              self._rows_per_block())

    def evaluate_log(self, x) -> float:
        return float(self.evaluate_log_many(_check_vector(x, self.dimension)[None, :])[0])

    def gradient(self, x) -> Array:
        """grad f(x) = sum_i a_i rho(x, c_i) (c_i - x) / h^2."""
        v = _check_vector(x, self.dimension)
        terms = self._log_terms(v[None, :])[0]
        w = np.exp(terms)
        return (w @ (self.centers.points - v[None, :])) / self.scale**2

    # ---- tangent fit ----

    def fit_at(self, y) -> tuple[float, Array]:
        """Single Gaussian b*rho(z, .) matching f to first order at y.

        z is the convex combination of the centers with barycentric weights
        proportional to a_i * rho(y, c_i); b is then forced by g(y) = f(y).
        The result is globally dominated by f.  Computed in log space so it
        stays accurate when y sits far from every center.
        """
        v = _check_vector(y, self.dimension)
        logw = self._log_terms(v[None, :])[0]
        peak = logw.max()
        u = np.exp(logw - peak)
        csum = u.sum()
        z = (u @ self.centers.points) / csum
        log_c = peak + np.log(csum)
        log_b = log_c + float(np.dot(z - v, z - v)) / (2.0 * self.scale**2)
        return float(np.exp(log_b)), z

    def fit_weights(self, y) -> Array:
        """Barycentric coefficients t_i of the fit center (positive, sum 1)."""
        v = _check_vector(y, self.dimension)
        logw = self._log_terms(v[None, :])[0]
        u = np.exp(logw - logw.max())
        return u / u.sum()

    # ---- serialization ----

    def to_json_dict(self) -> dict:
        return {
            "h": self.scale,
            "centers": self.centers.points.tolist(),
            "coefficients": self.coefficients.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GaussianMixture":
        try:
            return cls(PointCloud(doc["centers"]), np.asarray(doc["coefficients"], float),
                       float(doc["h"]))
        except KeyError as exc:
            raise InputError(f"mixture JSON missing key {exc}") from exc


def _nll_from_terms(terms: Array) -> Array:
    peaks = terms.max(axis=1)
    return -(peaks + np.log(np.exp(terms - peaks[:, None]).sum(axis=1)))


@dataclass(frozen=True)
class MaxGaussianCover:
    """Lower envelope g(x) = max_i b_i rho(z_i, x), one shared scale.

    ``provenance`` records the reference points at which each Gaussian was
    fitted, in selection order.
    """

    landmarks: PointCloud
    coefficients: Array
    scale: float
    provenance: Optional[Array] = None

    def __post_init__(self):
        coeff = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if coeff.shape[0] != len(self.landmarks):
            raise InputError("coefficient count != landmark count")
        if not np.all(coeff > 0):
            raise InputError("coefficients must all be positive")
        if not (self.scale > 0):
            raise InputError("scale must be positive")
        object.__setattr__(self, "coefficients", coeff)
        object.__setattr__(self, "scale", float(self.scale))
        if self.provenance is not None:
            prov = _as_matrix(self.provenance)
            if prov.shape != self.landmarks.points.shape:
                raise InputError("provenance shape != landmark shape")
            object.__setattr__(self, "provenance", prov)

    @property
    def dimension(self) -> int:
        return self.landmarks.dimension

    def __len__(self) -> int:
        return len(self.landmarks)

    def _log_terms(self, X: Array) -> Array:
        d2 = _sq_dists(X, self.landmarks.points)
        return np.log(self.coefficients)[None, :] - d2 / (2.0 * self.scale**2)

    def evaluate_many(self, points) -> Array:
        X = _as_matrix(points)
        if X.shape[1] != self.dimension:
            raise InputError(f"points have dimension {X.shape[1]}, expected {self.dimension}")
        d2 = _sq_dists(X, self.landmarks.points)
        vals = (self.coefficients[None, :]
                * np.exp(-d2 / (2.0 * self.scale**2))).max(axis=1)
        dead = vals < 1e-300
        if np.any(dead):
            vals[dead] = np.exp(-self.evaluate_log_many(X[dead]))
        return vals

    def evaluate(self, x) -> float:
        return float(self.evaluate_many(_check_vector(x, self.dimension)[None, :])[0])

    def evaluate_log_many(self, points) -> Array:
        """-log g; equals the power-diagram weight function divided by 2 h^2."""
        X = _as_matrix(points)
        if X.shape[1] != self.dimension:
            raise InputError(f"points have dimension {X.shape[1]}, expected {self.dimension}")
        return -self._log_terms(X).max(axis=1)

    def evaluate_log(self, x) -> float:
        return float(self.evaluate_log_many(_check_vector(x, self.dimension)[None, :])[0])

    def argmax_index(self, x) -> int:
        """Index of the dominating landmark; lowest index wins ties."""
        if len(self.landmarks) == 0:  # pragma: no cover - type forbids it
            raise StateError("empty cover")
        v = _check_vector(x, self.dimension)
        return int(np.argmax(self._log_terms(v[None, :])[0]))

    def to_json_dict(self) -> dict:
        doc = {
            "h": self.scale,
            "landmarks": self.landmarks.points.tolist(),
            "coefficients": self.coefficients.tolist(),
            "provenance": None,
        }
        if self.provenance is not None:
            doc["provenance"] = self.provenance.tolist()
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "MaxGaussianCover":
        try:
            prov = doc.get("provenance")
            return cls(
                PointCloud(doc["landmarks"]),
                np.asarray(doc["coefficients"], float),
                float(doc["h"]),
                None if prov is None else _as_matrix(prov),
            )
        except KeyError as exc:
            raise InputError(f"cover JSON missing key {exc}") from exc
