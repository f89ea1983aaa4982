"""Synthetic data sets: noisy torus, planar triple configurations, and
Ising-model samples with graph-Laplacian smoothing.

All generators draw from a Philox counter-based generator seeded
explicitly, so runs are reproducible and independent streams can be
derived by seed-splitting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import InputError
from .mixture import PointCloud

Array = NDArray[np.float64]

TORUS_NOISE_SD = 0.04  # default matching the published complex sizes


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------------------
# point-cloud generators


def gen_torus(n: int, noise_sd: float = TORUS_NOISE_SD, seed: int = 0) -> PointCloud:
    """n samples of the standard R^3 torus embedding (radii 1 and 1/2) at
    uniform angles, plus isotropic Gaussian noise."""
    if n < 1:
        raise InputError("need n >= 1")
    rng = make_rng(seed)
    t1 = rng.uniform(0.0, 2.0 * np.pi, n)
    t2 = rng.uniform(0.0, 2.0 * np.pi, n)
    pts = np.column_stack([
        np.cos(t1) * (1.0 + 0.5 * np.cos(t2)),
        np.sin(t1) * (1.0 + 0.5 * np.cos(t2)),
        0.5 * np.sin(t2),
    ])
    if noise_sd > 0:
        pts += rng.normal(0.0, noise_sd, pts.shape)
    return PointCloud(pts)


def radial_weights(cloud: PointCloud) -> Array:
    """Rescale uniform weights by distance from the origin: a_i = ||x_i|| / N."""
    norms = np.linalg.norm(cloud.points, axis=1)
    return norms / len(cloud)


def gen_conf3(n: int, seed: int = 0) -> PointCloud:
    """n mean-centered triples of planar points with unit consecutive steps,
    closing distance >= 1, and uniformly permuted labels; flattened to R^6."""
    if n < 1:
        raise InputError("need n >= 1")
    rng = make_rng(seed)
    out = np.empty((n, 6))
    filled = 0
    while filled < n:
        block = max(64, int(1.2 * (n - filled)))
        t1 = rng.uniform(0.0, 2.0 * np.pi, block)
        t2 = rng.uniform(0.0, 2.0 * np.pi, block)
        p1 = np.zeros((block, 2))
        p2 = p1 + np.column_stack([np.cos(t1), np.sin(t1)])
        p3 = p2 + np.column_stack([np.cos(t2), np.sin(t2)])
        keep = np.einsum("ij,ij->i", p3 - p1, p3 - p1) >= 1.0
        trip = np.stack([p1, p2, p3], axis=1)[keep]          # (k, 3, 2)
        trip -= trip.mean(axis=1, keepdims=True)
        perms = rng.integers(0, 6, trip.shape[0])
        for row, pi in zip(trip, perms):
            if filled == n:
                break
            order = _S3[pi]
            out[filled] = row[list(order)].reshape(-1)
            filled += 1
    return PointCloud(out)


_S3 = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


# ---------------------------------------------------------------------------
# graphs and the Ising model


@dataclass(frozen=True)
class GraphSpec:
    """Named simple graph with a symmetric 0/1 adjacency matrix."""

    kind: str
    adjacency: Array

    def __post_init__(self):
        J = np.asarray(self.adjacency)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise InputError("adjacency must be square")
        if not np.array_equal(J, J.T):
            raise InputError("adjacency must be symmetric")
        if np.any(np.diag(J) != 0):
            raise InputError("adjacency must have zero diagonal")
        if not np.all((J == 0) | (J == 1)):
            raise InputError("adjacency entries must be 0 or 1")
        object.__setattr__(self, "adjacency", J.astype(np.int64))

    @property
    def m(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(np.triu(self.adjacency))
        return list(zip(ii.tolist(), jj.tolist()))

    def is_connected(self) -> bool:
        m = self.m
        seen = {0}
        stack = [0]
        adj = [np.nonzero(self.adjacency[i])[0] for i in range(m)]
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(int(j))
                    stack.append(int(j))
        return len(seen) == m

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "m": self.m, "adjacency": self.edges()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GraphSpec":
        m = int(doc["m"])
        J = np.zeros((m, m), dtype=np.int64)
        for i, j in doc["adjacency"]:
            J[i, j] = J[j, i] = 1
        return cls(doc.get("kind", "custom"), J)


def interval_graph(m: int) -> GraphSpec:
    J = np.zeros((m, m), dtype=np.int64)
    for i in range(m - 1):
        J[i, i + 1] = J[i + 1, i] = 1
    return GraphSpec(f"interval({m})", J)


def circle_graph(m: int) -> GraphSpec:
    J = np.zeros((m, m), dtype=np.int64)
    for i in range(m):
        j = (i + 1) % m
        J[i, j] = J[j, i] = 1
    return GraphSpec(f"circle({m})", J)


def flares_graph(arms: int = 3, arm_length: int = 14) -> GraphSpec:
    """Center vertex with ``arms`` chains of ``arm_length`` vertices each."""
    m = 1 + arms * arm_length
    J = np.zeros((m, m), dtype=np.int64)
    v = 1
    for _ in range(arms):
        prev = 0
        for _ in range(arm_length):
            J[prev, v] = J[v, prev] = 1
            prev = v
            v += 1
    return GraphSpec(f"flares({arms}x{arm_length})", J)


def graph_from_name(name: str) -> GraphSpec:
    """Parse compact specs: interval:30, circle:30, flares:3x14."""
    kind, _, arg = name.partition(":")
    if kind == "interval":
        return interval_graph(int(arg))
    if kind == "circle":
        return circle_graph(int(arg))
    if kind == "flares":
        arms, _, length = arg.partition("x")
        return flares_graph(int(arms), int(length))
    raise InputError(f"unknown graph spec {name!r}")


@dataclass(frozen=True)
class IsingParams:
    beta: float
    trials: int
    sweeps_per_trial: int = 2
    burn_in: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not (self.beta >= 0):
            raise InputError("beta must be nonnegative")
        if self.trials < 1:
            raise InputError("need at least one trial")


def hamiltonian(J, sigma) -> float:
    """H = -sum_{i,j} J_ij s_i s_j; the double sum counts each edge twice.

    This is twice the per-edge energy that the sampler and SpinSample store
    (see ``edge_energy``): H = 2 H_min,edge + 4 * transitions.
    """
    s = _check_spins(sigma)
    Jm = np.asarray(J)
    return float(-(s @ Jm @ s))


def edge_energy(J, sigma) -> float:
    """Per-edge (single-count) energy -sum_{i<j} J_ij s_i s_j.

    This is the energy whose Boltzmann weights the sampler targets; it
    satisfies the identity  edge_energy = -|E| + 2 * transition_count,
    which is what makes the observed transition histograms proportional to
    C(m-1, k) exp(-2 beta k) on the interval graph.
    """
    return 0.5 * hamiltonian(J, sigma)


def transition_count(J, sigma) -> int:
    """Number of edges (unordered) whose endpoints carry opposite spins."""
    s = _check_spins(sigma)
    Jm = np.asarray(J)
    ii, jj = np.nonzero(np.triu(Jm))
    return int(np.count_nonzero(s[ii] != s[jj]))


def _check_spins(sigma) -> Array:
    s = np.asarray(sigma)
    if not np.all(np.isin(s, (-1, 1))):
        raise InputError("spins must be +1 or -1")
    return s.astype(np.float64)


@dataclass(frozen=True)
class SpinSample:
    """Recorded Metropolis states with their energies and transition counts.

    ``energies`` are per-edge (single-count) values, so the identity
    energies = H_min + 2 * transitions holds exactly with H_min = -|E|.
    """

    graph: GraphSpec
    states: NDArray[np.int8]     # (N, m) entries +-1
    energies: Array
    transitions: NDArray[np.int64]

    def __post_init__(self):
        st = np.asarray(self.states, dtype=np.int8)
        if not np.all(np.isin(st, (-1, 1))):
            raise InputError("states must be +-1")
        object.__setattr__(self, "states", st)

    def __len__(self) -> int:
        return self.states.shape[0]

    def transition_histogram(self) -> NDArray[np.int64]:
        """Counts of states with k transitions, k = 0..|E|."""
        return np.bincount(self.transitions, minlength=self.graph.n_edges + 1)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.states, delimiter=",", fmt="%d")

    def to_json_dict(self) -> dict:
        return {
            "graph": self.graph.to_json_dict(),
            "states": self.states.tolist(),
            "energies": self.energies.tolist(),
            "transitions": self.transitions.tolist(),
        }


def sample_ising(graph: GraphSpec, params: IsingParams) -> SpinSample:
    """Single-flip Metropolis targeting P(s) ~ exp(-beta * edge_energy(s)).

    Each step picks a uniform site and flips it with probability
    min(1, exp(-beta * dH)), where dH = 2 s_i sum_j J_ij s_j is the
    per-edge energy change.  One sweep is m steps; ``burn_in`` sweeps are
    discarded and states are recorded every ``sweeps_per_trial`` sweeps.
    """
    m = graph.m
    J = graph.adjacency
    neighbors = [tuple(np.nonzero(J[i])[0].tolist()) for i in range(m)]
    beta = params.beta
    rng = make_rng(params.seed)

    # dH for flipping site i is 2 * s_i * local_field; fields are small ints
    max_deg = max(len(nb) for nb in neighbors)
    accept = {d: math.exp(-beta * 2.0 * d) for d in range(1, max_deg + 1)}

    spins = rng.choice(np.array([-1, 1], dtype=np.int64), m).tolist()
    states = np.empty((params.trials, m), dtype=np.int8)

    def run_sweeps(count: int) -> None:
        steps = count * m
        sites = rng.integers(0, m, steps)
        coins = rng.random(steps)
        for idx in range(steps):
            i = sites[idx]
            s = spins[i]
            field = 0
            for j in neighbors[i]:
                field += spins[j]
            prod = s * field
            if prod <= 0 or coins[idx] < accept[prod]:
                spins[i] = -s

    run_sweeps(params.burn_in)
    for t in range(params.trials):
        run_sweeps(params.sweeps_per_trial)
        states[t] = spins

    ii, jj = np.nonzero(np.triu(J))
    transitions = (states[:, ii] != states[:, jj]).sum(axis=1).astype(np.int64)
    energies = -float(graph.n_edges) + 2.0 * transitions.astype(np.float64)
    return SpinSample(graph, states, energies, transitions)


def filter_by_transitions(sample: SpinSample, max_k: int) -> SpinSample:
    """Keep states with at most ``max_k`` transitions."""
    if max_k < 0:
        raise InputError("max_k must be >= 0")
    keep = sample.transitions <= max_k
    if not keep.any():
        raise InputError(f"no state has <= {max_k} transitions")
    return SpinSample(sample.graph, sample.states[keep], sample.energies[keep],
                      sample.transitions[keep])


def predicted_transition_weights(m: int, beta: float, k) -> Array:
    """Relative frequency of k transitions on the interval graph:
    C(m-1, k) * exp(-2 beta k), normalization left to the caller."""
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    if np.any(ks < 0) or np.any(ks > m - 1):
        raise InputError("need 0 <= k <= m-1")
    vals = np.array([math.comb(m - 1, int(kk)) * math.exp(-2.0 * beta * kk)
                     for kk in ks])
    return vals if np.ndim(k) else float(vals[0])


# ---------------------------------------------------------------------------
# Laplacian smoothing and spectral projection


@dataclass(frozen=True)
class DiffusionOperator:
    """exp(-t L^T) for the left-normalized Laplacian L = I - D^{-1} A.

    A is the adjacency matrix with the vertex degree on the diagonal and D
    holds the row sums of A.  The operator preserves constant vectors and
    its spectrum lies in (0, 1].  ``walk_eigenvalues`` is the descending
    spectrum of D^{-1} A itself -- the published eigenvalue sequence for
    these graphs refers to that one-step operator, not to the exponential.
    """

    graph: GraphSpec
    t: float
    matrix: Array
    walk_eigenvalues: Array


def laplacian(graph: GraphSpec) -> tuple[Array, Array, Array]:
    """(A, D, L): self-loop-augmented adjacency, its row sums as a diagonal,
    and the left-normalized Laplacian I - D^{-1} A."""
    if not graph.is_connected():
        raise InputError("graph must be connected")
    J = graph.adjacency.astype(np.float64)
    deg = J.sum(axis=1)
    A = J + np.diag(deg)
    dvec = A.sum(axis=1)
    L = np.eye(graph.m) - A / dvec[:, None]
    return A, np.diag(dvec), L


def _symmetric_eig(graph: GraphSpec):
    """Eigendecomposition of D^{-1/2} A D^{-1/2}; shared by the operator
    builders.  Returns (dvec, eigenvalues ascending, eigenvectors)."""
    A, D, _ = laplacian(graph)
    dvec = np.diag(D)
    roots = np.sqrt(dvec)
    sym = A / np.outer(roots, roots)
    mu, U = np.linalg.eigh(sym)
    return dvec, mu, U


def diffusion_operator(graph: GraphSpec, t: float) -> DiffusionOperator:
    if not (t > 0):
        raise InputError("diffusion time must be positive")
    dvec, mu, U = _symmetric_eig(graph)
    roots = np.sqrt(dvec)
    # exp(-t L^T) = D^{1/2} U exp(-t (1 - mu)) U^T D^{-1/2}
    core = U * np.exp(-t * (1.0 - mu))[None, :]
    matrix = (core @ U.T) * (roots[:, None] / roots[None, :])
    return DiffusionOperator(graph, float(t), matrix,
                             np.sort(mu)[::-1].copy())


def diffuse(data, graph: GraphSpec, t: float = 10.0) -> Array:
    """Right-multiply an (N, m) data matrix by exp(-t L^T)."""
    op = diffusion_operator(graph, t)
    X = np.asarray(data, dtype=float)
    return X @ op.matrix


def spectral_projection(graph: GraphSpec, data, k: int = 3) -> PointCloud:
    """Project rows onto the k slowest diffusion directions.

    The projection vectors v_j = D^{-1/2} u_j (u_j eigenvectors of the
    symmetrized operator, smallest Laplacian eigenvalues first) are
    orthonormal under the D-weighted dot product, and the first one is the
    constant direction, so k=1 reduces to a weighted mean per row.
    Coordinates are <x, v_j>_D = x^T D v_j.
    """
    if k < 1 or k > graph.m:
        raise InputError("need 1 <= k <= number of vertices")
    dvec, mu, U = _symmetric_eig(graph)
    order = np.argsort(1.0 - mu)[:k]  # smallest Laplacian eigenvalues
    V = U[:, order] / np.sqrt(dvec)[:, None]
    # deterministic signs: largest-magnitude entry positive
    for col in range(k):
        lead = np.argmax(np.abs(V[:, col]))
        if V[lead, col] < 0:
            V[:, col] = -V[:, col]
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return PointCloud((X * dvec[None, :]) @ V)
