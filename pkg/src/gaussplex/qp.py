"""Power-cell quadratic programs over Gram data, by a dual active-set method.

A cell problem asks for the minimum of the power distance

    w_i0(x) = ||x - z_i0||^2 - p_i0

over the intersection of power-diagram cells indexed by a simplex sigma:
w_i0(x) = w_j(x) for j in sigma \\ {i0} and w_i0(x) <= w_k(x) for every
other landmark k.  Every such constraint is linear with normal
2 (z_j - z_i0), so the whole computation runs off the Gram matrix
G[i, j] = z_i . z_j and the powers alone; the ambient dimension never
enters.  The minimizer is returned as an affine combination of landmarks.

The solver maximizes the dual: starting from the equality-constrained
minimizer it repeatedly enforces the most-violated constraint, dropping
active inequalities whose multipliers would go negative.  If a violated
constraint's normal is linearly dependent on the working set and no
active inequality can be dropped, the dual is unbounded and the cell
intersection is certified empty -- that early exit is what makes nerve
enumeration affordable, since most candidate simplices are infeasible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import InputError, SolverFailure

Array = NDArray[np.float64]

DEFAULT_TOL = 1e-9
_DEP_RTOL = 1e-10   # pivot threshold for dependent constraint normals
_RATIO_TOL = 1e-10  # smallest dual-step denominator considered


@dataclass(frozen=True)
class CellProblem:
    """One constrained power-distance minimization, in Gram form."""

    gram: Array
    powers: Array
    base: int
    equalities: tuple[int, ...]
    inequalities: tuple[int, ...]

    def __post_init__(self):
        g = np.asarray(self.gram, dtype=float)
        p = np.asarray(self.powers, dtype=float).reshape(-1)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InputError("gram must be square")
        if p.shape[0] != g.shape[0]:
            raise InputError("powers length != gram size")
        eq = tuple(int(j) for j in self.equalities)
        ineq = tuple(int(k) for k in self.inequalities)
        if self.base in eq:
            raise InputError("base index may not appear among equalities")
        if set(eq) & set(ineq):
            raise InputError("equalities and inequalities overlap")
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "base", int(self.base))
        object.__setattr__(self, "equalities", eq)
        object.__setattr__(self, "inequalities", ineq)

    @classmethod
    def for_simplex(cls, gram, powers, simplex: Sequence[int],
                    base: Optional[int] = None) -> "CellProblem":
        """Constraints for the cell intersection of ``simplex``: equality on
        its other vertices, inequality on every remaining landmark."""
        simplex = tuple(sorted(int(v) for v in simplex))
        if base is None:
            base = simplex[0]
        if base not in simplex:
            raise InputError("base must belong to the simplex")
        n = np.asarray(gram).shape[0]
        eq = tuple(v for v in simplex if v != base)
        ineq = tuple(k for k in range(n) if k not in simplex)
        return cls(gram, powers, base, eq, ineq)

    def to_json_dict(self) -> dict:
        return {
            "gram": self.gram.tolist(),
            "powers": self.powers.tolist(),
            "base": self.base,
            "equalities": list(self.equalities),
            "inequalities": list(self.inequalities),
        }


@dataclass(frozen=True)
class QpSolution:
    """Outcome of a cell problem.

    ``minimizer_coeffs`` are affine coefficients over all landmarks (sum 1)
    expressing the minimizer; ``objective`` is the minimum power distance.
    Both are None when the cell intersection is empty.
    """

    status: str  # "feasible" | "infeasible"
    minimizer_coeffs: Optional[Array]
    objective: Optional[float]
    active_set: tuple[int, ...]
    kkt_residual: float
    iterations: int

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "minimizer_coeffs": None if self.minimizer_coeffs is None
            else self.minimizer_coeffs.tolist(),
            "objective": self.objective,
            "active_set": list(self.active_set),
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
        }


class PowerCellSolver:
    """Shared context for solving many cells over one Gram matrix.

    Validates the Gram matrix once (symmetry, positive semidefiniteness)
    and derives the feasibility tolerance from its trace, so individual
    solves stay cheap.  Each solve is independent and pure.
    """

    def __init__(self, gram, powers, tol: float = DEFAULT_TOL,
                 validate: bool = True):
        g = np.asarray(gram, dtype=float)
        p = np.asarray(powers, dtype=float).reshape(-1)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or p.shape[0] != g.shape[0]:
            raise InputError("gram must be square with matching powers")
        scale = max(1.0, float(np.trace(np.abs(g))) / g.shape[0])
        if validate:
            if not np.allclose(g, g.T, atol=1e-12 * scale):
                raise InputError("gram matrix is not symmetric")
            eig_min = float(np.linalg.eigvalsh(g).min())
            if eig_min < -1e-8 * scale:
                raise InputError(f"gram matrix is not PSD (min eigenvalue {eig_min:.3e})")
            g = 0.5 * (g + g.T)
        self.gram = g
        self.powers = p
        self.n = g.shape[0]
        self.scale = scale
        self.tol = tol * scale
        self._diag = np.diag(g).copy()

    # -- constraint ingredients, all derived from Gram data --
    # normal of constraint j (relative to base i0) is a_j = 2 (z_j - z_i0);
    # _apcol(j)[k] = a_k . a_j, _c[k] = a_k . z_i0, rhs beta_k below.

    def _apcol(self, j: int, i0: int) -> Array:
        g = self.gram
        return 4.0 * (g[:, j] - g[:, i0] - g[i0, j] + g[i0, i0])

    def solve(self, simplex: Sequence[int], base: Optional[int] = None) -> QpSolution:
        problem = CellProblem.for_simplex(self.gram, self.powers, simplex, base)
        return self._solve(problem)

    def solve_problem(self, problem: CellProblem) -> QpSolution:
        return self._solve(problem)

    def _solve(self, problem: CellProblem) -> QpSolution:
        g, p = self.gram, self.powers
        i0 = problem.base
        eq = problem.equalities
        ineq = problem.inequalities
        n = self.n
        tol = self.tol
        dep_floor = 4.0 * self.scale

        cvec = 2.0 * (g[:, i0] - g[i0, i0])          # a_k . z_i0
        beta = (self._diag - p) - (self._diag[i0] - p[i0])
        is_eq = np.zeros(n, dtype=bool)
        is_eq[list(eq)] = True
        considered = np.zeros(n, dtype=bool)
        considered[list(eq)] = True
        considered[list(ineq)] = True

        # working set state
        widx: list[int] = []       # landmark ids
        wsign: list[float] = []    # +1, or -1 for equalities added flipped
        weq: list[bool] = []
        u = np.zeros(0)            # multipliers on signed normals
        cols: list[Array] = []     # signed AP columns, length-n each
        M = np.zeros((0, 0))       # signed normal Gram matrix
        in_w = np.zeros(n, dtype=bool)

        cap = 10 * max(1, len(eq) + len(ineq)) + 10
        additions = 0

        def current_ax() -> Array:
            if not widx:
                return cvec.copy()
            return cvec - 0.5 * (np.column_stack(cols) @ u)

        def add_constraint(pidx: int, sign: float, v: float) -> bool:
            """Drive constraint pidx to tightness; False certifies an empty cell."""
            nonlocal u, M
            ap_p = self._apcol(pidx, i0)
            ap_pp = ap_p[pidx]
            u_p = 0.0
            while True:
                if widx:
                    q = sign * np.array([s * ap_p[j] for j, s in zip(widx, wsign)])
                    r = _sym_solve(M, q)
                    z2 = ap_pp - float(q @ r)
                else:
                    q = np.zeros(0)
                    r = np.zeros(0)
                    z2 = ap_pp
                if z2 > _DEP_RTOL * max(ap_pp, dep_floor):
                    t_full = 2.0 * v / z2
                    t_drop, drop_at = _blocking_step(u, r, weq)
                    if t_full <= t_drop:
                        u = u - t_full * r
                        u_p += t_full
                        _append_working(pidx, sign, u_p, ap_p, q)
                        return True
                    u = u - t_drop * r
                    u_p += t_drop
                    v -= 0.5 * t_drop * z2
                    _remove_working(drop_at)
                else:
                    t_drop, drop_at = _blocking_step(u, r, weq)
                    if drop_at is None:
                        return False  # dual unbounded: intersection is empty
                    u = u - t_drop * r
                    u_p += t_drop
                    _remove_working(drop_at)

        def _append_working(pidx, sign, u_p, ap_p, q):
            nonlocal u, M
            widx.append(pidx)
            wsign.append(sign)
            weq.append(is_eq[pidx])
            cols.append(sign * ap_p)
            in_w[pidx] = True
            k = len(widx)
            newM = np.empty((k, k))
            newM[:k - 1, :k - 1] = M
            newM[-1, :k - 1] = q
            newM[:k - 1, -1] = q
            newM[-1, -1] = ap_p[pidx]
            M = newM
            u = np.append(u, u_p)

        def _remove_working(at):
            nonlocal u, M
            in_w[widx[at]] = False
            del widx[at], wsign[at], weq[at], cols[at]
            M = np.delete(np.delete(M, at, axis=0), at, axis=1)
            u = np.delete(u, at)

        while True:
            ax = current_ax()
            resid = ax - beta
            worst = tol
            pick = -1
            flip = 1.0
            for j in eq:
                if not in_w[j]:
                    v = abs(resid[j])
                    if v > worst:
                        worst, pick, flip = v, j, (1.0 if resid[j] > 0 else -1.0)
            for k in ineq:
                if not in_w[k] and resid[k] > worst:
                    worst, pick, flip = resid[k], k, 1.0
            if pick < 0:
                break
            additions += 1
            if additions > cap:
                raise SolverFailure(
                    "cell solver exceeded its iteration cap",
                    diagnostics={
                        "base": i0, "equalities": list(eq),
                        "iterations": additions, "worst_violation": float(worst),
                    },
                )
            if not add_constraint(pick, flip, float(worst)):
                return QpSolution(
                    status="infeasible", minimizer_coeffs=None, objective=None,
                    active_set=(), kkt_residual=float("nan"), iterations=additions,
                )

        # assemble the feasible solution
        lam = u * np.asarray(wsign) if widx else np.zeros(0)
        coeffs = np.zeros(n)
        coeffs[i0] = 1.0 + lam.sum()
        for w, j in enumerate(widx):
            coeffs[j] -= lam[w]
        objective = 0.25 * float(u @ M @ u) - p[i0] if widx else -p[i0]
        active = tuple(sorted(j for w, j in enumerate(widx) if not weq[w]))
        ax = current_ax()
        kkt = 0.0
        for w, j in enumerate(widx):
            kkt = max(kkt, abs(float(ax[j] - beta[j])))
        return QpSolution(
            status="feasible", minimizer_coeffs=coeffs, objective=float(objective),
            active_set=active, kkt_residual=kkt, iterations=additions,
        )


def _sym_solve(M: Array, q: Array) -> Array:
    if M.shape[0] == 0:
        return np.zeros(0)
    try:
        return np.linalg.solve(M, q)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(M, q, rcond=None)[0]


def _blocking_step(u: Array, r: Array, weq: list[bool]) -> tuple[float, Optional[int]]:
    """Largest dual step before an active inequality multiplier hits zero.

    Equality multipliers are free and never block.  Ties break toward the
    earliest working-set entry for determinism.
    """
    best = np.inf
    at = None
    for w in range(len(r)):
        if not weq[w] and r[w] > _RATIO_TOL:
            cand = u[w] / r[w]
            if cand < best:
                best, at = cand, w
    return best, at


def solve_cell(problem: CellProblem, tol: float = DEFAULT_TOL) -> QpSolution:
    """Solve one cell problem from scratch (validates the Gram matrix)."""
    solver = PowerCellSolver(problem.gram, problem.powers, tol=tol)
    return solver.solve_problem(problem)


def feasibility(problem: CellProblem, tol: float = DEFAULT_TOL) -> str:
    """"nonempty" or "empty"; early-terminates on a dual unboundedness
    certificate inside the solve."""
    return "nonempty" if solve_cell(problem, tol).feasible else "empty"


@dataclass(frozen=True)
class BruteForceCell:
    """Grid-oracle verdict on one cell problem.

    ``status``: "member" when some grid point lies exactly in the cell
    intersection (only possible for full-dimensional cells); "near" when
    grid points come within the Lipschitz slack of membership -- the usual
    outcome for nonempty lower-dimensional cells, but at coarse resolution
    also possible for thinly-empty ones; "empty" when no grid point is
    within slack, which rigorously excludes any member inside the scanned
    box (the membership margin is 2*diameter-Lipschitz).  Refining the grid
    shrinks the slack and sharpens "near" verdicts.
    """

    status: str
    point: Optional[Array]
    objective: Optional[float]
    slack: float

    def __bool__(self) -> bool:
        return self.status != "empty"


def brute_force_cell(points, powers, simplex: Sequence[int],
                     base: Optional[int] = None, resolution: int = 200,
                     pad: float = 0.25, slack: Optional[float] = None,
                     bounds=None) -> BruteForceCell:
    """Grid-search oracle for cell problems with explicit coordinates.

    Scans a padded bounding-box grid (or explicit ``bounds``) and
    classifies the cell intersection of ``simplex`` (see BruteForceCell);
    when points qualify it also minimizes the base power distance over
    them.  Verdicts are relative to the scanned box.  Test oracle only;
    dimension <= 3.
    """
    Z = np.asarray(points, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1)
    p = np.asarray(powers, dtype=float).reshape(-1)
    m = Z.shape[1]
    if m > 3:
        raise InputError("grid oracle supports dimension <= 3 only")
    simplex = tuple(sorted(int(v) for v in simplex))
    if base is None:
        base = simplex[0]

    if bounds is None:
        lo = Z.min(axis=0)
        hi = Z.max(axis=0)
    else:
        lo = np.asarray(bounds[0], float)
        hi = np.asarray(bounds[1], float)
    span = np.maximum(hi - lo, 1e-9)
    lo = lo - pad * span
    hi = hi + pad * span
    axes = [np.linspace(lo[d], hi[d], resolution) for d in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.column_stack([g.reshape(-1) for g in mesh])

    d2 = _pairwise_sq(X, Z)
    W = d2 - p[None, :]
    if slack is None:
        # w_i - w_j is linear with gradient 2 (z_j - z_i), so membership can
        # shift by at most 2 * diameter * (grid half-diagonal) at a neighbor
        steps = (hi - lo) / (resolution - 1)
        delta = 0.5 * float(np.linalg.norm(steps))
        diam = float(np.sqrt(_pairwise_sq(Z, Z).max()))
        slack = 2.0 * diam * delta

    margin = W[:, simplex].max(axis=1) - W.min(axis=1)  # <= 0 iff member
    near = margin <= slack
    if not near.any():
        return BruteForceCell("empty", None, None, float(slack))
    status = "member" if (margin <= 0.0).any() else "near"
    wbase = W[near, base]
    at = int(np.argmin(wbase))
    return BruteForceCell(status, X[near][at], float(wbase[at]), float(slack))


def _pairwise_sq(X: Array, Z: Array) -> Array:
    x2 = np.einsum("ij,ij->i", X, X)
    z2 = np.einsum("ij,ij->i", Z, Z)
    d2 = x2[:, None] + z2[None, :] - 2.0 * (X @ Z.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def dump_debug(pairs, path) -> None:
    """Write (problem, solution) pairs as a JSON regression fixture."""
    doc = [{"problem": pr.to_json_dict(), "solution": so.to_json_dict()}
           for pr, so in pairs]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
