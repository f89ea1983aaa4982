"""Independent test oracles: GF(2) rank computations for persistence, a
grid nerve for 2D power diagrams, and a brute-force subset enumerator for
face-max weights.  Nothing here shares code paths with the library."""

from itertools import combinations

import numpy as np

from gaussplex import brute_force_cell


def oracle_cell(Z, p, simplex, hint_point=None,
                schedule=((240, 0.4), (700, 0.6), (1700, 0.6))):
    """Grid verdict for a cell problem, refined until decisive.

    "empty" verdicts are rigorous for the scanned box at any resolution, so
    the first one stands; "member"/"near" verdicts are re-examined at finer
    resolution (smaller slack) since a coarse "near" can be a thinly-empty
    cell.  ``hint_point``, when given, is included in the scanned box --
    cell intersections can sit arbitrarily far from the landmarks, and a
    grid can only certify emptiness of what it scans.
    """
    Z = np.asarray(Z, float)
    cover = Z if hint_point is None else np.vstack([Z, np.asarray(hint_point, float)])
    bounds = (cover.min(axis=0), cover.max(axis=0))
    got = None
    for res, pad in schedule:
        got = brute_force_cell(Z, p, simplex, resolution=res, pad=pad,
                               bounds=bounds)
        if got.status == "empty":
            return got
    return got


# ---------------------------------------------------------------------------
# GF(2) linear algebra on columns encoded as Python-int bitmasks


def gf2_rank(columns) -> int:
    basis = {}
    rank = 0
    for col in columns:
        while col:
            low = col.bit_length() - 1
            if low in basis:
                col ^= basis[low]
            else:
                basis[low] = col
                rank += 1
                break
    return rank


def boundary_columns(simplices, universe_pos):
    """Mod-2 boundary columns of the given k-simplices, with rows indexed by
    the positions of their facets in ``universe_pos``."""
    cols = []
    for s in simplices:
        col = 0
        for facet in combinations(s, len(s) - 1):
            col ^= 1 << universe_pos[facet]
        cols.append(col)
    return cols


def persistent_betti(entries, dim, a, b) -> int:
    """dim of the image H_dim(Y(a)) -> H_dim(Y(b)) from ranks alone.

    beta = dim Z_k(a) - dim(B_k(b) /\\ C_k(a)), with
    dim Z_k(a) = n_k(a) - rank boundary_k(a) and
    dim(B_k(b) /\\ C_k(a)) = rank boundary_{k+1}(b)
                             - rank of its rows outside Y(a).
    """
    at_a = [s for s, w in entries if w <= a]
    at_b = [s for s, w in entries if w <= b]
    k_a = sorted(s for s in at_a if len(s) == dim + 1)
    km1_a = sorted(s for s in at_a if len(s) == dim)
    k_b = sorted(s for s in at_b if len(s) == dim + 1)
    kp1_b = sorted(s for s in at_b if len(s) == dim + 2)

    pos_km1_a = {s: i for i, s in enumerate(km1_a)}
    rank_dk_a = gf2_rank(boundary_columns(k_a, pos_km1_a)) if dim > 0 else 0
    dim_z = len(k_a) - rank_dk_a

    pos_k_b = {s: i for i, s in enumerate(k_b)}
    cols_b = boundary_columns(kp1_b, pos_k_b)
    rank_b = gf2_rank(cols_b)
    in_a = set(k_a)
    outside_rows = [i for i, s in enumerate(k_b) if s not in in_a]
    outside_mask = 0
    for i in outside_rows:
        outside_mask |= 1 << i
    cols_outside = [c & outside_mask for c in cols_b]
    rank_outside = gf2_rank(cols_outside)
    dim_bb_in_a = rank_b - rank_outside
    return dim_z - dim_bb_in_a


def barcode_from_ranks(entries, max_dim):
    """Full persistent-Betti table over all critical value pairs.

    Returns {dim: {(a, b): beta}} for a <= b over the critical weights.
    """
    crit = sorted({w for _, w in entries})
    table = {}
    for dim in range(max_dim + 1):
        vals = {}
        for i, a in enumerate(crit):
            for b in crit[i:]:
                vals[(a, b)] = persistent_betti(entries, dim, a, b)
        table[dim] = vals
    return table


def bars_to_rank_table(barcode, entries, max_dim):
    """The same table derived from a barcode: bars born by a, alive past b."""
    crit = sorted({w for _, w in entries})
    table = {}
    for dim in range(max_dim + 1):
        bars = [bar for bar in barcode.intervals if bar.dim == dim]
        vals = {}
        for i, a in enumerate(crit):
            for b in crit[i:]:
                vals[(a, b)] = sum(1 for bar in bars if bar.birth <= a and bar.death > b)
        table[dim] = vals
    return table


def random_filtered_entries(rng, max_simplices=30):
    """Random small filtered complex: maximal simplices on few vertices,
    closed under faces, weights face-monotone with deliberate ties."""
    n_vertices = int(rng.integers(3, 7))
    simplices = {(v,): 0.0 for v in range(n_vertices)}
    for _ in range(int(rng.integers(2, 7))):
        size = int(rng.integers(2, min(5, n_vertices + 1)))
        verts = tuple(sorted(rng.choice(n_vertices, size=size, replace=False).tolist()))
        new = sorted(
            {face
             for r in range(2, len(verts) + 1)
             for face in combinations(verts, r)
             if face not in simplices},
            key=lambda f: (len(f), f),
        )
        if len(simplices) + len(new) > max_simplices:
            continue
        for face in new:
            face_w = max(simplices[g] for g in combinations(face, len(face) - 1))
            simplices[face] = face_w + float(rng.choice([0.0, 0.25, 0.5, 1.0]))
    return tuple(sorted(simplices.items(), key=lambda kv: (kv[1], len(kv[0]), kv[0])))


# ---------------------------------------------------------------------------
# dense-grid nerve of a 2D power diagram


def grid_nerve(landmarks, powers, level, max_dim=2, resolution=400, pad=0.3):
    """All simplices sigma with a grid point x where every i in sigma
    attains min_j w_j(x) within a Lipschitz slack and w(x) <= level."""
    Z = np.asarray(landmarks, float)
    p = np.asarray(powers, float)
    lo = Z.min(axis=0)
    hi = Z.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    lo = lo - pad * span
    hi = hi + pad * span
    axes = [np.linspace(lo[d], hi[d], resolution) for d in range(2)]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.column_stack([g.reshape(-1) for g in mesh])
    x2 = np.einsum("ij,ij->i", X, X)
    z2 = np.einsum("ij,ij->i", Z, Z)
    d2 = x2[:, None] + z2[None, :] - 2.0 * (X @ Z.T)
    W = d2 - p[None, :]

    steps = (hi - lo) / (resolution - 1)
    delta = 0.5 * float(np.linalg.norm(steps))
    zz2 = (np.einsum("ij,ij->i", Z, Z)[:, None]
           + np.einsum("ij,ij->i", Z, Z)[None, :] - 2.0 * (Z @ Z.T))
    diam = float(np.sqrt(np.maximum(zz2, 0).max()))
    slack = 2.0 * diam * delta  # Lipschitz bound for the linear w_i - w_j
    rmax = float(np.sqrt(np.maximum(d2, 0).max()))
    level_slack = 2.0 * rmax * delta + delta * delta

    wmin = W.min(axis=1)
    ok_level = wmin <= level + level_slack
    near = W <= (wmin + slack)[:, None]

    found = set()
    rows = np.nonzero(ok_level)[0]
    for r in rows:
        members = tuple(np.nonzero(near[r])[0].tolist())
        for size in range(1, min(max_dim + 1, len(members)) + 1):
            for sub in combinations(members, size):
                found.add(sub)
    return found, slack
