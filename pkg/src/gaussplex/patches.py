"""Image-patch features: binomial inner product, discrete Hermite basis,
patch extraction, and intensity filtering onto the unit sphere.

The inner product on l x l patches weights pixel (i, j) by the product of
binomial coefficients C(l-1, i-1) C(l-1, j-1) / 2^{2(l-1)}, under which the
constant patch has unit norm.  The basis tensors H_a (x) H_b of discrete
Hermite vectors are orthonormal for it.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import InputError
from .mixture import PointCloud

Array = NDArray[np.float64]

DEFAULT_COMPONENTS = ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
INTENSITY_MODES = ("full-gradient", "quadratic-only")

# patch windows are centered on each pixel with zero padding, one patch per
# pixel, matching the published dataset size of (image side)^2 per image
PATCH_ALIGNMENT = "centered"


def binomial_weights(l: int) -> Array:
    """1D pixel weights C(l-1, i-1) / 2^{l-1}; they sum to 1."""
    if l < 1:
        raise InputError("need l >= 1")
    return np.array([math.comb(l - 1, i) for i in range(l)], float) / 2.0 ** (l - 1)


def binomial_inner_product_1d(u, v) -> float:
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if u.shape != v.shape or u.ndim != 1:
        raise InputError("1D inner product needs equal-length vectors")
    return float(np.sum(binomial_weights(u.shape[0]) * u * v))


def binomial_inner_product(A, B) -> float:
    """(A, B) = 2^{-2(l-1)} sum_ij C(l-1,i-1) C(l-1,j-1) A_ij B_ij."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("inner product needs two equal square patches")
    w = binomial_weights(A.shape[0])
    return float(np.einsum("i,j,ij,ij->", w, w, A, B))


@dataclass(frozen=True)
class HermiteBasis:
    """Discrete Hermite vectors H_a for one patch side length.

    Row a of ``one_d`` is H_a, the Gram-Schmidt orthonormalization of the
    monomial vector (i^a)_{i=1..l} under the binomial inner product, signed
    so the leading coefficient is positive.  H_0 is the unit constant.
    """

    l: int
    one_d: Array

    def tensor(self, a: int, b: int) -> Array:
        """2D basis patch H_a (x) H_b."""
        return np.outer(self.one_d[a], self.one_d[b])

    def orthonormality_defect(self) -> float:
        w = binomial_weights(self.l)
        gram = (self.one_d * w[None, :]) @ self.one_d.T
        return float(np.abs(gram - np.eye(self.l)).max())


def hermite_basis(l: int) -> HermiteBasis:
    """Orthonormalize the monomials 1, i, i^2, ... under the binomial
    product, via a weighted QR factorization for numerical stability."""
    if l < 2:
        raise InputError("need l >= 2")
    i = np.arange(1, l + 1, dtype=float)
    V = np.column_stack([i**a for a in range(l)])
    V /= np.abs(V).max(axis=0)  # tame the dynamic range before factoring
    roots = np.sqrt(binomial_weights(l))
    Q, R = np.linalg.qr(roots[:, None] * V)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    H = (Q * signs[None, :]).T / roots[None, :]
    return HermiteBasis(l, H)


@dataclass(frozen=True)
class PatchConfig:
    """Feature-selection settings for patch projection."""

    l: int
    intensity_threshold: float = 0.3
    intensity_mode: str = "full-gradient"
    components: tuple[tuple[int, int], ...] = DEFAULT_COMPONENTS

    def __post_init__(self):
        if self.l < 2:
            raise InputError("need l >= 2")
        if not (self.intensity_threshold > 0):
            raise InputError("intensity threshold must be positive")
        if self.intensity_mode not in INTENSITY_MODES:
            raise InputError(f"unknown intensity mode {self.intensity_mode!r}")
        comps = tuple((int(a), int(b)) for a, b in self.components)
        for a, b in comps:
            if not (0 <= a < self.l and 0 <= b < self.l):
                raise InputError("component degrees must be < l")
        object.__setattr__(self, "components", comps)


def extract_patches(images, l: int) -> Array:
    """All l x l windows centered on each pixel, extended by zero outside
    the image: (n_images * w * w, l, l)."""
    imgs = np.asarray(images, float)
    if imgs.ndim == 2:
        imgs = imgs[None, :, :]
    if imgs.ndim != 3 or imgs.shape[1] != imgs.shape[2]:
        raise InputError("images must be square, shape (n, w, w)")
    w = imgs.shape[1]
    if l > 2 * w:
        raise InputError("patch side too large for zero-extended images")
    before = l // 2
    after = l - 1 - before
    padded = np.pad(imgs, ((0, 0), (before, after), (before, after)))
    windows = np.lib.stride_tricks.sliding_window_view(padded, (l, l), axis=(1, 2))
    return windows.reshape(-1, l, l).copy()


def project_patches(patches, basis: HermiteBasis,
                    components: Sequence[tuple[int, int]] = DEFAULT_COMPONENTS) -> Array:
    """Coefficient of each patch on each H_a (x) H_b, stacked column-wise."""
    P = np.asarray(patches, float)
    if P.ndim == 2:
        P = P[None, :, :]
    l = basis.l
    if P.shape[1:] != (l, l):
        raise InputError(f"patches must be (n, {l}, {l})")
    w = binomial_weights(l)
    Hw = basis.one_d * w[None, :]  # row a picks off the degree-a coefficient
    core = np.einsum("ai,nij->naj", Hw, P)
    coefs = np.einsum("naj,bj->nab", core, Hw)
    return np.stack([coefs[:, a, b] for a, b in components], axis=1)


def project_and_filter(patches, basis: HermiteBasis,
                       config: PatchConfig) -> PointCloud:
    """Project patches onto the configured components, keep the high
    intensity ones, and normalize.

    full-gradient mode keeps patches whose whole coefficient vector has norm
    >= the threshold and scales it to the unit sphere; quadratic-only mode
    judges and divides by the norm of the degree-2 coefficients alone.
    """
    coefs = project_patches(patches, basis, config.components)
    if config.intensity_mode == "full-gradient":
        norms = np.linalg.norm(coefs, axis=1)
    else:
        quad = [idx for idx, (a, b) in enumerate(config.components) if a + b == 2]
        if not quad:
            raise InputError("quadratic-only mode needs degree-2 components")
        norms = np.linalg.norm(coefs[:, quad], axis=1)
    keep = norms >= config.intensity_threshold
    if not keep.any():
        raise InputError("no patch passes the intensity threshold")
    return PointCloud(coefs[keep] / norms[keep, None])


# ---------------------------------------------------------------------------
# IDX ubyte ingestion (big-endian, magic 0x803 images / 0x801 labels)


def read_idx_images(path) -> Array:
    """Grayscale image stack scaled to [0, 1], shape (n, rows, cols)."""
    with open(path, "rb") as fh:
        magic, n, rows, cols = struct.unpack(">IIII", fh.read(16))
        if magic != 0x00000803:
            raise InputError(f"bad IDX image magic {magic:#010x} in {path}")
        data = np.frombuffer(fh.read(n * rows * cols), dtype=np.uint8)
    if data.size != n * rows * cols:
        raise InputError(f"truncated IDX image file {path}")
    return data.reshape(n, rows, cols).astype(np.float64) / 255.0


def read_idx_labels(path) -> NDArray[np.int64]:
    with open(path, "rb") as fh:
        magic, n = struct.unpack(">II", fh.read(8))
        if magic != 0x00000801:
            raise InputError(f"bad IDX label magic {magic:#010x} in {path}")
        data = np.frombuffer(fh.read(n), dtype=np.uint8)
    if data.size != n:
        raise InputError(f"truncated IDX label file {path}")
    return data.astype(np.int64)


def digit_patch_cloud(images: Array, labels, digit: int, config: PatchConfig,
                      per_digit: int = 50) -> PointCloud:
    """High-intensity patch features for one digit class, using the first
    ``per_digit`` images of that digit in file order."""
    labels = np.asarray(labels)
    idx = np.nonzero(labels == digit)[0][:per_digit]
    if idx.size == 0:
        raise InputError(f"no images labeled {digit}")
    basis = hermite_basis(config.l)
    patches = extract_patches(images[idx], config.l)
    return project_and_filter(patches, basis, config)
