"""Persistent homology of a filtered complex over the two-element field.

Standard boundary-matrix column reduction with the clearing optimization,
processing dimensions top-down.  Columns are stored as Python integers
used as bitsets over filtration positions, which keeps the mod-2 column
additions fast for the complex sizes this pipeline produces (tens of
thousands of simplices).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import InputError
from .filtration import FilteredComplex


@dataclass(frozen=True)
class Bar:
    dim: int
    birth: float
    death: float  # math.inf marks an essential class

    @property
    def length(self) -> float:
        return self.death - self.birth

    @property
    def is_zero_length(self) -> bool:
        return self.death == self.birth


@dataclass(frozen=True)
class Barcode:
    """Multiset of (dim, birth, death) intervals in -log-density units."""

    intervals: tuple[Bar, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.intervals,
                               key=lambda b: (b.dim, b.birth, b.death)))
        for b in ordered:
            if b.death < b.birth:
                raise InputError("interval with death < birth")
        object.__setattr__(self, "intervals", ordered)

    def __len__(self) -> int:
        return len(self.intervals)

    def in_dim(self, dim: int) -> tuple[Bar, ...]:
        return tuple(b for b in self.intervals if b.dim == dim)

    def max_dim(self) -> int:
        return max((b.dim for b in self.intervals), default=-1)


def compute_persistence(Y: FilteredComplex, max_dim: Optional[int] = None) -> Barcode:
    """Barcode of the sublevel filtration of ``Y`` with mod-2 coefficients.

    Zero-length intervals are retained (``Bar.is_zero_length``); reports
    usually drop them through ``filter_bars``.
    """
    entries = Y.entries  # already in filtration order, faces first
    keys = [k for k, _ in entries]
    wts = [w for _, w in entries]
    pos = {k: i for i, k in enumerate(keys)}
    dims = [len(k) - 1 for k in keys]
    top = max(dims, default=0)

    by_dim: dict[int, list[int]] = {d: [] for d in range(top + 1)}
    for i, d in enumerate(dims):
        by_dim[d].append(i)

    paired_birth: dict[int, int] = {}  # birth position -> death position
    is_death = set()

    reduced: dict[int, int] = {}  # low position -> reduced column (bitmask)
    for d in range(top, 0, -1):
        reduced.clear()
        for j in by_dim[d]:
            if j in paired_birth:
                # clearing: positive columns reduce to zero, skip the work
                continue
            key = keys[j]
            col = 0
            for k in range(d + 1):
                col |= 1 << pos[key[:k] + key[k + 1:]]
            while col:
                low = col.bit_length() - 1
                other = reduced.get(low)
                if other is None:
                    break
                col ^= other
            if col:
                low = col.bit_length() - 1
                reduced[low] = col
                paired_birth[low] = j
                is_death.add(j)

    bars = []
    for i, key in enumerate(keys):
        d = dims[i]
        if max_dim is not None and d > max_dim:
            continue
        if i in is_death:
            continue
        if i in paired_birth:
            bars.append(Bar(d, wts[i], wts[paired_birth[i]]))
        else:
            bars.append(Bar(d, wts[i], math.inf))
    return Barcode(tuple(bars))


def betti_at(barcode: Barcode, a: float) -> tuple[int, ...]:
    """Interval counts per dimension with birth <= a < death."""
    top = barcode.max_dim()
    if top < 0:
        return (0,)
    out = [0] * (top + 1)
    for b in barcode.intervals:
        if b.birth <= a < b.death:
            out[b.dim] += 1
    return tuple(out)


def filter_bars(barcode: Barcode, min_length: float) -> Barcode:
    """Keep intervals of length >= min_length; infinite bars always stay."""
    if min_length < 0:
        raise InputError("min_length must be >= 0")
    return Barcode(tuple(
        b for b in barcode.intervals
        if math.isinf(b.death) or b.length >= min_length
    ))


def write_barcode_csv(barcode: Barcode, path) -> None:
    """Rows of ``dim,birth,death`` with ``inf`` marking essential classes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dim", "birth", "death"])
        for b in barcode.intervals:
            death = "inf" if math.isinf(b.death) else f"{b.death:.17g}"
            writer.writerow([b.dim, f"{b.birth:.17g}", death])


def read_barcode_csv(path) -> Barcode:
    bars = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1 and row and row[0].strip().lower() == "dim":
                continue
            if not row:
                continue
            try:
                dim = int(row[0])
                birth = float(row[1])
                death = math.inf if row[2].strip().lower() == "inf" else float(row[2])
            except (IndexError, ValueError) as exc:
                raise InputError(f"bad barcode CSV at line {lineno}: {exc}") from exc
            bars.append(Bar(dim, birth, death))
    return Barcode(tuple(bars))
