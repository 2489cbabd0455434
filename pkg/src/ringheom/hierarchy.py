"""Enumeration and indexing of the hierarchy multi-indices.

Each auxiliary field carries a multi-index (n_x^0..n_x^Kx, n_y^0..n_y^Ky)
of non-negative integers with total weight <= nmax.  The set is ordered
graded-lexicographically (by total weight, then lexicographic), which
makes any depth truncation a prefix of the full ordering, and the root
(all zeros) is always id 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityExceeded

__all__ = ["HierarchyIndexSet", "enumerate_indices", "decay_rate", "decay_table", "dump_csv"]


@dataclass(frozen=True)
class HierarchyIndexSet:
    """Multi-index table with +/- neighbor lookups.

    Attributes
    ----------
    kx, ky : int
        Pole counts per axis; component c corresponds to (x, j=c) for
        c <= kx and to (y, j=c-kx-1) otherwise.
    nmax : int
        Depth cutoff on the total weight.
    indices : ndarray, shape (count, ncomp), int64
        Multi-indices in graded-lex order; row 0 is the root.
    plus_nbr, minus_nbr : ndarray, shape (count, ncomp), int64
        Id of the index obtained by raising/lowering one component, or
        -1 when the neighbor falls outside the truncated set.
    """

    kx: int
    ky: int
    nmax: int
    indices: np.ndarray
    plus_nbr: np.ndarray
    minus_nbr: np.ndarray
    ncomp: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ncomp", (self.kx + 1) + (self.ky + 1))

    def __len__(self) -> int:
        return self.indices.shape[0]

    def component_axis_j(self, c: int) -> tuple[str, int]:
        """Map flat component index c to (axis, j)."""
        if c <= self.kx:
            return "x", c
        return "y", c - self.kx - 1


def index_count(kx: int, ky: int, nmax: int) -> int:
    """Number of multi-indices (stars and bars)."""
    ncomp = (kx + 1) + (ky + 1)
    return math.comb(ncomp + nmax, nmax)


def enumerate_indices(
    kx: int,
    ky: int,
    nmax: int,
    cells_per_ado: int | None = None,
    max_bytes: int | None = None,
) -> HierarchyIndexSet:
    """Enumerate all multi-indices with total weight <= nmax.

    Parameters
    ----------
    kx, ky, nmax : int
        Pole counts and depth cutoff, all >= 0.
    cells_per_ado, max_bytes : int, optional
        When both are given, raise CapacityExceeded if storing one state
        (count * cells_per_ado float64 values) would exceed max_bytes.
    """
    if kx < 0 or ky < 0 or nmax < 0:
        raise ValueError("kx, ky, nmax must be >= 0")
    ncomp = (kx + 1) + (ky + 1)
    count = index_count(kx, ky, nmax)
    if cells_per_ado is not None and max_bytes is not None:
        need = count * cells_per_ado * 8
        if need > max_bytes:
            raise CapacityExceeded(
                f"state of {count} fields x {cells_per_ado} cells needs "
                f"{need} bytes > budget {max_bytes}; lower nmax, K or the grid"
            )

    rows = np.empty((count, ncomp), dtype=np.int64)
    pos = 0
    for total in range(nmax + 1):
        for comp in _compositions(total, ncomp):
            rows[pos] = comp
            pos += 1
    assert pos == count

    id_of = {tuple(row): i for i, row in enumerate(rows.tolist())}
    plus = np.full((count, ncomp), -1, dtype=np.int64)
    minus = np.full((count, ncomp), -1, dtype=np.int64)
    for i, row in enumerate(rows.tolist()):
        for c in range(ncomp):
            row[c] += 1
            plus[i, c] = id_of.get(tuple(row), -1)
            row[c] -= 2
            if row[c] >= 0:
                minus[i, c] = id_of[tuple(row)]
            row[c] += 1

    return HierarchyIndexSet(kx=kx, ky=ky, nmax=nmax, indices=rows, plus_nbr=plus, minus_nbr=minus)


def _compositions(total, parts):
    """Weak compositions of `total` into `parts` slots, lexicographic."""
    if parts == 1:
        yield [total]
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield [first] + rest


def _nu_vector(idxset, pade_x, pade_y) -> np.ndarray:
    if len(pade_x.nu) != idxset.kx + 1 or len(pade_y.nu) != idxset.ky + 1:
        raise ValueError("pade sets do not match the index set pole counts")
    return np.concatenate([pade_x.nu, pade_y.nu])


def decay_rate(idxset: HierarchyIndexSet, i: int, pade_x, pade_y) -> float:
    """Damping rate of index i: sum over components of n * nu."""
    nu = _nu_vector(idxset, pade_x, pade_y)
    return float(np.dot(idxset.indices[i].astype(float), nu))


def decay_table(idxset: HierarchyIndexSet, pade_x, pade_y) -> np.ndarray:
    """Damping rates for the whole set, shape (count,)."""
    nu = _nu_vector(idxset, pade_x, pade_y)
    return idxset.indices.astype(float) @ nu


def dump_csv(idxset: HierarchyIndexSet, path, pade_x=None, pade_y=None) -> None:
    """Debug dump: one row (id, components..., decay) per index."""
    decay = None
    if pade_x is not None and pade_y is not None:
        decay = decay_table(idxset, pade_x, pade_y)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        comp_names = [f"n_x{j}" for j in range(idxset.kx + 1)]
        comp_names += [f"n_y{j}" for j in range(idxset.ky + 1)]
        writer.writerow(["id", *comp_names, "decay"])
        for i in range(len(idxset)):
            d = repr(float(decay[i])) if decay is not None else ""
            writer.writerow([i, *idxset.indices[i].tolist(), d])
