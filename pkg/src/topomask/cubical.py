"""Filtered cubical complex of a voxel grid (V-construction).

Voxels are the vertices; any higher cell takes the maximum of its vertex
values. A cell is identified by its lowest-corner voxel (the anchor) and a
3-bit extent mask (bit 0 = +x, bit 1 = +y, bit 2 = +z), and encoded as the
integer ``anchor_index * 8 + extent`` with ``anchor_index = x + nx*(y + ny*z)``.
Sorting cells of one dimension by ``(value, id)`` therefore sorts by value,
then anchor ``z, y, x``, then extent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParameterError
from .volume import Volume3D

EXTENTS = {p: tuple(e for e in range(8) if bin(e).count("1") == p) for p in range(4)}


def closed_form_counts(dims) -> tuple[int, int, int, int]:
    nx, ny, nz = dims
    out = [0, 0, 0, 0]
    for e in range(8):
        n = (nx - (e & 1)) * (ny - ((e >> 1) & 1)) * (nz - ((e >> 2) & 1))
        out[bin(e).count("1")] += max(n, 0)
    return tuple(out)


def decode_cells(ids: np.ndarray, dims) -> np.ndarray:
    """Cell ids to an ``(n, 4)`` array of ``[x, y, z, extent]``."""
    ids = np.asarray(ids, dtype=np.int64)
    nx, ny, _ = dims
    lin = ids >> 3
    x = lin % nx
    y = (lin // nx) % ny
    z = lin // (nx * ny)
    return np.stack([x, y, z, ids & 7], axis=1)


def encode_cells(cells, dims) -> np.ndarray:
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 4)
    nx, ny, _ = dims
    lin = cells[:, 0] + nx * (cells[:, 1] + ny * cells[:, 2])
    return lin * 8 + cells[:, 3]


@dataclass(frozen=True, eq=False)
class FilteredCubicalComplex:
    """All cells of a grid with filtration values, ordered per dimension.

    ``ids[p]`` / ``values[p]`` hold the p-cells in filtration order and
    ``rank`` maps a cell id to its position within its own dimension (-1 for
    ids that do not name a cell of the grid).
    """

    dims: tuple[int, int, int]
    ids: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]
    rank: np.ndarray

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.ids)

    @property
    def n_cells(self) -> int:
        return sum(self.counts)

    def cells(self, p: int) -> np.ndarray:
        return decode_cells(self.ids[p], self.dims)

    def global_order(self) -> tuple[np.ndarray, np.ndarray]:
        """``(dim, index)`` of every cell sorted by (value, dim, anchor z/y/x, extent)."""
        dim = np.concatenate([np.full(len(a), p, dtype=np.int64) for p, a in enumerate(self.ids)])
        idx = np.concatenate([np.arange(len(a), dtype=np.int64) for a in self.ids])
        vals = np.concatenate(self.values)
        ids = np.concatenate(self.ids)
        order = np.lexsort((ids, dim, vals))
        return dim[order], idx[order]

    def sublevel_counts(self, t: float) -> tuple[int, ...]:
        return tuple(int(np.searchsorted(v, t, side="right")) for v in self.values)


def _cells_of_dim(data: np.ndarray, p: int):
    nx, ny, nz = data.shape
    ids, vals = [], []
    for e in EXTENTS[p]:
        ex, ey, ez = e & 1, (e >> 1) & 1, (e >> 2) & 1
        sx, sy, sz = nx - ex, ny - ey, nz - ez
        if min(sx, sy, sz) <= 0:
            continue
        v = data[:sx, :sy, :sz]
        for dx in range(ex + 1):
            for dy in range(ey + 1):
                for dz in range(ez + 1):
                    if dx or dy or dz:
                        v = np.maximum(v, data[dx : dx + sx, dy : dy + sy, dz : dz + sz])
        x = np.arange(sx, dtype=np.int64)[:, None, None]
        y = np.arange(sy, dtype=np.int64)[None, :, None]
        z = np.arange(sz, dtype=np.int64)[None, None, :]
        lin = x + nx * (y + ny * z)
        ids.append((lin * 8 + e).ravel(order="F"))
        vals.append(v.ravel(order="F"))
    if not ids:
        return np.empty(0, np.int64), np.empty(0, np.float64)
    ids = np.concatenate(ids)
    vals = np.concatenate(vals).astype(np.float64)
    order = np.lexsort((ids, vals))
    return ids[order], vals[order]


def build_complex(v: Volume3D) -> FilteredCubicalComplex:
    data = np.asarray(v.data, dtype=np.float64)
    nvox = data.size
    ids, vals = [], []
    rank = np.full(nvox * 8, -1, dtype=np.int32)
    for p in range(4):
        i, x = _cells_of_dim(data, p)
        rank[i] = np.arange(len(i), dtype=np.int32)
        ids.append(i)
        vals.append(x)
    for a in ids + vals:
        a.flags.writeable = False
    rank.flags.writeable = False
    return FilteredCubicalComplex(v.dims, tuple(ids), tuple(vals), rank)


@dataclass(frozen=True, eq=False)
class BoundaryMatrix:
    """Sparse Z/2 matrix in compressed-column form; rows ascending in each column."""

    p: int
    col_ptr: np.ndarray
    rows: np.ndarray
    n_rows: int

    @property
    def n_cols(self) -> int:
        return len(self.col_ptr) - 1

    def column(self, j: int) -> np.ndarray:
        return self.rows[self.col_ptr[j] : self.col_ptr[j + 1]]

    @classmethod
    def from_columns(cls, p: int, columns, n_rows: int) -> "BoundaryMatrix":
        cols = [np.asarray(sorted(c), dtype=np.int32) for c in columns]
        ptr = np.zeros(len(cols) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(c) for c in cols])
        rows = np.concatenate(cols) if cols else np.empty(0, np.int32)
        return cls(p, ptr, rows.astype(np.int32), n_rows)


def boundary_matrix(c: FilteredCubicalComplex, p: int) -> BoundaryMatrix:
    """Boundary operator from p-cells to (p-1)-cells, both in filtration order."""
    if p not in (1, 2, 3):
        raise ParameterError(f"boundary matrix dimension must be 1..3, got {p}")
    nx, ny, _ = c.dims
    ids = c.ids[p]
    rows = _kernels.boundary_rows(ids, c.rank, nx, nx * ny, p)
    ptr = np.arange(len(ids) + 1, dtype=np.int64) * (2 * p)
    return BoundaryMatrix(p, ptr, rows, len(c.ids[p - 1]))


def chain_boundary(cell_ids, dims) -> np.ndarray:
    """Mod-2 boundary of a chain of same-dimension cells, as sorted face ids."""
    ids = np.asarray(cell_ids, dtype=np.int64)
    if ids.size == 0:
        return ids
    nx, ny, _ = dims
    strides = (1, nx, nx * ny)
    lin, ext = ids >> 3, ids & 7
    faces = []
    for b in range(3):
        bit = 1 << b
        has = (ext & bit) != 0
        fe = ext[has] ^ bit
        faces.append(lin[has] * 8 + fe)
        faces.append((lin[has] + strides[b]) * 8 + fe)
    faces = np.concatenate(faces)
    uniq, counts = np.unique(faces, return_counts=True)
    return uniq[counts % 2 == 1]
