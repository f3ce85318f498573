"""Boundary-matrix reduction, persistence diagrams, representative cycles, Betti curves."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .cubical import BoundaryMatrix, FilteredCubicalComplex, boundary_matrix, decode_cells
from .errors import ParameterError, UnsupportedDimensionError


@dataclass(frozen=True, eq=False)
class ReducedMatrix:
    """Result of reducing a boundary matrix; nonzero columns define the pairing."""

    p: int
    low: np.ndarray
    start: np.ndarray
    length: np.ndarray
    pool: np.ndarray
    n_rows: int

    @property
    def n_cols(self) -> int:
        return len(self.low)

    def column(self, j: int) -> np.ndarray:
        s = self.start[j]
        return self.pool[s : s + self.length[j]]

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """``(row, col)`` index arrays: row cell born, column cell kills it."""
        cols = np.flatnonzero(self.low >= 0)
        return self.low[cols], cols

    def as_boundary_matrix(self) -> BoundaryMatrix:
        ptr = np.zeros(self.n_cols + 1, dtype=np.int64)
        ptr[1:] = np.cumsum(self.length)
        rows = np.concatenate([self.column(j) for j in range(self.n_cols)]) if self.n_cols else np.empty(0)
        return BoundaryMatrix(self.p, ptr, rows.astype(np.int32), self.n_rows)


def reduce_matrix(m: BoundaryMatrix, cleared: np.ndarray | None = None) -> ReducedMatrix:
    """Standard left-to-right reduction over Z/2.

    ``cleared`` marks columns known to reduce to zero (creator cells); skipping
    them leaves every other reduced column unchanged.
    """
    if cleared is None:
        cleared = np.zeros(m.n_cols, dtype=np.bool_)
    low, start, length, pool = _kernels.reduce_columns(
        np.ascontiguousarray(m.col_ptr, dtype=np.int64),
        np.ascontiguousarray(m.rows, dtype=np.int32),
        int(m.n_rows),
        np.ascontiguousarray(cleared, dtype=np.bool_),
    )
    return ReducedMatrix(m.p, low, start, length, pool, m.n_rows)


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth: float
    death: float
    birth_cell: int
    death_cell: int  # -1 for essential classes

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    @property
    def essential(self) -> bool:
        return math.isinf(self.death)


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Flat table of pairs. ``birth_cell``/``death_cell`` index the dim / dim+1 filtration order."""

    dim: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    birth_cell: np.ndarray
    death_cell: np.ndarray

    def __post_init__(self):
        for name in ("dim", "birth_cell", "death_cell"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        for name in ("birth", "death"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    @classmethod
    def from_pairs(cls, pairs) -> "PersistenceDiagram":
        pairs = list(pairs)
        cols = ([p.dim for p in pairs], [p.birth for p in pairs], [p.death for p in pairs],
                [p.birth_cell for p in pairs], [p.death_cell for p in pairs])
        return cls(*cols)

    @classmethod
    def from_points(cls, dim: int, points) -> "PersistenceDiagram":
        """Diagram from bare ``(birth, death)`` points; cell indices are positional."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        n = len(pts)
        nidx = np.arange(n)
        return cls(np.full(n, dim), pts[:, 0], pts[:, 1], nidx, np.where(np.isinf(pts[:, 1]), -1, nidx))

    def __len__(self) -> int:
        return len(self.dim)

    @property
    def persistence(self) -> np.ndarray:
        return self.death - self.birth

    @property
    def essential(self) -> np.ndarray:
        return np.isinf(self.death)

    @property
    def zero_persistence(self) -> np.ndarray:
        return self.death == self.birth

    def select(self, mask) -> "PersistenceDiagram":
        return PersistenceDiagram(self.dim[mask], self.birth[mask], self.death[mask],
                                  self.birth_cell[mask], self.death_cell[mask])

    def in_dim(self, p: int) -> "PersistenceDiagram":
        return self.select(self.dim == p)

    def points(self, p: int, finite: bool = True) -> np.ndarray:
        m = self.dim == p
        if finite:
            m &= ~self.essential
        return np.stack([self.birth[m], self.death[m]], axis=1)

    @property
    def pairs(self) -> list[PersistencePair]:
        return [
            PersistencePair(int(d), float(b), float(x), int(bc), int(dc))
            for d, b, x, bc, dc in zip(self.dim, self.birth, self.death, self.birth_cell, self.death_cell)
        ]

    def __iter__(self):
        return iter(self.pairs)


def _concat_diagrams(parts) -> PersistenceDiagram:
    cols = list(zip(*parts))
    return PersistenceDiagram(*(np.concatenate(c) for c in cols))


@dataclass(frozen=True, eq=False)
class PersistenceResult:
    """Diagram plus the reduced matrices needed to read off cycles."""

    complex: FilteredCubicalComplex
    diagram: PersistenceDiagram
    reduced: dict = field(default_factory=dict)


def _part(dim, bvals, dvals, bidx, didx):
    n = len(bidx)
    return (np.full(n, dim, dtype=np.int64), bvals, dvals, np.asarray(bidx, np.int64), np.asarray(didx, np.int64))


def compute_diagram(c: FilteredCubicalComplex) -> PersistenceResult:
    """Pairs in dims 0-2.

    Reduces the top boundary matrix first and clears creator columns in the
    next one down; dimension 0 uses union-find, which yields the same pairing
    as reducing the edge-vertex matrix.
    """
    nx, ny, _ = c.dims
    nv, ne, ns, nc = c.counts
    v0, v1, v2, v3 = c.values

    r3 = reduce_matrix(boundary_matrix(c, 3))
    creators_sq = np.zeros(ns, dtype=np.bool_)
    rows3, cols3 = r3.pairs()
    creators_sq[rows3] = True
    r2 = reduce_matrix(boundary_matrix(c, 2), cleared=creators_sq)
    rows2, cols2 = r2.pairs()

    b0, d0, positive_edge = _kernels.union_find_pairs(c.ids[1], c.rank, nx, nx * ny, nv)

    parts = []
    alive0 = np.ones(nv, dtype=bool)
    alive0[b0] = False
    ess0 = np.flatnonzero(alive0)
    parts.append(_part(0, v0[b0], v1[d0], b0, d0))
    parts.append(_part(0, v0[ess0], np.full(len(ess0), np.inf), ess0, np.full(len(ess0), -1)))

    parts.append(_part(1, v1[rows2], v2[cols2], rows2, cols2))
    killed_edge = np.zeros(ne, dtype=bool)
    killed_edge[rows2] = True
    ess1 = np.flatnonzero(positive_edge & ~killed_edge)
    parts.append(_part(1, v1[ess1], np.full(len(ess1), np.inf), ess1, np.full(len(ess1), -1)))

    parts.append(_part(2, v2[rows3], v3[cols3], rows3, cols3))
    ess2 = np.flatnonzero((r2.low < 0) & ~creators_sq)
    parts.append(_part(2, v2[ess2], np.full(len(ess2), np.inf), ess2, np.full(len(ess2), -1)))

    return PersistenceResult(c, _concat_diagrams(parts), {2: r2, 3: r3})


@dataclass(frozen=True, eq=False)
class RepresentativeCycle:
    dim: int
    birth: float
    death: float
    birth_cell: int
    death_cell: int
    cell_ids: np.ndarray
    grid: tuple[int, int, int]

    @property
    def cells(self) -> np.ndarray:
        """``(n, 4)`` array of ``[x, y, z, extent]``."""
        return decode_cells(self.cell_ids, self.grid)

    @property
    def persistence(self) -> float:
        return self.death - self.birth


def extract_cycles(
    result: PersistenceResult,
    p: int,
    select: np.ndarray | None = None,
    include_zero_persistence: bool = True,
) -> list[RepresentativeCycle]:
    """One cycle per finite dim-p pair: the reduced column of its death cell.

    ``select`` optionally restricts to a boolean mask over ``result.diagram``.
    """
    if p not in (1, 2):
        raise UnsupportedDimensionError(f"cycles are extracted for dims 1 and 2 only, got {p}")
    d = result.diagram
    mask = (d.dim == p) & ~d.essential
    if select is not None:
        mask &= np.asarray(select, dtype=bool)
    if not include_zero_persistence:
        mask &= ~d.zero_persistence
    reduced = result.reduced[p + 1]
    ids_p = result.complex.ids[p]
    out = []
    for i in np.flatnonzero(mask):
        rows = reduced.column(d.death_cell[i])
        out.append(RepresentativeCycle(p, float(d.birth[i]), float(d.death[i]), int(d.birth_cell[i]),
                                       int(d.death_cell[i]), ids_p[rows], result.complex.dims))
    return out


@dataclass(frozen=True, eq=False)
class BettiCurve:
    dim: int
    thresholds: np.ndarray
    counts: np.ndarray


def betti_curve(d: PersistenceDiagram, dim: int, thresholds) -> BettiCurve:
    t = np.asarray(thresholds, dtype=np.float64)
    if np.any(np.diff(t) < 0):
        raise ParameterError("thresholds must be sorted ascending")
    m = d.dim == dim
    b = d.birth[m][None, :]
    x = d.death[m][None, :]
    counts = np.sum((b <= t[:, None]) & (t[:, None] < x), axis=1).astype(np.int64)
    return BettiCurve(dim, t, counts)


def filter_by_persistence(
    d: PersistenceDiagram,
    dim: int,
    fraction: float | None = None,
    threshold: float | None = None,
    include_zero: bool = False,
) -> PersistenceDiagram:
    """Keep the most persistent finite pairs of one dimension; other dims pass through.

    ``fraction`` keeps the ``ceil(fraction * N)`` largest (ties: earlier birth,
    then lower birth-cell index); ``threshold`` keeps persistence >= threshold.
    Zero-persistence pairs are dropped before counting unless ``include_zero``.
    """
    if (fraction is None) == (threshold is None):
        raise ParameterError("give exactly one of fraction or threshold")
    cand = (d.dim == dim) & ~d.essential
    if not include_zero:
        cand &= ~d.zero_persistence
    idx = np.flatnonzero(cand)
    pers = d.persistence[idx]
    if fraction is not None:
        if not 0 < fraction <= 1:
            raise ParameterError(f"persistence fraction must lie in (0, 1], got {fraction}")
        k = math.ceil(round(fraction * len(idx), 9))
        order = np.lexsort((d.birth_cell[idx], d.birth[idx], -pers))
        chosen = idx[order[:k]]
    else:
        if threshold < 0:
            raise ParameterError("absolute persistence threshold must be >= 0")
        chosen = idx[pers >= threshold]
    keep = d.dim != dim
    keep[chosen] = True
    return d.select(keep)


# -- serialization --------------------------------------------------------------


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.9g}"


def diagram_to_csv(d: PersistenceDiagram) -> str:
    buf = io.StringIO()
    buf.write("dim,birth,death\n")
    for dim, b, x in zip(d.dim, d.birth, d.death):
        buf.write(f"{dim},{_fmt(b)},{_fmt(x)}\n")
    return buf.getvalue()


def write_diagram_csv(d: PersistenceDiagram, path) -> None:
    Path(path).write_text(diagram_to_csv(d))


def read_diagram_csv(path) -> PersistenceDiagram:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not {"dim", "birth", "death"} <= set(rows[0]):
        raise ParameterError(f"{path}: expected columns dim,birth,death")
    pts = [(int(r["dim"]), float(r["birth"]), float(r["death"])) for r in rows]
    n = len(pts)
    dims = np.array([p[0] for p in pts], dtype=np.int64)
    births = np.array([p[1] for p in pts], dtype=np.float64)
    deaths = np.array([p[2] for p in pts], dtype=np.float64)
    idx = np.arange(n)
    return PersistenceDiagram(dims, births, deaths, idx, np.where(np.isinf(deaths), -1, idx))


def cycles_to_json(cycles) -> str:
    doc = [
        {
            "dim": c.dim,
            "birth": float(f"{c.birth:.9g}"),
            "death": float(f"{c.death:.9g}"),
            "cells": c.cells.tolist(),
        }
        for c in cycles
    ]
    return json.dumps(doc, separators=(",", ":"))


def write_cycles_json(cycles, path) -> None:
    Path(path).write_text(cycles_to_json(cycles))
