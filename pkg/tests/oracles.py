"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package's cubical or persistence code: cells are
enumerated as ``(x, y, z, extent)`` tuples, boundaries are written out by hand,
and ranks are computed over GF(2) with Python integers as bit rows.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def cells(dims):
    """Every cell of the grid as ``(x, y, z, extent)`` with its dimension."""
    nx, ny, nz = dims
    out = []
    for e in range(8):
        ex, ey, ez = e & 1, (e >> 1) & 1, (e >> 2) & 1
        for z in range(nz - ez):
            for y in range(ny - ey):
                for x in range(nx - ex):
                    out.append((x, y, z, e))
    return out


def dim_of(cell) -> int:
    return bin(cell[3]).count("1")


def vertices(cell):
    x, y, z, e = cell
    rx = (0, 1) if e & 1 else (0,)
    ry = (0, 1) if e & 2 else (0,)
    rz = (0, 1) if e & 4 else (0,)
    return [(x + a, y + b, z + c) for a in rx for b in ry for c in rz]


def cell_value(cell, data) -> float:
    return max(float(data[v]) for v in vertices(cell))


def faces(cell):
    """Codimension-one faces: drop one extent bit, at the anchor and one step along it."""
    x, y, z, e = cell
    out = []
    for b, step in ((1, (1, 0, 0)), (2, (0, 1, 0)), (4, (0, 0, 1))):
        if e & b:
            out.append((x, y, z, e ^ b))
            out.append((x + step[0], y + step[1], z + step[2], e ^ b))
    return out


def boundary_mod2(chain):
    """Mod-2 boundary of a collection of cells, as a set."""
    acc = set()
    for c in chain:
        for f in faces(c):
            acc ^= {f}
    return acc


def gf2_rank(rows) -> int:
    """Rank of a list of integer bit-rows over GF(2)."""
    pivots = {}
    rank = 0
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top in pivots:
                r ^= pivots[top]
            else:
                pivots[top] = r
                rank += 1
                break
    return rank


class BruteComplex:
    """All cells with their V-construction values, for small grids."""

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)
        self.dims = self.data.shape
        self.cells = cells(self.dims)
        self.value = {c: cell_value(c, self.data) for c in self.cells}
        self.by_dim = {p: [c for c in self.cells if dim_of(c) == p] for p in range(4)}

    def thresholds(self):
        return sorted(set(self.value.values()))

    def sublevel(self, p, t):
        return [c for c in self.by_dim[p] if self.value[c] <= t]

    def boundary_rank(self, p, t) -> int:
        """Rank of the boundary map from p-cells to (p-1)-cells within the sublevel set at t."""
        if p <= 0 or p > 3:
            return 0
        lower = {c: i for i, c in enumerate(self.sublevel(p - 1, t))}
        rows = []
        for c in self.sublevel(p, t):
            bits = 0
            for f in faces(c):
                bits ^= 1 << lower[f]
            rows.append(bits)
        return gf2_rank(rows)

    def betti(self, t):
        n = [len(self.sublevel(p, t)) for p in range(4)]
        r = [self.boundary_rank(p, t) for p in range(5)]
        return tuple(n[p] - r[p] - r[p + 1] for p in range(4))

    def euler(self, t) -> int:
        return sum((-1) ** p * len(self.sublevel(p, t)) for p in range(4))


def brute_edt(bits, spacing=(1.0, 1.0, 1.0)):
    """Distance from every voxel to the nearest True voxel, by exhaustive search."""
    bits = np.asarray(bits, dtype=bool)
    fg = np.argwhere(bits).astype(np.float64) * np.asarray(spacing)
    out = np.zeros(bits.shape)
    for idx in itertools.product(*(range(n) for n in bits.shape)):
        p = np.asarray(idx, dtype=np.float64) * np.asarray(spacing)
        out[idx] = np.sqrt(((fg - p) ** 2).sum(axis=1)).min()
    return out


def ball_lattice_count(r: float) -> int:
    k = int(math.floor(r))
    return sum(1 for x in range(-k, k + 1) for y in range(-k, k + 1) for z in range(-k, k + 1)
               if x * x + y * y + z * z <= r * r)


def sliced_wasserstein_bruteforce(d1, d2, n_slices):
    """Per-slice optimal matching found by trying every permutation (tiny diagrams only)."""
    p1 = np.asarray(d1, dtype=float).reshape(-1, 2)
    p2 = np.asarray(d2, dtype=float).reshape(-1, 2)
    diag = lambda pts: np.column_stack([(pts[:, 0] + pts[:, 1]) / 2] * 2)
    u = np.vstack([p1, diag(p2)])
    v = np.vstack([p2, diag(p1)])
    total = 0.0
    for i in range(n_slices):
        th = math.pi * i / n_slices
        w = np.array([math.cos(th), math.sin(th)])
        a, b = u @ w, v @ w
        best = min(sum(abs(a[j] - b[perm[j]]) for j in range(len(a)))
                   for perm in itertools.permutations(range(len(b))))
        total += best
    return total / n_slices / 2
