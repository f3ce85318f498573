"""Mask-quality metrics, birth-time statistics and a sliced Wasserstein diagram distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError, UndefinedMetricError
from .volume import BinaryMask, distance_transform


def _pair(a: BinaryMask, b: BinaryMask):
    if a.dims != b.dims:
        raise ShapeError(f"mask dims differ: {a.dims} vs {b.dims}")
    return a.bits, b.bits


def topo_precision(topo: BinaryMask, tissue: BinaryMask) -> float:
    """Fraction of topological-mask voxels that are tissue."""
    t, s = _pair(topo, tissue)
    n = np.count_nonzero(t)
    if n == 0:
        raise UndefinedMetricError("precision undefined for an empty topological mask")
    return np.count_nonzero(t & s) / n


def topo_recall(topo: BinaryMask, tissue: BinaryMask) -> float:
    """Fraction of tissue voxels covered by the topological mask."""
    t, s = _pair(topo, tissue)
    n = np.count_nonzero(s)
    if n == 0:
        raise UndefinedMetricError("recall undefined for an empty tissue mask")
    return np.count_nonzero(t & s) / n


def mean_surface_distance(src: BinaryMask, dst: BinaryMask) -> float:
    """Mean distance from each ``src`` voxel to its nearest ``dst`` voxel (asymmetric)."""
    a, b = _pair(src, dst)
    if not a.any() or not b.any():
        raise UndefinedMetricError("distance undefined for an empty mask")
    dist = distance_transform(dst).data
    return float(dist[a].mean())


@dataclass(frozen=True)
class MaskMetrics:
    precision: float
    recall: float
    dist_t2p: float  # tissue -> topological mask
    dist_p2t: float  # topological mask -> tissue


def mask_metrics(topo: BinaryMask, tissue: BinaryMask) -> MaskMetrics:
    return MaskMetrics(
        topo_precision(topo, tissue),
        topo_recall(topo, tissue),
        mean_surface_distance(tissue, topo),
        mean_surface_distance(topo, tissue),
    )


# -- birth-time statistics -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepCDF:
    """Right-continuous empirical CDF."""

    values: np.ndarray
    fractions: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        k = np.searchsorted(self.values, t, side="right")
        return np.where(k == 0, 0.0, self.fractions[np.maximum(k - 1, 0)])


def birth_time_cdf(births) -> StepCDF:
    b = np.sort(np.asarray(births, dtype=np.float64))
    if b.size == 0:
        raise ParameterError("CDF of an empty sample")
    values, counts = np.unique(b, return_counts=True)
    return StepCDF(values, np.cumsum(counts) / b.size)


def kolmogorov_sf(x: float, tol: float = 1e-12) -> float:
    """Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^(k-1) exp(-2 k^2 x^2)."""
    if x <= 0:
        return 1.0
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        if term < tol:
            break
        total += term if k % 2 else -term
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ParameterError("KS test needs two nonempty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a, b) -> tuple[float, float]:
    """``(D, p)`` with the asymptotic p-value."""
    d = ks_statistic(a, b)
    m, n = len(a), len(b)
    return d, kolmogorov_sf(math.sqrt(m * n / (m + n)) * d)


# -- sliced Wasserstein ---------------------------------------------------------------


def _finite_points(d) -> np.ndarray:
    pts = np.asarray(d, dtype=np.float64).reshape(-1, 2)
    return pts[np.all(np.isfinite(pts), axis=1)]


def sliced_wasserstein_distance(d1, d2, n_slices: int = 50) -> float:
    """Sliced Wasserstein distance between two diagrams given as ``(n, 2)`` point arrays.

    Each diagram is augmented with the diagonal projections of the other's
    points; directions are evenly spaced on [0, pi). Essential points are dropped.
    """
    if n_slices < 1:
        raise ParameterError("n_slices must be >= 1")
    p1, p2 = _finite_points(d1), _finite_points(d2)
    if len(p1) == 0 and len(p2) == 0:
        return 0.0
    diag1 = np.repeat(p1.mean(axis=1, keepdims=True), 2, axis=1)
    diag2 = np.repeat(p2.mean(axis=1, keepdims=True), 2, axis=1)
    u = np.concatenate([p1, diag2])
    v = np.concatenate([p2, diag1])
    theta = np.pi * np.arange(n_slices) / n_slices
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=0)
    pu = np.sort(u @ dirs, axis=0)
    pv = np.sort(v @ dirs, axis=0)
    costs = np.abs(pu - pv).sum(axis=0)
    return float(costs.mean() / 2.0)
