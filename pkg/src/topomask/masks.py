"""Topological masks: rasterised representative cycles of the most persistent pairs."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ParameterError, ShapeError
from .persistence import PersistenceResult, extract_cycles, filter_by_persistence
from .volume import BinaryMask, Volume3D, morphology

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaskConfig:
    fraction: float | None = 0.3
    threshold: float | None = None
    dims: tuple[int, ...] = (1, 2)
    dilation_radius: float = 0
    soften: bool = True
    include_zero_persistence: bool = False

    def __post_init__(self):
        if (self.fraction is None) == (self.threshold is None):
            raise ParameterError("MaskConfig needs exactly one of fraction or threshold")
        if self.fraction is not None and not 0 < self.fraction <= 1:
            raise ParameterError(f"persistence fraction must lie in (0, 1], got {self.fraction}")
        if self.threshold is not None and self.threshold < 0:
            raise ParameterError("persistence threshold must be >= 0")
        if self.dilation_radius < 0:
            raise ParameterError("dilation_radius must be >= 0")
        if not set(self.dims) <= {1, 2}:
            raise ParameterError(f"mask dims must be a subset of {{1, 2}}, got {self.dims}")
        object.__setattr__(self, "dims", tuple(sorted(set(self.dims))))


@dataclass(frozen=True, eq=False)
class TopoMask:
    dim: int
    binary: BinaryMask
    soft: Volume3D | None = None
    n_pairs: int = 0


@dataclass(frozen=True, eq=False)
class TopoMaskResult:
    dim1: TopoMask
    dim2: TopoMask
    cycles: dict
    warning: str | None = None

    def __getitem__(self, dim: int) -> TopoMask:
        return {1: self.dim1, 2: self.dim2}[dim]

    @property
    def union(self) -> BinaryMask:
        return self.dim1.binary | self.dim2.binary


def rasterize_cycles(cycles, dims) -> BinaryMask:
    """Union of every vertex voxel of every cell in the cycles."""
    dims = tuple(int(n) for n in dims)
    nx, ny, nz = dims
    flat = np.zeros(nx * ny * nz, dtype=bool)
    if cycles:
        ids = np.concatenate([np.asarray(c.cell_ids, dtype=np.int64) for c in cycles])
        lin, ext = ids >> 3, ids & 7
        x = lin % nx
        y = (lin // nx) % ny
        z = lin // (nx * ny)
        ex, ey, ez = ext & 1, (ext >> 1) & 1, (ext >> 2) & 1
        if np.any((ids < 0) | (x + ex >= nx) | (y + ey >= ny) | (z + ez >= nz)):
            raise GeometryError("cycle cell lies outside the grid")
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    sel = (ex >= dx) & (ey >= dy) & (ez >= dz)
                    flat[lin[sel] + dx + nx * (dy + ny * dz)] = True
    return BinaryMask(flat.reshape(dims, order="F"))


def soften_mask(binary: BinaryMask, v_original: Volume3D) -> Volume3D:
    """Original intensities on the mask, zero elsewhere."""
    if binary.dims != v_original.dims:
        raise ShapeError(f"mask dims {binary.dims} do not match volume dims {v_original.dims}")
    return Volume3D(np.where(binary.bits, v_original.data, 0).astype(v_original.data.dtype), v_original.spacing)


def generate_topo_masks(
    v_original: Volume3D, result: PersistenceResult, cfg: MaskConfig = MaskConfig()
) -> TopoMaskResult:
    """Per-dimension masks from the persistence of ``invert(preprocess(image))``.

    Intensities for the soft masks come from ``v_original`` (the preprocessed,
    non-inverted image).
    """
    dims = result.complex.dims
    if v_original.dims != dims:
        raise ShapeError(f"volume dims {v_original.dims} do not match complex dims {dims}")
    masks, cycles = {}, {}
    for p in (1, 2):
        if p not in cfg.dims:
            masks[p] = TopoMask(p, BinaryMask.empty(dims, v_original.spacing),
                                Volume3D(np.zeros(dims), v_original.spacing) if cfg.soften else None)
            cycles[p] = []
            continue
        kept = filter_by_persistence(
            result.diagram, p, fraction=cfg.fraction, threshold=cfg.threshold,
            include_zero=cfg.include_zero_persistence,
        )
        # map the kept pairs back onto rows of the full diagram via death cells
        full = result.diagram
        sel = (full.dim == p) & np.isin(full.death_cell, kept.death_cell[kept.dim == p])
        cyc = extract_cycles(result, p, select=sel, include_zero_persistence=cfg.include_zero_persistence)
        binary = rasterize_cycles(cyc, dims)
        binary = BinaryMask(binary.bits, v_original.spacing)
        if cfg.dilation_radius > 0:
            binary = morphology(binary, "dilate", cfg.dilation_radius, "euclidean_ball")
        soft = soften_mask(binary, v_original) if cfg.soften else None
        masks[p] = TopoMask(p, binary, soft, len(cyc))
        cycles[p] = cyc
    warning = None
    if not any(len(cycles[p]) for p in cfg.dims):
        warning = "no persistent dim-1/2 pairs; topological masks are empty"
        log.warning(warning)
    return TopoMaskResult(masks[1], masks[2], cycles, warning)
