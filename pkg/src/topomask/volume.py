"""Volume data model, preprocessing, binary morphology and distance transforms.

Arrays are indexed ``[x, y, z]``; flattening uses x-fastest (Fortran) order,
which is also the on-disk NRRD order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import EmptyForegroundError, EmptyMaskError, InvariantError, ParameterError, ShapeError

Spacing = tuple[float, float, float]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.flags.writeable:
        a = a.copy()
        a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Volume3D:
    """Dense scalar field on a voxel grid."""

    data: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ShapeError(f"volume must be 3D with positive dims, got shape {data.shape}")
        if data.dtype not in (np.float32, np.float64):
            data = data.astype(np.float64)
        if not np.all(np.isfinite(data)):
            raise ParameterError("volume values must be finite")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.data.shape)

    @property
    def values(self) -> np.ndarray:
        """Flat values in x-fastest order."""
        return self.data.ravel(order="F")

    @classmethod
    def from_values(cls, dims, values, spacing: Spacing = (1.0, 1.0, 1.0)) -> "Volume3D":
        values = np.asarray(values)
        n = int(np.prod(dims))
        if values.size != n:
            raise ShapeError(f"expected {n} values for dims {tuple(dims)}, got {values.size}")
        return cls(values.reshape(tuple(dims), order="F"), spacing)

    def __eq__(self, other):
        if not isinstance(other, Volume3D):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.data.dtype == other.data.dtype
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 3:
            raise ShapeError(f"mask must be 3D, got shape {bits.shape}")
        object.__setattr__(self, "bits", _frozen(bits))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.bits.shape)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    @classmethod
    def empty(cls, dims, spacing: Spacing = (1.0, 1.0, 1.0)) -> "BinaryMask":
        return cls(np.zeros(tuple(dims), dtype=bool), spacing)

    def __or__(self, other: "BinaryMask") -> "BinaryMask":
        _check_dims(self.dims, other.dims)
        return BinaryMask(self.bits | other.bits, self.spacing)

    def __and__(self, other: "BinaryMask") -> "BinaryMask":
        _check_dims(self.dims, other.dims)
        return BinaryMask(self.bits & other.bits, self.spacing)

    def issubset(self, other: "BinaryMask") -> bool:
        _check_dims(self.dims, other.dims)
        return not np.any(self.bits & ~other.bits)

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.bits, other.bits)


def _check_dims(a, b):
    if tuple(a) != tuple(b):
        raise ShapeError(f"dims mismatch: {tuple(a)} vs {tuple(b)}")


def invert(v: Volume3D) -> Volume3D:
    # 0 - x rather than -x so constant-zero volumes stay +0.0
    return Volume3D(0.0 - v.data, v.spacing)


# -- morphology ---------------------------------------------------------------


def structuring_element(radius: float, element: str = "euclidean_ball") -> np.ndarray:
    r = int(math.floor(radius))
    ax = np.arange(-r, r + 1)
    if element == "box":
        return np.ones((2 * r + 1,) * 3, dtype=bool)
    if element != "euclidean_ball":
        raise ParameterError(f"unknown structuring element {element!r}")
    x, y, z = np.meshgrid(ax, ax, ax, indexing="ij")
    return (x * x + y * y + z * z) <= radius * radius


def _dilate(bits, se):
    return ndimage.binary_dilation(bits, structure=se)


def _erode(bits, se):
    # voxels outside the grid count as background
    return ndimage.binary_erosion(bits, structure=se, border_value=0)


def morphology(m: BinaryMask, op: str, radius: float, element: str = "euclidean_ball") -> BinaryMask:
    """Binary dilate/erode/open/close with a ball or box of the given radius."""
    if radius < 0:
        raise ParameterError("radius must be >= 0")
    if op not in ("dilate", "erode", "open", "close"):
        raise ParameterError(f"unknown morphology op {op!r}")
    if radius < 1 or not m.bits.any():
        return m
    se = structuring_element(radius, element)
    bits = m.bits
    if op == "dilate":
        out = _dilate(bits, se)
    elif op == "erode":
        out = _erode(bits, se)
    elif op == "open":
        out = _dilate(_erode(bits, se), se)
    else:
        # pad so the dilation is not clipped at the grid edge; keeps m <= close(m)
        r = se.shape[0] // 2
        padded = np.pad(bits, r)
        out = _erode(_dilate(padded, se), se)[r:-r, r:-r, r:-r]
    return BinaryMask(out, m.spacing)


def distance_transform(m: BinaryMask, spacing: Spacing | None = None) -> Volume3D:
    """Exact Euclidean distance from every voxel to the nearest foreground voxel."""
    if not m.bits.any():
        raise EmptyMaskError("distance transform of an empty mask")
    spacing = m.spacing if spacing is None else tuple(float(s) for s in spacing)
    dist = ndimage.distance_transform_edt(~m.bits, sampling=spacing)
    return Volume3D(dist, spacing)


# -- preprocessing ------------------------------------------------------------


@dataclass(frozen=True)
class PreprocessConfig:
    foreground_margin: int = 2
    max_extent: int = 256
    target_cube: int = 256
    noise_open_radius: int = 1
    normalize: bool = True

    def __post_init__(self):
        if self.foreground_margin < 0:
            raise ParameterError("foreground_margin must be >= 0")
        if not 0 < self.max_extent <= self.target_cube:
            raise ParameterError("require 0 < max_extent <= target_cube")
        if self.noise_open_radius < 0:
            raise ParameterError("noise_open_radius must be >= 0")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class GridTransform:
    """Crop, rescale and pad steps that map a raw grid onto the preprocessed grid."""

    crop_lo: tuple[int, int, int]
    crop_hi: tuple[int, int, int]
    scaled_dims: tuple[int, int, int]
    pad_lo: tuple[int, int, int]
    out_dims: tuple[int, int, int]

    @property
    def cropped_dims(self) -> tuple[int, int, int]:
        return tuple(h - l for l, h in zip(self.crop_lo, self.crop_hi))

    def apply(self, a: np.ndarray, nearest: bool = False) -> np.ndarray:
        """Run an array through the same crop/resize/pad; ``nearest`` for label data."""
        sl = tuple(slice(l, h) for l, h in zip(self.crop_lo, self.crop_hi))
        a = np.asarray(a)[sl]
        if self.scaled_dims != self.cropped_dims:
            a = _resize(a, self.scaled_dims, order=0 if nearest else 1)
        pad = [(p, o - s - p) for p, s, o in zip(self.pad_lo, self.scaled_dims, self.out_dims)]
        return np.pad(a, pad, mode="constant", constant_values=0)


def _resize(a: np.ndarray, shape, order: int) -> np.ndarray:
    zoom = [n / o for n, o in zip(shape, a.shape)]
    dtype = a.dtype
    src = a.astype(np.float64) if order > 0 else a
    out = ndimage.zoom(src, zoom, order=order, mode="nearest", grid_mode=False)
    if out.shape != tuple(shape):
        raise InvariantError(f"resize produced {out.shape}, expected {tuple(shape)}")
    return out.astype(dtype) if order == 0 else out


def _minmax(a: np.ndarray) -> np.ndarray:
    lo, hi = float(a.min()), float(a.max())
    if hi == lo:
        return np.zeros(a.shape, dtype=np.float64)
    return (a.astype(np.float64) - lo) / (hi - lo)


def plan_preprocess(v: Volume3D, cfg: PreprocessConfig = PreprocessConfig()) -> GridTransform:
    norm = _minmax(v.data)
    fg = BinaryMask(norm > 0)
    fg = morphology(fg, "open", cfg.noise_open_radius, "box")
    if not fg.bits.any():
        raise EmptyForegroundError("no foreground voxels after noise removal")
    idx = np.nonzero(fg.bits)
    lo = tuple(max(int(i.min()) - cfg.foreground_margin, 0) for i in idx)
    hi = tuple(min(int(i.max()) + 1 + cfg.foreground_margin, n) for i, n in zip(idx, v.dims))
    cropped = tuple(h - l for l, h in zip(lo, hi))
    largest = max(cropped)
    if largest > cfg.max_extent:
        scale = cfg.max_extent / largest
        scaled = tuple(
            cfg.max_extent if n == largest else max(1, _round_half_up(n * scale)) for n in cropped
        )
    else:
        scaled = cropped
    if max(scaled) > cfg.target_cube:
        raise InvariantError("scaled extent exceeds target cube")
    out = (cfg.target_cube,) * 3
    pad_lo = tuple((cfg.target_cube - s) // 2 for s in scaled)
    return GridTransform(lo, hi, scaled, pad_lo, out)


def preprocess_with_transform(
    v: Volume3D, cfg: PreprocessConfig = PreprocessConfig()
) -> tuple[Volume3D, GridTransform]:
    t = plan_preprocess(v, cfg)
    src = _minmax(v.data) if cfg.normalize else v.data.astype(np.float64)
    out = t.apply(src)
    if cfg.normalize:
        out = _minmax(out)
    return Volume3D(out, v.spacing), t


def preprocess(v: Volume3D, cfg: PreprocessConfig = PreprocessConfig()) -> Volume3D:
    """Foreground crop with margin, downscale to ``max_extent``, centre-pad to a cube, normalise."""
    return preprocess_with_transform(v, cfg)[0]
