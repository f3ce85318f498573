"""Procedural breast phantoms and closed-form T1-weighted MR simulation.

The phantom is a dome of breast tissue resting on a chest-wall muscle slab,
with the anterior axis along +x. The grid edges cut through the breast
laterally and posteriorly; voxels beyond the dome are air. Tissue counts are
assigned by ranking smooth random fields, so the major-tissue composition
hits its target almost exactly.

Random numbers come from numpy's counter-based Philox generator keyed by a
SeedSequence; see ``RNG_ALGORITHM``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .volume import BinaryMask, Volume3D

RNG_ALGORITHM = "numpy.random.Philox(4x64-10) keyed by SeedSequence([seed, stream])"

TISSUES = ("fat", "skin", "glandular", "nipple", "muscle", "ligament", "tdlu", "duct", "artery", "vein")
FAT, SKIN, GLANDULAR, NIPPLE, MUSCLE, LIGAMENT, TDLU, DUCT, ARTERY, VEIN = range(10)
AIR = 10
FIBROGLANDULAR = (GLANDULAR, TDLU, DUCT, ARTERY, VEIN)

PROFILES = ("dense", "hetero", "scattered", "fatty")

# target tissue percentages (of breast volume) per density profile
COMPOSITION = {
    "dense":     (28.59, 4.34, 42.19, 0.11, 22.00, 1.35, 0.31, 0.22, 0.38, 0.49),
    "fatty":     (79.82, 3.09, 6.43, 0.02, 8.71, 1.68, 0.01, 0.07, 0.07, 0.09),
    "hetero":    (49.97, 3.89, 28.45, 0.07, 15.18, 1.51, 0.13, 0.12, 0.30, 0.39),
    "scattered": (70.44, 3.26, 12.50, 0.03, 11.67, 1.61, 0.03, 0.06, 0.17, 0.21),
}


@dataclass(frozen=True)
class TissueRelaxation:
    t1_mean: float
    t1_std: float
    t2_mean: float
    t2_std: float


@dataclass(frozen=True)
class TissueTable:
    rows: dict

    def __post_init__(self):
        for name, r in self.rows.items():
            if r.t1_mean <= 0 or r.t2_mean <= 0:
                raise ParameterError(f"{name}: relaxation means must be positive")
            if r.t1_std < 0 or r.t2_std < 0:
                raise ParameterError(f"{name}: relaxation stds must be non-negative")

    def __getitem__(self, tissue: int) -> TissueRelaxation:
        return self.rows[TISSUES[tissue]]

    def with_zero_std(self) -> "TissueTable":
        return TissueTable({k: TissueRelaxation(r.t1_mean, 0.0, r.t2_mean, 0.0) for k, r in self.rows.items()})


# T1/T2 mean and standard deviation in ms
BREAST_TISSUES = TissueTable({
    "fat":       TissueRelaxation(366.78, 7.75, 52.96, 1.54),
    "skin":      TissueRelaxation(887.00, 92.00, 22.30, 7.00),
    "glandular": TissueRelaxation(1444.83, 92.70, 54.36, 9.35),
    "nipple":    TissueRelaxation(796.00, 21.00, 63.00, 4.00),
    "muscle":    TissueRelaxation(1232.90, 255.00, 37.20, 9.80),
    "ligament":  TissueRelaxation(400.00, 10.00, 40.00, 2.00),
    "tdlu":      TissueRelaxation(1444.83, 92.70, 54.36, 9.35),
    "duct":      TissueRelaxation(796.00, 21.00, 63.00, 4.00),
    "artery":    TissueRelaxation(1984.40, 146.70, 275.00, 0.00),
    "vein":      TissueRelaxation(1984.40, 146.70, 275.00, 0.00),
})


@dataclass(frozen=True)
class MRIParams:
    spin_density: float = 1.0
    flip_angle: float = 6.0  # degrees
    tr: float = 50.0  # ms
    te: float = 10.0  # ms

    def __post_init__(self):
        if not 0 < self.flip_angle < 90:
            raise ParameterError("flip angle must lie in (0, 90) degrees")
        if self.tr <= 0:
            raise ParameterError("TR must be positive")
        if self.te < 0:
            raise ParameterError("TE must be non-negative")


@dataclass(frozen=True)
class PhantomConfig:
    """Morphology knobs, in voxels unless noted."""

    gland_scale: float = 2.0  # smoothing sigma of the glandular field
    gland_envelope: float = 1.0  # pull of glandular tissue towards the breast centre
    fat_layer: float = 2.0  # fat between glandular tissue and muscle / skin
    lobule_radius: tuple[float, float] = (3.0, 6.0)
    ligament_thickness: float = 1.6
    duct_trees: int = 6
    vessel_trees: int = 4
    tube_radius: float = 0.75
    air_gap: int = 3  # air layers above the dome apex
    dome_base: float = 0.55  # dome height at the lateral grid edges, fraction of nz


@dataclass(frozen=True, eq=False)
class PhantomVolume:
    labels: np.ndarray
    profile: str | None = None
    seed: int | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.uint8)
        if labels.ndim != 3:
            raise ParameterError("phantom labels must be 3D")
        if labels.max(initial=0) > AIR:
            raise ParameterError("phantom labels out of range")
        object.__setattr__(self, "labels", labels)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.labels.shape)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def _take_top(score: np.ndarray, candidates: np.ndarray, k: int) -> np.ndarray:
    """Flat indices of the ``k`` candidates with the largest score (stable on ties)."""
    idx = np.flatnonzero(candidates.ravel())
    k = max(0, min(k, idx.size))
    if k == 0:
        return idx[:0]
    order = np.argsort(-score.ravel()[idx], kind="stable")
    return idx[order[:k]]


def _smooth_field(rng, shape, sigma):
    f = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="reflect")
    return f / (f.std() + 1e-12)


def _grow_tree(rng, labels, start, direction, budget, radius, tissue, allowed, tips=None):
    """Random-walk branching tube; writes ``tissue`` into ``allowed`` voxels until ``budget`` is spent."""
    shape = np.array(labels.shape)
    # precomputed ball offsets for the tube cross-section
    r = int(math.ceil(radius))
    ax = np.arange(-r, r + 1)
    off = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1).reshape(-1, 3)
    off = off[(off ** 2).sum(1) <= radius * radius + 1e-9]
    stack = [(np.asarray(start, float), np.asarray(direction, float), 0)]
    written = 0
    while stack and written < budget:
        pos, d, depth = stack.pop()
        length = int(rng.integers(6, 14))
        for _ in range(length):
            d = d + 0.35 * rng.standard_normal(3)
            d /= np.linalg.norm(d) + 1e-12
            pos = pos + d
            vox = np.rint(pos).astype(int) + off
            vox = vox[np.all((vox >= 0) & (vox < shape), axis=1)]
            if vox.size == 0:
                break
            sel = allowed[vox[:, 0], vox[:, 1], vox[:, 2]] & (labels[vox[:, 0], vox[:, 1], vox[:, 2]] != tissue)
            vox = vox[sel]
            labels[vox[:, 0], vox[:, 1], vox[:, 2]] = tissue
            written += len(vox)
            if written >= budget:
                break
        if depth < 4:
            for _ in range(2):
                stack.append((pos.copy(), d + 0.6 * rng.standard_normal(3), depth + 1))
        elif tips is not None:
            tips.append(np.rint(pos).astype(int))
    return written


def _place_ligaments(rng, labels, allowed, budget, config):
    shape = labels.shape
    fat = np.flatnonzero(allowed.ravel())
    written = 0
    attempts = 0
    while written < budget and fat.size and attempts < 10000:
        attempts += 1
        c = np.array(np.unravel_index(fat[rng.integers(fat.size)], shape), dtype=float)
        rad = rng.uniform(*config.lobule_radius)
        ext = int(math.ceil(rad + config.ligament_thickness))
        lo = np.maximum(c.astype(int) - ext, 0)
        hi = np.minimum(c.astype(int) + ext + 1, shape)
        sub = tuple(slice(a, b) for a, b in zip(lo, hi))
        gx, gy, gz = np.ogrid[sub]
        r = np.sqrt((gx - c[0]) ** 2 + (gy - c[1]) ** 2 + (gz - c[2]) ** 2)
        shell = np.abs(r - rad) <= config.ligament_thickness / 2
        block = labels[sub]
        sel = shell & allowed[sub] & (block == FAT)
        n = int(sel.sum())
        if n == 0:
            continue
        if written + n > budget:
            # trim the last shell so the count lands on the target
            keep = np.flatnonzero(sel.ravel())[: budget - written]
            sel = np.zeros(sel.size, dtype=bool)
            sel[keep] = True
            sel = sel.reshape(block.shape)
            n = int(sel.sum())
        block[sel] = LIGAMENT
        written += n
    return written


def generate_phantom(profile: str, dims=(64, 64, 64), seed: int = 0, config: PhantomConfig = PhantomConfig()) -> PhantomVolume:
    if profile not in COMPOSITION:
        raise ParameterError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    if isinstance(dims, int):
        dims = (dims,) * 3
    dims = tuple(int(n) for n in dims)
    if min(dims) < 32:
        raise ParameterError("phantom dims must be at least 32 per axis")
    labels = _build_labels(profile, dims[::-1], seed, config)
    # the body is built with the anterior axis last, then turned so it runs along x
    return PhantomVolume(np.ascontiguousarray(labels.transpose(2, 1, 0)), profile, int(seed))


def _build_labels(profile, dims, seed, config) -> np.ndarray:
    nx, ny, nz = dims
    target = np.array(COMPOSITION[profile]) / 100.0
    rng = _rng(seed, PROFILES.index(profile))

    x = np.arange(nx)[:, None, None]
    y = np.arange(ny)[None, :, None]
    z = np.arange(nz)[None, None, :]
    r2 = ((x - (nx - 1) / 2) / (nx / 2)) ** 2 + ((y - (ny - 1) / 2) / (ny / 2)) ** 2
    top = nz - 1 - config.air_gap
    base = config.dome_base * nz
    height = top - (top - base) * r2
    breast = np.broadcast_to(z <= height, dims).copy()
    labels = np.full(dims, AIR, dtype=np.uint8)
    labels[breast] = FAT
    n = int(breast.sum())
    counts = np.rint(target * n).astype(int)

    # chest-wall muscle: the most posterior voxels, with a gently undulating front
    wave = _smooth_field(rng, dims, 6.0)
    idx = _take_top(-(np.broadcast_to(z, dims) + 0.8 * wave), breast, counts[MUSCLE])
    labels.ravel()[idx] = MUSCLE

    # nipple at the dome apex, then skin as the layer closest to air
    free = labels == FAT
    apex = np.array([(nx - 1) / 2, (ny - 1) / 2, top])
    d_apex = (x - apex[0]) ** 2 + (y - apex[1]) ** 2 + (z - apex[2]) ** 2
    idx = _take_top(-np.broadcast_to(d_apex, dims).astype(float), free, counts[NIPPLE])
    labels.ravel()[idx] = NIPPLE
    d_air = ndimage.distance_transform_edt(labels != AIR)
    free = labels == FAT
    idx = _take_top(-d_air + 1e-3 * rng.random(dims), free, counts[SKIN])
    labels.ravel()[idx] = SKIN

    # glandular clusters: top-ranked voxels of a smooth field biased to the centre,
    # kept off the chest wall and skin by retromammary / subcutaneous fat
    interior = labels == FAT
    depth = np.clip(d_air / max(d_air[interior].max(), 1.0), 0, 1)
    d_wall = ndimage.distance_transform_edt((labels != MUSCLE) & (labels != SKIN) & (labels != AIR))
    envelope = -1.5 * r2 + depth - 20.0 * (d_wall <= config.fat_layer)
    score = _smooth_field(rng, dims, config.gland_scale) + config.gland_envelope * envelope
    idx = _take_top(score, interior, counts[GLANDULAR])
    labels.ravel()[idx] = GLANDULAR

    # Cooper's ligaments: thin shells around fat lobules, written onto fat only
    d_gland = ndimage.distance_transform_edt(labels != GLANDULAR)
    lobule_fat = (labels == FAT) & (d_wall > config.fat_layer) & (d_gland >= 2)
    _place_ligaments(rng, labels, lobule_fat, counts[LIGAMENT], config)

    # ducts radiate back from the nipple; TDLUs sit at their tips
    inside = (labels != AIR) & (labels != SKIN) & (labels != MUSCLE) & (labels != NIPPLE)
    tips = []
    for t in range(config.duct_trees):
        theta = 2 * math.pi * t / config.duct_trees
        d0 = np.array([0.6 * math.cos(theta), 0.6 * math.sin(theta), -1.0])
        _grow_tree(rng, labels, apex - [0, 0, 2], d0, counts[DUCT] / config.duct_trees,
                   config.tube_radius, DUCT, inside, tips)
    tdlu_left = counts[TDLU]
    for tip in tips:
        if tdlu_left <= 0:
            break
        ball = ((x - tip[0]) ** 2 + (y - tip[1]) ** 2 + (z - tip[2]) ** 2) <= 2
        sel = np.broadcast_to(ball, dims) & inside & (labels != DUCT)
        sel_idx = np.flatnonzero(sel.ravel())[:tdlu_left]
        labels.ravel()[sel_idx] = TDLU
        tdlu_left -= len(sel_idx)

    # vessels enter from the chest wall and run anteriorly
    z_muscle = max(1, int(round(counts[MUSCLE] / (nx * ny))))
    for tissue in (ARTERY, VEIN):
        for t in range(config.vessel_trees):
            p0 = np.array([rng.uniform(0.2, 0.8) * nx, rng.uniform(0.2, 0.8) * ny, z_muscle + 1])
            _grow_tree(rng, labels, p0, np.array([0.0, 0.0, 1.0]), counts[tissue] / config.vessel_trees,
                       config.tube_radius, tissue, inside & (labels != DUCT) & (labels != TDLU))
    return labels


def composition_stats(p: PhantomVolume) -> dict[str, float]:
    """Fraction of breast (non-air) voxels per tissue."""
    counts = np.bincount(p.labels.ravel(), minlength=AIR + 1)[:AIR].astype(np.float64)
    total = counts.sum()
    if total == 0:
        return {name: 0.0 for name in TISSUES}
    fr = counts / total
    return {name: float(f) for name, f in zip(TISSUES, fr)}


def _truncated_normal(rng, mean, std):
    if std == 0:
        return float(mean)
    while True:
        v = rng.normal(mean, std)
        if abs(v - mean) <= 3 * std:
            return float(v)


def sample_relaxation(table: TissueTable = BREAST_TISSUES, seed: int = 0) -> dict[int, tuple[float, float]]:
    """One (T1, T2) draw per tissue, Gaussian truncated at 3 sigma, floored at 1 ms."""
    rng = _rng(seed, 1000)
    out = {}
    for label, name in enumerate(TISSUES):
        r = table.rows[name]
        t1 = max(1.0, _truncated_normal(rng, r.t1_mean, r.t1_std))
        t2 = max(1.0, _truncated_normal(rng, r.t2_mean, r.t2_std))
        out[label] = (t1, t2)
    return out


def spgr_signal(t1, t2, spin_density=1.0, flip_angle=6.0, tr=50.0, te=10.0):
    """Spoiled gradient-echo steady-state signal; angles in degrees, times in ms."""
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    if np.any(t1 <= 0) or np.any(t2 <= 0):
        raise ParameterError("T1 and T2 must be positive")
    a = math.radians(flip_angle)
    e1 = np.exp(-tr / t1)
    return spin_density * math.sin(a) * (1 - e1) / (1 - math.cos(a) * e1) * np.exp(-te / t2)


def simulate_mri(p: PhantomVolume, relax: dict, params: MRIParams = MRIParams()) -> Volume3D:
    lut = np.zeros(AIR + 1, dtype=np.float64)
    present = np.unique(p.labels)
    for label in present:
        if label == AIR:
            continue
        if int(label) not in relax:
            raise ParameterError(f"no relaxation values for tissue {TISSUES[label]!r}")
        t1, t2 = relax[int(label)]
        lut[label] = spgr_signal(t1, t2, params.spin_density, params.flip_angle, params.tr, params.te)
    return Volume3D(lut[p.labels])


def tissue_mask(p: PhantomVolume) -> BinaryMask:
    """Fibroglandular tissue: glandular, TDLU, duct, artery and vein voxels."""
    return BinaryMask(np.isin(p.labels, FIBROGLANDULAR))
