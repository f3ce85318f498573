"""End-to-end pipelines: mask extraction from a volume, and phantom validation."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nrrd
from .cubical import build_complex
from .errors import ConfigError, TopomaskError, UndefinedMetricError
from .masks import MaskConfig, TopoMaskResult, generate_topo_masks
from .metrics import mask_metrics
from .persistence import PersistenceResult, compute_diagram, cycles_to_json, diagram_to_csv
from .phantom import (BREAST_TISSUES, PROFILES, RNG_ALGORITHM, MRIParams, PhantomConfig, generate_phantom,
                      sample_relaxation, simulate_mri, tissue_mask)
from .volume import BinaryMask, GridTransform, PreprocessConfig, Volume3D, invert, preprocess_with_transform

log = logging.getLogger(__name__)


class StageError(TopomaskError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


class _Stages:
    """Times each stage and tags failures with the stage name."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            out = fn(*args, **kwargs)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        self.timings[name] = time.perf_counter() - t0
        log.info("stage %-12s %.3fs", name, self.timings[name])
        return out


@dataclass(frozen=True, eq=False)
class Extraction:
    preprocessed: Volume3D
    transform: GridTransform
    persistence: PersistenceResult
    masks: TopoMaskResult
    timings: dict


def _identity(v: Volume3D):
    d = v.dims
    return v, GridTransform((0, 0, 0), d, d, (0, 0, 0), d)


def extract(volume: Volume3D, pre_cfg: PreprocessConfig | None, mask_cfg: MaskConfig,
            do_invert: bool = True) -> Extraction:
    """preprocess -> invert -> complex -> diagram -> cycles -> masks, in memory.

    ``pre_cfg=None`` skips preprocessing entirely.
    """
    st = _Stages()
    if pre_cfg is None:
        pre, transform = st.run("preprocess", _identity, volume)
    else:
        pre, transform = st.run("preprocess", preprocess_with_transform, volume, pre_cfg)
    field_ = st.run("invert", invert, pre) if do_invert else pre
    cplx = st.run("complex", build_complex, field_)
    res = st.run("persistence", compute_diagram, cplx)
    masks = st.run("masks", generate_topo_masks, pre, res, mask_cfg)
    d = res.diagram
    log.info("cells per dim %s", cplx.counts)
    for p in range(3):
        m = d.dim == p
        log.info("dim %d: %d pairs (%d zero-persistence, %d essential)", p, m.sum(),
                 (m & d.zero_persistence).sum(), (m & d.essential).sum())
    for p in (1, 2):
        log.info("dim %d: %d pairs retained for the mask", p, masks[p].n_pairs)
    return Extraction(pre, transform, res, masks, st.timings)


# -- configs ----------------------------------------------------------------------


def _build(cls, raw, section):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(section, f"config section {section!r} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in names:
            raise ConfigError(f"{section}.{key}", f"unknown config field {section}.{key}")
    kwargs = dict(raw)
    if "dims" in kwargs and cls is MaskConfig:
        kwargs["dims"] = tuple(kwargs["dims"])
    try:
        return cls(**kwargs)
    except TopomaskError as exc:
        raise ConfigError(section, f"invalid {section} config: {exc}") from exc


@dataclass(frozen=True)
class ExtractConfig:
    input: str
    out: str
    preprocess: PreprocessConfig | None = PreprocessConfig()  # None: use the volume as-is
    mask: MaskConfig = MaskConfig()
    invert: bool = True

    @classmethod
    def from_dict(cls, raw: dict) -> "ExtractConfig":
        for key in ("input", "out"):
            if key not in raw:
                raise ConfigError(key)
        unknown = set(raw) - {"input", "out", "preprocess", "mask", "invert"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], f"unknown config field {sorted(unknown)[0]!r}")
        pre = None if raw.get("preprocess") is False else _build(PreprocessConfig, raw.get("preprocess"), "preprocess")
        return cls(str(raw["input"]), str(raw["out"]), pre,
                   _build(MaskConfig, raw.get("mask"), "mask"), bool(raw.get("invert", True)))


@dataclass(frozen=True)
class ValidateConfig:
    """Phantom validation run.

    ``invert`` defaults to False: under the default T1-weighted parameters the
    simulated fibroglandular tissue is darker than fat, so it already sits in
    the low sublevel sets without inversion.
    """

    profiles: tuple[str, ...]
    seeds: tuple[int, ...]
    dims: int = 64
    preprocess: PreprocessConfig | None = None
    mask: MaskConfig = MaskConfig()
    mri: MRIParams = MRIParams()
    phantom: PhantomConfig = PhantomConfig()
    invert: bool = False

    @property
    def preprocess_config(self) -> PreprocessConfig:
        if self.preprocess is not None:
            return self.preprocess
        return PreprocessConfig(max_extent=self.dims, target_cube=self.dims)

    @classmethod
    def from_dict(cls, raw: dict) -> "ValidateConfig":
        if not isinstance(raw, dict):
            raise ConfigError("root", "config must be a JSON object")
        allowed = {"profiles", "seeds", "dims", "preprocess", "mask", "mri", "phantom", "invert"}
        for key in ("profiles", "seeds"):
            if key not in raw:
                raise ConfigError(key)
        for key in raw:
            if key not in allowed:
                raise ConfigError(key, f"unknown config field {key!r}")
        profiles = tuple(raw["profiles"])
        if not profiles or not set(profiles) <= set(PROFILES):
            raise ConfigError("profiles", f"profiles must be a nonempty subset of {PROFILES}")
        seeds = tuple(int(s) for s in raw["seeds"])
        if not seeds:
            raise ConfigError("seeds", "seeds must be nonempty")
        dims = int(raw.get("dims", 64))
        pre = _build(PreprocessConfig, raw["preprocess"], "preprocess") if "preprocess" in raw else None
        return cls(profiles, seeds, dims, pre, _build(MaskConfig, raw.get("mask"), "mask"),
                   _build(MRIParams, raw.get("mri"), "mri"), _build(PhantomConfig, raw.get("phantom"), "phantom"),
                   bool(raw.get("invert", False)))


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("path", f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("json", f"config {path} is not valid JSON: {exc}") from exc


# -- extract ----------------------------------------------------------------------------


@dataclass
class ExtractArtifacts:
    out: Path
    files: list[str]
    extraction: Extraction
    warning: str | None = None


def run_extract(cfg: ExtractConfig) -> ExtractArtifacts:
    """Run the extraction pipeline and write diagram, cycles and masks into ``cfg.out``.

    Files are staged in a temporary directory and moved into place only when
    every stage succeeded.
    """
    volume = nrrd.read_volume(cfg.input)
    ex = extract(volume, cfg.preprocess, cfg.mask, cfg.invert)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".extract-", dir=out))
    files = []
    try:
        def put(name, writer):
            writer(tmp / name)
            files.append(name)

        put("diagram.csv", lambda p: p.write_text(diagram_to_csv(ex.persistence.diagram)))
        cycles = [c for p in (1, 2) for c in ex.masks.cycles[p]]
        put("cycles.json", lambda p: p.write_text(cycles_to_json(cycles)))
        put("preprocessed.nrrd", lambda p: nrrd.write_volume(ex.preprocessed, p))
        for p in (1, 2):
            m = ex.masks[p]
            put(f"mask_dim{p}.nrrd", lambda path, m=m: nrrd.write_volume(m.binary, path))
            if m.soft is not None:
                put(f"soft_dim{p}.nrrd", lambda path, m=m: nrrd.write_volume(m.soft, path))
        for name in files:
            os.replace(tmp / name, out / name)
    except Exception as exc:
        raise StageError("write", exc) from exc
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    return ExtractArtifacts(out, files, ex, ex.masks.warning)


# -- simulate / validate ---------------------------------------------------------------------


def simulate(profile: str, dims: int, seed: int, mri: MRIParams = MRIParams(), phantom: PhantomConfig = PhantomConfig()):
    ph = generate_phantom(profile, dims, seed, phantom)
    relax = sample_relaxation(BREAST_TISSUES, seed)
    return ph, relax, simulate_mri(ph, relax, mri)


def relaxation_sidecar(relax: dict, profile: str, seed: int) -> str:
    from .phantom import TISSUES

    doc = {
        "profile": profile,
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "tissues": {TISSUES[k]: {"t1": v[0], "t2": v[1]} for k, v in sorted(relax.items())},
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def run_simulate(profile: str, dims: int, seed: int, out, mri: MRIParams = MRIParams()) -> list[Path]:
    ph, relax, mr = simulate(profile, dims, seed, mri)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "labels.nrrd", out / "mri.nrrd", out / "relaxation.json"]
    nrrd.write_volume(ph.labels, paths[0])
    nrrd.write_volume(Volume3D(mr.data.astype(np.float32)), paths[1])
    paths[2].write_text(relaxation_sidecar(relax, profile, seed))
    return paths


@dataclass(frozen=True)
class ValidationRow:
    profile: str
    seed: int
    precision: float
    recall: float
    dist_t2p: float
    dist_p2t: float


def validate_one(cfg: ValidateConfig, profile: str, seed: int) -> ValidationRow:
    ph, relax, mr = simulate(profile, cfg.dims, seed, cfg.mri, cfg.phantom)
    # round-trip through float32 like an MRI read from disk
    mr = Volume3D(mr.data.astype(np.float32))
    ex = extract(mr, cfg.preprocess_config, cfg.mask, cfg.invert)
    tissue = BinaryMask(ex.transform.apply(tissue_mask(ph).bits.astype(np.uint8), nearest=True).astype(bool))
    topo = ex.masks.union
    try:
        m = mask_metrics(topo, tissue)
        vals = (m.precision, m.recall, m.dist_t2p, m.dist_p2t)
    except UndefinedMetricError:
        log.warning("%s seed %d: empty mask, metrics undefined", profile, seed)
        vals = (math.nan,) * 4
    return ValidationRow(profile, seed, *vals)


def _validate_job(args):
    cfg, profile, seed = args
    return validate_one(cfg, profile, seed)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def validation_report(rows: list[ValidationRow], profiles) -> str:
    lines = ["profile,seed,precision,recall,dist_t2p,dist_p2t"]
    for prof in profiles:
        sub = [r for r in rows if r.profile == prof]
        for r in sub:
            lines.append(",".join([r.profile, str(r.seed)] + [_fmt(v) for v in (r.precision, r.recall, r.dist_t2p, r.dist_p2t)]))
        arr = np.array([[r.precision, r.recall, r.dist_t2p, r.dist_p2t] for r in sub], dtype=np.float64)
        mean = np.nanmean(arr, axis=0)
        std = np.nanstd(arr, axis=0, ddof=1) if len(sub) > 1 else np.zeros(4)
        lines.append(",".join([prof, "mean±std"] + [f"{_fmt(m)}±{_fmt(s)}" for m, s in zip(mean, std)]))
    return "\n".join(lines) + "\n"


def run_validate(cfg: ValidateConfig, out, jobs: int = 1) -> list[ValidationRow]:
    tasks = [(cfg, prof, seed) for prof in cfg.profiles for seed in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_validate_job, tasks))
    else:
        rows = [_validate_job(t) for t in tasks]
    text = validation_report(rows, cfg.profiles)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, out)
    return rows
