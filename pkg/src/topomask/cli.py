"""Command-line entry point: ``topomask <subcommand> ...``.

Exit codes: 0 success, 1 computation error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from . import nrrd
from .cubical import build_complex
from .errors import ConfigError, FormatError, TopomaskError, TruncationError, WriteError
from .losses import LossParams, focal_loss, total_loss
from .metrics import ks_two_sample, sliced_wasserstein_distance
from .persistence import betti_curve, compute_diagram, read_diagram_csv
from .phantom import MRIParams
from .pipeline import (ExtractConfig, StageError, ValidateConfig, load_json, run_extract, run_simulate,
                       run_validate)

log = logging.getLogger("topomask")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


# -- subcommands -------------------------------------------------------------------


def cmd_extract(args) -> int:
    raw = load_json(args.config) if args.config else {}
    if args.input is not None:
        raw["input"] = args.input
    if args.out is not None:
        raw["out"] = args.out
    mask = dict(raw.get("mask") or {})
    if args.persistence_fraction is not None:
        mask["fraction"] = args.persistence_fraction
        mask.pop("threshold", None)
    if args.persistence_threshold is not None:
        mask["threshold"] = args.persistence_threshold
        mask.pop("fraction", None)
        if args.persistence_fraction is None:
            mask["fraction"] = None
    if args.dims is not None:
        mask["dims"] = args.dims
    if args.dilate is not None:
        mask["dilation_radius"] = args.dilate
    if mask:
        raw["mask"] = mask
    if args.no_preprocess:
        raw["preprocess"] = False
    pre = dict(raw.get("preprocess") or {})
    if args.target_cube is not None:
        pre["target_cube"] = args.target_cube
        if args.max_extent is None:
            pre["max_extent"] = min(pre.get("max_extent", 256), args.target_cube)
    if args.max_extent is not None:
        pre["max_extent"] = args.max_extent
    if pre and raw.get("preprocess") is not False:
        raw["preprocess"] = pre
    if args.no_invert:
        raw["invert"] = False
    cfg = ExtractConfig.from_dict(raw)
    art = run_extract(cfg)
    t = art.extraction.timings
    log.info("wrote %s to %s", ", ".join(art.files), art.out)
    log.info("persistence+cycles %.3fs", t.get("persistence", 0.0) + t.get("masks", 0.0))
    return EXIT_OK


def cmd_validate(args) -> int:
    raw = load_json(args.config)
    if args.profiles is not None:
        raw["profiles"] = args.profiles.split(",")
    if args.seeds is not None:
        raw["seeds"] = args.seeds
    if args.dims is not None:
        raw["dims"] = args.dims
    cfg = ValidateConfig.from_dict(raw)
    rows = run_validate(cfg, args.out, jobs=args.jobs)
    log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    mri = MRIParams(args.spin_density, args.flip_angle, args.tr, args.te)
    paths = run_simulate(args.profile, args.dims, args.seed, args.out, mri)
    log.info("wrote %s", ", ".join(str(p) for p in paths))
    return EXIT_OK


def cmd_betti(args) -> int:
    if (args.diagram is None) == (args.input is None):
        raise UsageError("betti needs exactly one of --diagram or --input")
    if args.diagram is not None:
        d = read_diagram_csv(args.diagram)
    else:
        d = compute_diagram(build_complex(nrrd.read_volume(args.input))).diagram
    if args.thresholds is not None:
        t = np.asarray(sorted(args.thresholds))
    else:
        t = np.unique(np.concatenate([d.birth, d.death[np.isfinite(d.death)]]))
    curve = betti_curve(d, args.dim, t)
    out = sys.stdout
    out.write("threshold,betti\n")
    for ti, bi in zip(curve.thresholds, curve.counts):
        out.write(f"{ti:.9g},{int(bi)}\n")
    return EXIT_OK


def _read_births(path, dim) -> np.ndarray:
    """Birth times from a diagram CSV (column ``birth``) or a one-column numeric file."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise UsageError(f"{path}: empty sample file")
    header = [h.strip() for h in rows[0]]
    if "birth" in header:
        bi = header.index("birth")
        di = header.index("dim") if "dim" in header else None
        vals = [float(r[bi]) for r in rows[1:] if dim is None or di is None or int(r[di]) == dim]
    else:
        try:
            vals = [float(r[0]) for r in rows]
        except ValueError:
            vals = [float(r[0]) for r in rows[1:]]  # single named column
    return np.asarray(vals, dtype=np.float64)


def cmd_ks(args) -> int:
    a, b = _read_births(args.a, args.dim), _read_births(args.b, args.dim)
    d, p = ks_two_sample(a, b)
    print(json.dumps({"n_a": int(a.size), "n_b": int(b.size), "D": d, "p_value": p}))
    return EXIT_OK


def cmd_swd(args) -> int:
    d1, d2 = read_diagram_csv(args.a), read_diagram_csv(args.b)
    dist = sliced_wasserstein_distance(d1.points(args.dim), d2.points(args.dim), args.slices)
    print(json.dumps({"dim": args.dim, "slices": args.slices, "distance": dist}))
    return EXIT_OK


def cmd_losses(args) -> int:
    params = LossParams(args.theta, args.gamma, args.lam)
    fl = focal_loss(args.p, args.y, params)
    doc = {"focal": fl}
    if args.mask is not None:
        doc["mask"] = args.mask
        doc["total"] = total_loss(fl, args.mask, params.lam)
    print(json.dumps(doc))
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    ap = argparse.ArgumentParser(prog="topomask", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="topological masks from an NRRD volume")
    p.add_argument("--config", help="JSON config; flags override its values")
    p.add_argument("--input", help="input NRRD volume")
    p.add_argument("--out", help="output directory")
    p.add_argument("--persistence-fraction", type=float, help="fraction of pairs kept (default 0.3)")
    p.add_argument("--persistence-threshold", type=float, help="absolute persistence cut instead of a fraction")
    p.add_argument("--dims", type=_csv_ints, help="mask dimensions, e.g. 1,2")
    p.add_argument("--dilate", type=float, help="dilation radius in voxels (default 0)")
    p.add_argument("--target-cube", type=int)
    p.add_argument("--max-extent", type=int)
    p.add_argument("--no-preprocess", action="store_true", help="use the volume as-is (no crop, resize or normalize)")
    p.add_argument("--no-invert", action="store_true", help="filter the image itself rather than its negative")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("validate", parents=[common], help="phantom validation report")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--profiles", help="comma-separated profiles")
    p.add_argument("--seeds", type=_csv_ints)
    p.add_argument("--dims", type=int)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("simulate", parents=[common], help="phantom labels and simulated MRI")
    p.add_argument("--profile", required=True)
    p.add_argument("--dims", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--spin-density", type=float, default=MRIParams.spin_density)
    p.add_argument("--flip-angle", type=float, default=MRIParams.flip_angle)
    p.add_argument("--tr", type=float, default=MRIParams.tr)
    p.add_argument("--te", type=float, default=MRIParams.te)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("betti", parents=[common], help="Betti curve from a diagram CSV or an NRRD volume")
    p.add_argument("--diagram")
    p.add_argument("--input")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--thresholds", type=_csv_floats)
    p.set_defaults(fn=cmd_betti)

    p = sub.add_parser("ks", parents=[common], help="two-sample KS test on birth times")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--dim", type=int, help="restrict diagram CSVs to one dimension")
    p.set_defaults(fn=cmd_ks)

    p = sub.add_parser("swd", parents=[common], help="sliced Wasserstein distance between diagram CSVs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--slices", type=int, default=50)
    p.add_argument("--dim", type=int, default=1)
    p.set_defaults(fn=cmd_swd)

    p = sub.add_parser("losses", parents=[common], help="evaluate the reference losses")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--theta", type=float, default=LossParams.theta)
    p.add_argument("--gamma", type=float, default=LossParams.gamma)
    p.add_argument("--lambda", dest="lam", type=float, default=LossParams.lam)
    p.add_argument("--mask", type=float, help="attention-mask loss value to combine into the total")
    p.set_defaults(fn=cmd_losses)
    return ap


def _is_io(exc: BaseException) -> bool:
    return isinstance(exc, (OSError, FormatError, TruncationError, WriteError, ConfigError, UsageError))


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.fn(args)
    except StageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE if _is_io(exc.cause) else EXIT_COMPUTE
    except (UsageError, ConfigError, FormatError, TruncationError, WriteError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (TopomaskError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
