"""Minimal NRRD reader/writer: 3D, raw encoding, little-endian float32 or uint8."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import FormatError, TruncationError, WriteError
from .volume import BinaryMask, Volume3D

MAGIC = b"NRRD0004"

_TYPES = {
    "float": np.dtype("<f4"),
    "uchar": np.dtype("u1"),
    "unsigned char": np.dtype("u1"),
    "uint8": np.dtype("u1"),
    "uint8_t": np.dtype("u1"),
}


def _parse_header(raw: bytes) -> tuple[dict[str, str], int]:
    end = raw.find(b"\n\n")
    if end < 0:
        raise FormatError("header", "NRRD header is not terminated by a blank line")
    lines = raw[:end].decode("ascii", errors="replace").split("\n")
    if not lines[0].startswith("NRRD000"):
        raise FormatError("magic", f"bad NRRD magic {lines[0]!r}")
    fields = {}
    for line in lines[1:]:
        if not line or line.startswith("#") or ":=" in line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise FormatError(line.strip(), f"malformed header line {line!r}")
        fields[key.strip().lower()] = value.strip()
    return fields, end + 2


def _require(fields, key):
    if key not in fields:
        raise FormatError(key, f"NRRD header lacks required field {key!r}")
    return fields[key]


def read_nrrd(path) -> tuple[np.ndarray, dict[str, str]]:
    """Return the ``[x, y, z]`` array and the parsed header fields."""
    raw = Path(path).read_bytes()
    fields, offset = _parse_header(raw)
    if _require(fields, "dimension") != "3":
        raise FormatError("dimension", "only 3D volumes are supported")
    try:
        sizes = tuple(int(s) for s in _require(fields, "sizes").split())
    except ValueError:
        raise FormatError("sizes") from None
    if len(sizes) != 3 or min(sizes) < 1:
        raise FormatError("sizes")
    type_name = _require(fields, "type")
    if type_name not in _TYPES:
        raise FormatError("type", f"unsupported NRRD type {type_name!r}")
    dtype = _TYPES[type_name]
    if _require(fields, "encoding") != "raw":
        raise FormatError("encoding", f"unsupported encoding {fields['encoding']!r}")
    if dtype.itemsize > 1 and _require(fields, "endian") != "little":
        raise FormatError("endian", f"unsupported endian {fields['endian']!r}")
    payload = raw[offset:]
    expected = int(np.prod(sizes)) * dtype.itemsize
    if len(payload) != expected:
        raise TruncationError(f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    data = np.frombuffer(payload, dtype=dtype).reshape(sizes, order="F")
    return data, fields


def _spacing(fields) -> tuple[float, float, float]:
    if "spacings" not in fields:
        return (1.0, 1.0, 1.0)
    try:
        sp = tuple(float(s) for s in fields["spacings"].split())
    except ValueError:
        raise FormatError("spacings") from None
    if len(sp) != 3:
        raise FormatError("spacings")
    return sp


def read_volume(path) -> Volume3D:
    data, fields = read_nrrd(path)
    # native-endian float32 copy; values are bit-identical to the payload
    return Volume3D(data.astype(np.float32), _spacing(fields))


def read_labels(path) -> tuple[np.ndarray, tuple[float, float, float]]:
    data, fields = read_nrrd(path)
    if data.dtype != np.uint8:
        raise FormatError("type", "label volumes must be uchar")
    return np.array(data), _spacing(fields)


def read_mask(path) -> BinaryMask:
    labels, spacing = read_labels(path)
    return BinaryMask(labels != 0, spacing)


def encode(obj, spacing=None) -> bytes:
    if isinstance(obj, Volume3D):
        arr, type_name, spacing = obj.data.astype("<f4"), "float", obj.spacing
    elif isinstance(obj, BinaryMask):
        arr, type_name, spacing = obj.bits.astype(np.uint8), "uchar", obj.spacing
    else:
        arr = np.asarray(obj)
        if arr.dtype != np.uint8:
            raise TypeError("raw arrays must be uint8 label volumes")
        type_name = "uchar"
        spacing = spacing or (1.0, 1.0, 1.0)
    lines = [
        MAGIC.decode(),
        f"type: {type_name}",
        "dimension: 3",
        "sizes: " + " ".join(str(n) for n in arr.shape),
        "spacings: " + " ".join(repr(float(s)) for s in spacing),
        "encoding: raw",
        "endian: little",
    ]
    header = ("\n".join(lines) + "\n\n").encode("ascii")
    return header + arr.tobytes(order="F")


def write_volume(obj, path, spacing=None) -> None:
    """Write a Volume3D (float), BinaryMask (uchar) or uint8 label array (uchar)."""
    blob = encode(obj, spacing)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(blob)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise WriteError(f"cannot write {path}: {exc}") from exc
