"""File formats: binary PGM, the JCOF coefficient container, float exports and JSON reports."""

from __future__ import annotations

import json
import math
import re
import struct
from pathlib import Path

import numpy as np

from .jpeg import COEF_MAX, COEF_MIN, QuantizedImage, QuantTable, check_geometry, from_vectors, to_vectors

MAGIC = b"JCOF"
VERSION = 1
_HEADER = struct.Struct("<4sHII")

_PNM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


class FormatError(ValueError):
    """Malformed or unsupported file."""


def read_pgm(path, require_blocks: bool = False) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM as a ``uint8`` array of shape ``(height, width)``."""
    data = Path(path).read_bytes()
    if data[:2] in (b"P2", b"P1", b"P3"):
        raise FormatError(f"{path}: ASCII PNM ({data[:2].decode()}) is not supported, use binary P5")
    if data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    pos = 2
    fields = []
    for _ in range(3):
        m = _PNM_TOKEN.match(data, pos)
        if m is None or not m.group(1).isdigit():
            raise FormatError(f"{path}: malformed PGM header")
        fields.append(int(m.group(1)))
        pos = m.end()
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PGM (maxval 255) is supported, got maxval {maxval}")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError(f"{path}: malformed PGM header")
    raster = data[pos + 1 :]
    if len(raster) != width * height:
        raise FormatError(f"{path}: expected {width * height} raster bytes, found {len(raster)}")
    image = np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()
    if require_blocks:
        check_geometry(image.shape)
    return image


def write_pgm(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM images must be 2D")
    if image.dtype != np.uint8:
        if image.size and (image.min() < 0 or image.max() > 255 or np.any(image != np.round(image))):
            raise ValueError("PGM samples must be integers in [0, 255]")
        image = image.astype(np.uint8)
    h, w = image.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + image.tobytes())


def write_container(path, q: QuantizedImage) -> None:
    """Write coefficients block by block (blocks row-major, k-major inside a block)."""
    h, w = q.shape
    steps = q.quant.steps
    if steps.max() > 0xFFFF:
        raise ValueError("quantization steps must fit in 16 bits")
    header = _HEADER.pack(MAGIC, VERSION, w, h)
    table = steps.astype("<u2").tobytes()
    coeffs = to_vectors(q.coeffs).astype("<i2").tobytes()
    Path(path).write_bytes(header + table + coeffs)


def read_container(path) -> QuantizedImage:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated container header")
    magic, version, w, h = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    try:
        check_geometry((h, w))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    n = w * h
    expected = _HEADER.size + 128 + 2 * n
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    table = np.frombuffer(data, dtype="<u2", count=64, offset=_HEADER.size).reshape(8, 8)
    coeffs = np.frombuffer(data, dtype="<i2", count=n, offset=_HEADER.size + 128)
    coeffs = coeffs.astype(np.int64).reshape(h // 8, w // 8, 64)
    if coeffs.min() < COEF_MIN or coeffs.max() > COEF_MAX:
        raise FormatError(f"{path}: coefficient outside [{COEF_MIN}, {COEF_MAX}]")
    try:
        quant = QuantTable(table.astype(np.int64))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return QuantizedImage(from_vectors(coeffs), quant)


def write_f32(path, array: np.ndarray, semantics: str) -> None:
    """Raw little-endian float32 array plus a ``<path>.json`` sidecar describing it."""
    array = np.asarray(array, dtype=np.float64)
    Path(path).write_bytes(array.astype("<f4").tobytes())
    sidecar = {"dtype": "float32", "byteorder": "little", "shape": list(array.shape), "semantics": semantics}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_f32(path) -> np.ndarray:
    sidecar_path = Path(str(path) + ".json")
    if not sidecar_path.exists():
        raise FormatError(f"{path}: missing sidecar {sidecar_path.name}")
    meta = json.loads(sidecar_path.read_text())
    shape = tuple(int(s) for s in meta["shape"])
    if meta.get("dtype") != "float32" or meta.get("byteorder") != "little":
        raise FormatError(f"{path}: unsupported float export {meta.get('dtype')}/{meta.get('byteorder')}")
    data = Path(path).read_bytes()
    if len(data) != 4 * math.prod(shape):
        raise FormatError(f"{path}: size does not match shape {shape}")
    return np.frombuffer(data, dtype="<f4").reshape(shape).astype(np.float64)


def _check_finite(obj, where="report"):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{where}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{where}[{i}]")
    elif isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError(f"non-finite value at {where}")


def write_report(path, report: dict) -> None:
    _check_finite(report)
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())
