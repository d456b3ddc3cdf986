"""Raster files (8-bit PGM and lossless FRAS float rasters) and CSV outputs.

FRAS layout: b"FRAS", width and height as little-endian uint32, then
width·height little-endian float64 values, row-major.
"""
import csv
import logging
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.models.errors import DomainError, RasterFormatError, RasterIOError
from src.models.raster import Raster, RasterLike, as_image
from src.models.roi import RoiMask
from src.models.trace import ConvergenceTrace, TraceRecord

logger = logging.getLogger(__name__)

FRAS_MAGIC = b"FRAS"
PGM_MAGIC = b"P5"
HEADER_DTYPE = np.dtype("<u4")
VALUE_DTYPE = np.dtype("<f8")
TRACE_HEADER = ["iter", "f", "g", "h", "residual_sq", "psnr"]
METRICS_HEADER = ["metric", "value", "convention"]


def format_real(value: Optional[float]) -> str:
    """17 significant digits, '.' separator; blank for missing values."""
    if value is None:
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(float(value), ".17g")


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise RasterIOError(f"cannot read {path}: {e}", module="cli") from e


def _decode_fras(data: bytes, path: Path) -> Raster:
    header = len(FRAS_MAGIC) + 2 * HEADER_DTYPE.itemsize
    if len(data) < header:
        raise RasterFormatError(f"{path}: truncated header", module="cli")
    width, height = (int(v) for v in np.frombuffer(data, dtype=HEADER_DTYPE, count=2, offset=len(FRAS_MAGIC)))
    if width == 0 or height == 0:
        raise RasterFormatError(f"{path}: empty raster {width}x{height}", module="cli")
    expected = header + width * height * VALUE_DTYPE.itemsize
    if len(data) != expected:
        raise RasterFormatError(f"{path}: payload holds {len(data) - header} bytes, expected {expected - header}", module="cli")
    values = np.frombuffer(data, dtype=VALUE_DTYPE, offset=header).astype(np.float64)
    return Raster.from_flat(width, height, values)


def _decode_pgm(path: Path) -> Raster:
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise RasterFormatError(f"{path}: only 8-bit greyscale PGM is supported, got mode {img.mode}", module="cli")
            img.load()
            pixels = np.asarray(img, dtype=np.float64)
    except (UnidentifiedImageError, OSError, ValueError, SyntaxError) as e:
        raise RasterFormatError(f"{path}: malformed PGM: {e}", module="cli") from e
    return Raster(pixels / 255.0)


def load_raster(path) -> Raster:
    """Read a P5 PGM (scaled to [0, 1]) or a FRAS float raster, by magic."""
    path = Path(path)
    data = _read_bytes(path)
    if data.startswith(FRAS_MAGIC):
        return _decode_fras(data, path)
    if data.startswith(PGM_MAGIC):
        return _decode_pgm(path)
    raise RasterFormatError(f"{path}: unrecognised magic {data[:4]!r}", module="cli")


def quantize(values: np.ndarray, peak: float = 1.0) -> np.ndarray:
    """Clamp to [0, peak] and map to 0..255, rounding half up."""
    scaled = np.clip(values, 0.0, peak) / peak * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def _format_for(path: Path, fmt: Optional[str]) -> str:
    if fmt is not None:
        fmt = fmt.lower()
    elif path.suffix.lower() == ".pgm":
        fmt = "pgm"
    else:
        fmt = "fras"
    if fmt not in ("pgm", "fras"):
        raise RasterFormatError(f"unknown raster format '{fmt}'", module="cli")
    return fmt


def save_raster(path, raster: RasterLike, fmt: Optional[str] = None, peak: float = 1.0) -> Path:
    """Write `raster` as PGM (clamped, quantised) or FRAS (lossless).

    The format defaults to the file suffix (.pgm, anything else is FRAS).
    """
    path = Path(path)
    values = as_image(raster)
    fmt = _format_for(path, fmt)
    if not np.all(np.isfinite(values)):
        raise DomainError(f"cannot save non-finite raster to {path}", module="cli")
    try:
        if fmt == "pgm":
            if not peak > 0:
                raise DomainError(f"PGM peak must be positive, got {peak}", module="cli")
            Image.fromarray(quantize(values, peak)).save(path, format="PPM")
        else:
            height, width = values.shape
            payload = FRAS_MAGIC + np.array([width, height], dtype=HEADER_DTYPE).tobytes()
            payload += np.ascontiguousarray(values, dtype=VALUE_DTYPE).tobytes()
            path.write_bytes(payload)
    except OSError as e:
        raise RasterIOError(f"cannot write {path}: {e}", module="cli") from e
    logger.debug(f"[save_raster] wrote {fmt} {values.shape} to {path}")
    return path


def load_roi(path, label: Optional[str] = None) -> RoiMask:
    """ROI mask file: any raster, nonzero = inside."""
    path = Path(path)
    return RoiMask(load_raster(path).values > 0, label or path.stem)


def save_roi(path, roi: RoiMask) -> Path:
    return save_raster(path, roi.mask.astype(np.float64), fmt="pgm")


# -------------------------------
# CSV outputs
# -------------------------------

def _write_rows(path: Path, header: list[str], rows: Iterable[list[str]]) -> Path:
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise RasterIOError(f"cannot write {path}: {e}", module="cli") from e
    return path


def write_trace_csv(path, trace: ConvergenceTrace) -> Path:
    """One row per trace record, iteration 0 (initial point) first."""
    rows = (
        [
            str(r.iteration),
            format_real(r.f_value),
            format_real(r.g_value),
            format_real(r.h_value),
            format_real(r.residual_sq),
            format_real(r.psnr),
        ]
        for r in trace.rows()
    )
    return _write_rows(Path(path), TRACE_HEADER, rows)


def _parse_real(text: str) -> Optional[float]:
    return None if text == "" else float(text)


def read_trace_csv(path) -> ConvergenceTrace:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            body = list(reader)
    except OSError as e:
        raise RasterIOError(f"cannot read {path}: {e}", module="cli") from e
    if header != TRACE_HEADER:
        raise RasterFormatError(f"{path}: expected header {','.join(TRACE_HEADER)}", module="cli")
    if not body:
        raise RasterFormatError(f"{path}: trace has no initial row", module="cli")
    try:
        records = [
            TraceRecord(int(it), float(f), float(g), float(h), _parse_real(res), _parse_real(p))
            for it, f, g, h, res, p in body
        ]
    except ValueError as e:
        raise RasterFormatError(f"{path}: malformed trace row: {e}", module="cli") from e
    trace = ConvergenceTrace(records[0])
    for record in records[1:]:
        trace.append(record)
    return trace


def write_metrics_csv(path, metrics: list[tuple[str, float, str]]) -> Path:
    rows = ([name, format_real(value), convention] for name, value, convention in metrics)
    return _write_rows(Path(path), METRICS_HEADER, rows)
