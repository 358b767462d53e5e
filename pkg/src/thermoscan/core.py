"""Image, mask and rectangle types plus raster / CSV / sidecar ingestion.

Coordinates follow numpy: a pixel is addressed as ``(i, j) = (row, column)``,
0-based, origin at the top-left corner. Rectangles use ``x`` for the column
and ``y`` for the row of their top-left corner. Geometric transforms work in
``(x, y) = (column, row)`` point coordinates.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .errors import (
    NoCalibration,
    NonNumericCell,
    OutOfBounds,
    RaggedRows,
    UnreadableFile,
    UnsupportedFormat,
    ValidationError,
)

__all__ = [
    "AcquisitionMetadata",
    "ThermalImage",
    "BinaryMask",
    "Rect",
    "load_image",
    "save_image",
    "save_mask",
    "load_temperature_csv",
    "intensity_to_temperature",
    "crop",
    "sidecar_path",
    "read_sidecar",
    "write_sidecar",
]


@dataclass(frozen=True)
class AcquisitionMetadata:
    """Acquisition conditions recorded alongside a thermogram.

    The defaults describe the dynamic protocol: one frame every 15 s with the
    camera 0.5 m from the patient.
    """

    room_temp: Optional[float] = None
    rel_humidity: Optional[float] = None
    frame_index: int = 0
    capture_interval: float = 15.0
    distance_to_camera: float = 0.5

    def __post_init__(self):
        if self.rel_humidity is not None and not 0 <= self.rel_humidity <= 100:
            raise ValidationError(f"rel_humidity {self.rel_humidity} outside [0, 100]")
        if not self.capture_interval > 0:
            raise ValidationError("capture_interval must be positive")
        if self.frame_index < 0:
            raise ValidationError("frame_index must be non-negative")


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ThermalImage:
    """8-bit single-channel thermogram.

    ``pixels`` is stored as a read-only ``uint8`` array of shape
    ``(height, width)``. ``calib`` is an optional ``(t_min, t_max)`` pair in
    degrees Celsius describing a linear intensity-to-temperature map.
    """

    pixels: np.ndarray
    calib: Optional[tuple[float, float]] = None
    meta: Optional[AcquisitionMetadata] = None

    def __post_init__(self):
        raw = np.asarray(self.pixels)
        if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
            raise ValidationError(f"expected a non-empty 2-D grid, got shape {raw.shape}")
        if raw.dtype != np.uint8:
            if raw.size and (raw.min() < 0 or raw.max() > 255):
                raise ValidationError("intensities must lie in [0, 255]")
            if np.issubdtype(raw.dtype, np.floating) and not np.all(raw == np.floor(raw)):
                raise ValidationError("intensities must be integers")
        object.__setattr__(self, "pixels", _frozen_array(raw, np.uint8))
        if self.calib is not None:
            t_min, t_max = (float(v) for v in self.calib)
            if not t_min < t_max:
                raise ValidationError(f"calibration requires t_min < t_max, got {self.calib}")
            object.__setattr__(self, "calib", (t_min, t_max))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, ThermalImage):
            return NotImplemented
        return (
            np.array_equal(self.pixels, other.pixels)
            and self.calib == other.calib
            and self.meta == other.meta
        )

    __hash__ = None

    def with_pixels(self, pixels) -> "ThermalImage":
        """Same calibration and metadata, new intensities."""
        return replace(self, pixels=pixels)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Grid of {0, 1} values, stored as read-only ``uint8``."""

    values: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.values)
        if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
            raise ValidationError(f"expected a non-empty 2-D grid, got shape {raw.shape}")
        if raw.dtype == bool:
            raw = raw.astype(np.uint8)
        elif raw.size and not np.all((raw == 0) | (raw == 1)):
            raise ValidationError("mask values must be 0 or 1")
        object.__setattr__(self, "values", _frozen_array(raw, np.uint8))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def count(self) -> int:
        return int(self.values.sum(dtype=np.int64))

    def to_image(self) -> ThermalImage:
        """Render as an 8-bit image, 1 -> 255 and 0 -> 0."""
        return ThermalImage(self.values * np.uint8(255))

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            value = getattr(self, name)
            if int(value) != value:
                raise ValidationError(f"Rect.{name} must be an integer")
            object.__setattr__(self, name, int(value))
        if self.w < 1 or self.h < 1:
            raise ValidationError(f"Rect needs w >= 1 and h >= 1, got {self.w}x{self.h}")

    def fits(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x + self.w <= width and self.y + self.h <= height

    def check_within(self, width: int, height: int) -> None:
        if not self.fits(width, height):
            raise OutOfBounds(f"{self} does not fit in a {width}x{height} image")

    def contains(self, other: "Rect") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.x + other.w <= self.x + self.w
            and other.y + other.h <= self.y + self.h
        )

    def translated(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x + dx, self.y + dy, self.w, self.h)

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def __str__(self):
        return f"{self.x} {self.y} {self.w} {self.h}"

    @classmethod
    def parse(cls, text: str) -> "Rect":
        """Parse ``"x y w h"`` (commas are also accepted as separators)."""
        parts = text.replace(",", " ").split()
        if len(parts) != 4:
            raise ValidationError(f"expected 'x y w h', got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError as exc:
            raise ValidationError(f"non-integer rectangle field in {text!r}") from exc


def crop(img: ThermalImage, rect: Rect) -> ThermalImage:
    rect.check_within(img.width, img.height)
    return img.with_pixels(img.pixels[rect.slices])


def intensity_to_temperature(img: ThermalImage, i: int, j: int) -> float:
    """Temperature in degrees Celsius of pixel ``(i, j)``."""
    if img.calib is None:
        raise NoCalibration("image carries no temperature calibration")
    if not (0 <= i < img.height and 0 <= j < img.width):
        raise OutOfBounds(f"pixel ({i}, {j}) outside {img.height}x{img.width} image")
    t_min, t_max = img.calib
    return t_min + (int(img.pixels[i, j]) / 255.0) * (t_max - t_min)


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5)


def load_temperature_csv(path, t_min: float, t_max: float) -> ThermalImage:
    """Read a headerless CSV of temperatures and quantize it to 8 bits.

    intensity = round_half_up(255 * (T - t_min) / (t_max - t_min)), clamped.
    """
    if not t_min < t_max:
        raise ValidationError(f"t_min must be < t_max, got {t_min}, {t_max}")
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise RaggedRows(f"{path}: no data rows")
    width = len(rows[0])
    grid = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(f"{path}: row {r} has {len(row)} cells, expected {width}")
        try:
            grid.append([float(cell) for cell in row])
        except ValueError as exc:
            raise NonNumericCell(f"{path}: row {r}: {exc}") from exc
    temps = np.asarray(grid, dtype=np.float64)
    if not np.all(np.isfinite(temps)):
        raise NonNumericCell(f"{path}: non-finite temperature")
    scaled = 255.0 * (temps - t_min) / (t_max - t_min)
    intensities = np.clip(_round_half_up(scaled), 0, 255).astype(np.uint8)
    return ThermalImage(intensities, calib=(t_min, t_max))


# -- raster I/O ----------------------------------------------------------------

def _pgm_tokens(data: bytes, count: int, start: int = 0):
    """Yield ``count`` whitespace-separated header tokens, skipping comments."""
    pos = start
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        begin = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if begin == pos:
            raise UnsupportedFormat("truncated graymap header")
        tokens.append(data[begin:pos])
    return tokens, pos


def _read_pgm(data: bytes) -> np.ndarray:
    magic = data[:2]
    (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise UnsupportedFormat("malformed graymap header") from exc
    if width < 1 or height < 1:
        raise UnsupportedFormat("graymap has zero size")
    if not 0 < maxval < 65536:
        raise UnsupportedFormat(f"invalid maxval {maxval}")
    if maxval > 255:
        raise UnsupportedFormat(f"graymap depth exceeds 8 bits (maxval {maxval})")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        body = data[pos:pos + width * height]
        if len(body) != width * height:
            raise UnsupportedFormat("truncated graymap raster")
        return np.frombuffer(body, dtype=np.uint8).reshape(height, width).copy()
    # plain (P2)
    values, _ = _pgm_tokens(data, width * height, pos)
    try:
        arr = np.array([int(v) for v in values], dtype=np.int64)
    except ValueError as exc:
        raise UnsupportedFormat("non-integer sample in plain graymap") from exc
    if arr.min() < 0 or arr.max() > maxval:
        raise UnsupportedFormat("sample exceeds maxval")
    return arr.astype(np.uint8).reshape(height, width)


def _read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "1":
                return np.asarray(im.convert("L"), dtype=np.uint8).copy()
            if mode != "L":
                raise UnsupportedFormat(f"PNG mode {mode!r} is not 8-bit grayscale")
            return np.asarray(im, dtype=np.uint8).copy()
    except UnsupportedFormat:
        raise
    except OSError as exc:
        raise UnsupportedFormat(f"cannot decode {path}: {exc}") from exc


def load_image(path) -> ThermalImage:
    """Load an 8-bit grayscale PGM (P2/P5) or PNG.

    Intensities are copied verbatim. A JSON sidecar with the same stem
    (``frame.pgm`` -> ``frame.json``) supplies metadata and calibration.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    if data[:2] in (b"P2", b"P5"):
        pixels = _read_pgm(data)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        pixels = _read_png(path)
    elif data[:2] in (b"P1", b"P3", b"P4", b"P6", b"P7"):
        raise UnsupportedFormat(f"{path}: netpbm variant {data[:2].decode()} is not a graymap")
    else:
        raise UnsupportedFormat(f"{path}: not a PGM or PNG file")
    calib, meta = read_sidecar(sidecar_path(path))
    return ThermalImage(pixels, calib=calib, meta=meta)


def save_image(img: ThermalImage, path, plain: bool = False, sidecar: bool = True) -> None:
    """Write ``img`` losslessly; format chosen from the suffix (.pgm or .png)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        magic = b"P2" if plain else b"P5"
        header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
        if plain:
            body = "\n".join(" ".join(str(v) for v in row) for row in img.pixels.tolist())
            path.write_bytes(header + body.encode() + b"\n")
        else:
            path.write_bytes(header + img.pixels.tobytes())
    elif suffix == ".png":
        Image.fromarray(np.ascontiguousarray(img.pixels), mode="L").save(path, format="PNG")
    else:
        raise UnsupportedFormat(f"cannot write {path}: use .pgm or .png")
    if sidecar and (img.calib is not None or img.meta is not None):
        write_sidecar(sidecar_path(path), img.calib, img.meta)


def save_mask(mask: BinaryMask, path) -> None:
    save_image(mask.to_image(), path, sidecar=False)


# -- metadata sidecar ------------------------------------------------------------

_META_KEYS = tuple(f.name for f in fields(AcquisitionMetadata))


def sidecar_path(image_path) -> Path:
    return Path(image_path).with_suffix(".json")


def read_sidecar(path):
    """Return ``(calib, meta)`` from a sidecar file, or ``(None, None)``.

    Recognised keys: room_temp, rel_humidity, frame_index, capture_interval,
    distance_to_camera, t_min, t_max. Calibration needs both t_min and t_max.
    """
    path = Path(path)
    if not path.is_file():
        return None, None
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UnreadableFile(f"bad metadata sidecar {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UnreadableFile(f"bad metadata sidecar {path}: expected an object")
    calib = None
    if "t_min" in doc or "t_max" in doc:
        if "t_min" not in doc or "t_max" not in doc:
            raise ValidationError(f"{path}: t_min and t_max must be given together")
        calib = (float(doc["t_min"]), float(doc["t_max"]))
    meta_fields = {k: doc[k] for k in _META_KEYS if k in doc}
    meta = AcquisitionMetadata(**meta_fields) if meta_fields else None
    return calib, meta


def write_sidecar(path, calib=None, meta: Optional[AcquisitionMetadata] = None) -> None:
    doc = {}
    if meta is not None:
        doc.update({k: getattr(meta, k) for k in _META_KEYS})
    if calib is not None:
        doc["t_min"], doc["t_max"] = calib
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
