"""Deterministic synthetic neck phantoms with analytic ground truth.

Scene model (float intensities, later rounded half up and clamped to
[0, 255]):

* uniform ``background``;
* optional warmer ``neck_intensity`` between the two bands over ``band_rows``;
* two dark vertical bands (the lateral neck borders) over ``band_rows``;
* optional chin marker rectangle, filled or drawn as an outline;
* optional hot nodule: an isotropic Gaussian bump, added on top and cut at
  ``radius``, scaled so the scene reaches ``peak`` at the nodule centre.

Frame ``k`` is the scene warped by ``jitter[k]`` (bilinear; the scene is
extended past the frame by edge replication, then background)
plus Gaussian noise drawn from ``numpy.random.default_rng([seed, k])``.
Frame 0 always has the identity jitter.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .core import AcquisitionMetadata, BinaryMask, Rect, ThermalImage
from .errors import SpecOutOfBounds, UnreadableFile
from .registration import RigidTransform2D

__all__ = [
    "Nodule",
    "PhantomSpec",
    "GroundTruth",
    "render_scene",
    "generate_phantom",
    "ground_truth",
    "load_spec",
    "save_spec",
    "neck_phantom",
    "random_jitter",
]


@dataclass(frozen=True)
class Nodule:
    center: tuple  # (x, y) = (column, row)
    radius: float
    peak: float
    falloff: float  # Gaussian sigma in pixels

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not 0 <= self.peak <= 255:
            raise SpecOutOfBounds(f"nodule peak {self.peak} outside [0, 255]")
        if self.radius <= 0 or self.falloff <= 0:
            raise SpecOutOfBounds("nodule radius and falloff must be positive")


@dataclass(frozen=True)
class PhantomSpec:
    width: int
    height: int
    background: float
    neck_band_cols: tuple  # two half-open column ranges (start, stop)
    band_intensity: float
    band_rows: Optional[tuple] = None  # half-open row range; None = full height
    neck_intensity: Optional[float] = None
    marker_rect: Optional[Rect] = None
    marker_intensity: float = 0.0
    marker_outline: int = 0  # 0 = filled rectangle, else border thickness in px
    nodule: Optional[Nodule] = None
    jitter: tuple = ()  # one (theta, t_x, t_y) per frame; empty = single frame
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        bands = tuple(tuple(int(v) for v in band) for band in self.neck_band_cols)
        object.__setattr__(self, "neck_band_cols", bands)
        object.__setattr__(self, "jitter", tuple(tuple(float(v) for v in j) for j in self.jitter))
        if self.band_rows is not None:
            object.__setattr__(self, "band_rows", tuple(int(v) for v in self.band_rows))
        if isinstance(self.marker_rect, (list, tuple)):
            object.__setattr__(self, "marker_rect", Rect(*self.marker_rect))
        if isinstance(self.nodule, dict):
            object.__setattr__(self, "nodule", Nodule(**self.nodule))
        self.validate()

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise SpecOutOfBounds("phantom must be at least 1x1")
        for name in ("background", "band_intensity", "marker_intensity"):
            if not 0 <= getattr(self, name) <= 255:
                raise SpecOutOfBounds(f"{name} outside [0, 255]")
        if self.neck_intensity is not None and not 0 <= self.neck_intensity <= 255:
            raise SpecOutOfBounds("neck_intensity outside [0, 255]")
        if len(self.neck_band_cols) != 2:
            raise SpecOutOfBounds("exactly two neck bands are required")
        (a0, a1), (b0, b1) = self.neck_band_cols
        if not (0 <= a0 < a1 <= b0 < b1 <= self.width):
            raise SpecOutOfBounds(f"bands {self.neck_band_cols} must be ordered and inside width {self.width}")
        r0, r1 = self.rows
        if not 0 <= r0 < r1 <= self.height:
            raise SpecOutOfBounds(f"band rows {self.band_rows} outside height {self.height}")
        if self.marker_rect is not None and not self.marker_rect.fits(self.width, self.height):
            raise SpecOutOfBounds(f"marker {self.marker_rect} outside the image")
        if self.jitter and any(v != 0.0 for v in self.jitter[0]):
            raise SpecOutOfBounds("frame 0 must have identity jitter")
        if any(len(j) != 3 for j in self.jitter):
            raise SpecOutOfBounds("jitter entries are (theta, t_x, t_y)")
        if self.noise_sigma < 0:
            raise SpecOutOfBounds("noise_sigma must be >= 0")
        if self.marker_outline < 0:
            raise SpecOutOfBounds("marker_outline must be >= 0")

    @property
    def rows(self) -> tuple[int, int]:
        return self.band_rows if self.band_rows is not None else (0, self.height)

    @property
    def n_frames(self) -> int:
        return max(1, len(self.jitter))

    def with_(self, **changes) -> "PhantomSpec":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return PhantomSpec(**data)

    def to_dict(self) -> dict:
        doc = {
            "width": self.width,
            "height": self.height,
            "background": self.background,
            "neck_band_cols": [list(b) for b in self.neck_band_cols],
            "band_intensity": self.band_intensity,
            "band_rows": list(self.band_rows) if self.band_rows is not None else None,
            "neck_intensity": self.neck_intensity,
            "marker_rect": [self.marker_rect.x, self.marker_rect.y, self.marker_rect.w, self.marker_rect.h]
            if self.marker_rect is not None else None,
            "marker_intensity": self.marker_intensity,
            "marker_outline": self.marker_outline,
            "nodule": None,
            "jitter": [list(j) for j in self.jitter],
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }
        if self.nodule is not None:
            n = asdict(self.nodule)
            n["center"] = list(n["center"])
            doc["nodule"] = n
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PhantomSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise SpecOutOfBounds(f"unknown phantom spec keys: {sorted(unknown)}")
        return cls(**doc)


def load_spec(path) -> PhantomSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UnreadableFile(f"cannot read phantom spec {path}: {exc}") from exc
    return PhantomSpec.from_dict(doc)


def save_spec(spec: PhantomSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


def _round_clamp(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def render_scene(spec: PhantomSpec) -> np.ndarray:
    """Noise-free, unjittered scene as float64 (before rounding)."""
    scene = np.full((spec.height, spec.width), float(spec.background))
    r0, r1 = spec.rows
    (a0, a1), (b0, b1) = spec.neck_band_cols
    if spec.neck_intensity is not None:
        scene[r0:r1, a1:b0] = spec.neck_intensity
    scene[r0:r1, a0:a1] = spec.band_intensity
    scene[r0:r1, b0:b1] = spec.band_intensity
    if spec.marker_rect is not None:
        patch = scene[spec.marker_rect.slices]  # view
        inner = patch.copy()
        patch[:] = spec.marker_intensity
        b = spec.marker_outline
        if b and 2 * b < min(patch.shape):
            patch[b:-b, b:-b] = inner[b:-b, b:-b]
    if spec.nodule is not None:
        nod = spec.nodule
        cx, cy = nod.center
        ci = min(max(int(math.floor(cy + 0.5)), 0), spec.height - 1)
        cj = min(max(int(math.floor(cx + 0.5)), 0), spec.width - 1)
        amplitude = nod.peak - scene[ci, cj]
        y, x = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
        r2 = (x - cx) ** 2 + (y - cy) ** 2
        bump = amplitude * np.exp(-r2 / (2.0 * nod.falloff ** 2))
        bump[r2 > nod.radius ** 2] = 0.0
        scene = np.clip(scene + bump, 0.0, 255.0)
    return scene


# The scene continues past the frame edge (edge replication) for this many
# pixels, so jittered frames show neck, not fill, along their borders.
SCENE_MARGIN = 64


def _warp_extended(scene: np.ndarray, theta: float, tx: float, ty: float, fill: float) -> np.ndarray:
    m = SCENE_MARGIN
    canvas = np.pad(scene, m, mode="edge")
    c, s = math.cos(theta), math.sin(theta)
    # same motion expressed in canvas coordinates, q = p + (m, m)
    tx_c = tx + m - (c * m - s * m)
    ty_c = ty + m - (s * m + c * m)
    warped = kernels.warp(canvas, c, s, tx_c, ty_c, True, fill)
    return warped[m:m + scene.shape[0], m:m + scene.shape[1]]


def _metadata(k: int) -> AcquisitionMetadata:
    return AcquisitionMetadata(frame_index=k)


def generate_phantom(spec: PhantomSpec) -> list[ThermalImage]:
    scene = render_scene(spec)
    frames = []
    jitter = spec.jitter or ((0.0, 0.0, 0.0),)
    for k, (theta, tx, ty) in enumerate(jitter):
        if theta == 0.0 and tx == 0.0 and ty == 0.0:
            values = scene.copy()
        else:
            values = _warp_extended(scene, theta, tx, ty, float(spec.background))
        if spec.noise_sigma > 0:
            rng = np.random.default_rng([spec.seed, k])
            values = values + rng.normal(0.0, spec.noise_sigma, size=values.shape)
        frames.append(ThermalImage(_round_clamp(values), meta=_metadata(k)))
    return frames


@dataclass(frozen=True)
class GroundTruth:
    band_rects: tuple
    marker_rect: Optional[Rect]
    nodule_mask: BinaryMask
    jitter: tuple = field(default_factory=tuple)

    def transforms(self) -> list[RigidTransform2D]:
        return [RigidTransform2D(*j) for j in self.jitter]


def ground_truth(spec: PhantomSpec, cutoff: int = 209) -> GroundTruth:
    r0, r1 = spec.rows
    bands = tuple(Rect(c0, r0, c1 - c0, r1 - r0) for c0, c1 in spec.neck_band_cols)
    if spec.nodule is None:
        mask = np.zeros((spec.height, spec.width), dtype=np.uint8)
    else:
        mask = _round_clamp(render_scene(spec)) >= cutoff
    return GroundTruth(bands, spec.marker_rect, BinaryMask(mask), spec.jitter)


# -- standard fixtures -------------------------------------------------------------

def neck_phantom(
    nodule: Optional[Nodule] = None,
    marker: bool = True,
    jitter=(),
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> PhantomSpec:
    """480x480 neck scene sized for the default 330x310 ROI window.

    The bands run over rows 120-429 at columns 75-76 and 403-404, so the only
    window covering both completely is (75, 120). The neck and the marker are
    symmetric about column 239.5, the ROI's centre line. The 50 rows below the
    neck keep jittered ROI content inside the frame.
    """
    return PhantomSpec(
        width=480,
        height=480,
        background=140,
        neck_band_cols=((75, 77), (403, 405)),
        band_intensity=60,
        band_rows=(120, 430),
        neck_intensity=170,
        marker_rect=Rect(228, 20, 24, 100) if marker else None,
        marker_intensity=60,
        marker_outline=3,
        nodule=nodule,
        jitter=tuple(jitter),
        noise_sigma=noise_sigma,
        seed=seed,
    )


def random_jitter(n_frames: int, max_theta_deg: float, max_shift: float, seed: int) -> tuple:
    """``n_frames`` jitters, the first one identity, the rest uniform in range."""
    rng = np.random.default_rng(seed)
    out = [(0.0, 0.0, 0.0)]
    for _ in range(n_frames - 1):
        theta = math.radians(rng.uniform(-max_theta_deg, max_theta_deg))
        tx, ty = rng.uniform(-max_shift, max_shift, size=2)
        out.append((theta, float(tx), float(ty)))
    return tuple(out)
