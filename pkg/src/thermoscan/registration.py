"""Rigid registration of thermogram sequences.

A :class:`RigidTransform2D` maps a point ``(x, y)`` (column, row) to
``(x cos(theta) - y sin(theta) + t_x, x sin(theta) + y cos(theta) + t_y)``,
i.e. a proper rotation about the image origin followed by a translation.

Two ways of estimating one are provided: a closed-form least-squares fit
from corresponding keypoints, and a deterministic grid search (with
step-halving refinement) that compares the ROI of a reference frame with
the warped ROI of a moving frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import ndimage

from . import kernels
from .core import BinaryMask, Rect, ThermalImage
from .edge_filter import FilterParams, directional_valley
from .errors import (
    DegenerateConfiguration,
    DimensionMismatch,
    EmptySearchSpace,
    UnreadableFile,
    ValidationError,
    parse_enum,
)
from .roi import RoiParams, detect_thyroid_roi

__all__ = [
    "RigidTransform2D",
    "KeypointPairSet",
    "Metric",
    "Interpolation",
    "RegistrationMode",
    "SearchParams",
    "MAX_SCORE",
    "apply_transform",
    "compose",
    "warp_image",
    "fit_rigid_from_keypoints",
    "mean_abs_difference",
    "chamfer_distance",
    "register_by_roi",
    "register_sequence",
    "load_keypoints",
    "write_transforms",
    "read_transforms",
]

# Score reported by chamfer_distance when exactly one mask is empty.
MAX_SCORE = math.inf


def _normalize_angle(theta: float) -> float:
    theta = float(theta)
    if -math.pi < theta <= math.pi:
        return theta
    return math.pi - ((math.pi - theta) % (2.0 * math.pi))


@dataclass(frozen=True)
class RigidTransform2D:
    theta: float = 0.0
    t_x: float = 0.0
    t_y: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", _normalize_angle(self.theta))
        object.__setattr__(self, "t_x", float(self.t_x))
        object.__setattr__(self, "t_y", float(self.t_y))

    @classmethod
    def identity(cls) -> "RigidTransform2D":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_degrees(cls, theta_deg: float, t_x: float = 0.0, t_y: float = 0.0) -> "RigidTransform2D":
        return cls(math.radians(theta_deg), t_x, t_y)

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)

    def matrix(self) -> np.ndarray:
        """3x3 homogeneous matrix."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s, self.t_x], [s, c, self.t_y], [0.0, 0.0, 1.0]])

    def __call__(self, point):
        return apply_transform(self, point)

    def inverse(self) -> "RigidTransform2D":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return RigidTransform2D(
            -self.theta,
            -(c * self.t_x + s * self.t_y),
            -(-s * self.t_x + c * self.t_y),
        )


def apply_transform(T: RigidTransform2D, p) -> tuple[float, float]:
    x, y = p
    c, s = math.cos(T.theta), math.sin(T.theta)
    return (x * c - y * s + T.t_x, x * s + y * c + T.t_y)


def compose(T2: RigidTransform2D, T1: RigidTransform2D) -> RigidTransform2D:
    """Transform equal to applying ``T1`` first, then ``T2``."""
    tx, ty = apply_transform(RigidTransform2D(T2.theta), (T1.t_x, T1.t_y))
    return RigidTransform2D(T1.theta + T2.theta, tx + T2.t_x, ty + T2.t_y)


class Interpolation(str, Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"


def _warp_array(values: np.ndarray, T: RigidTransform2D, interpolation, fill: float = 0.0) -> np.ndarray:
    interpolation = parse_enum(Interpolation, interpolation)
    return kernels.warp(
        np.asarray(values, dtype=np.float64),
        math.cos(T.theta),
        math.sin(T.theta),
        T.t_x,
        T.t_y,
        interpolation is Interpolation.BILINEAR,
        fill,
    )


def warp_image(img: ThermalImage, T: RigidTransform2D, interpolation="bilinear") -> ThermalImage:
    """Resample ``img`` so that content at ``p`` moves to ``T(p)``.

    Output pixels are sampled at ``T^-1`` of their own coordinates; samples
    falling outside the source are 0. Bilinear results are rounded half up.
    """
    warped = _warp_array(img.pixels, T, interpolation)
    return img.with_pixels(np.clip(np.floor(warped + 0.5), 0, 255).astype(np.uint8))


# -- keypoints --------------------------------------------------------------------

@dataclass(frozen=True)
class KeypointPairSet:
    """Corresponding points: ``moving[k]`` should land on ``reference[k]``."""

    moving: tuple
    reference: tuple

    def __post_init__(self):
        moving = tuple((float(x), float(y)) for x, y in self.moving)
        reference = tuple((float(x), float(y)) for x, y in self.reference)
        if len(moving) != len(reference):
            raise ValidationError("moving and reference point lists differ in length")
        object.__setattr__(self, "moving", moving)
        object.__setattr__(self, "reference", reference)

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "KeypointPairSet":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def __len__(self):
        return len(self.moving)


def fit_rigid_from_keypoints(pairs) -> RigidTransform2D:
    """Least-squares rigid fit (rotation + translation, no scale).

    With both point sets centred on their centroids, the optimal angle is
    ``atan2(sum(a x b), sum(a . b))`` and the translation maps the moving
    centroid onto the reference centroid.
    """
    if not isinstance(pairs, KeypointPairSet):
        pairs = KeypointPairSet.from_pairs(pairs)
    if len(pairs) < 2:
        raise DegenerateConfiguration(f"a rigid fit needs at least 2 pairs, got {len(pairs)}")
    mov = np.asarray(pairs.moving)
    ref = np.asarray(pairs.reference)
    mov_c = mov.mean(axis=0)
    ref_c = ref.mean(axis=0)
    a = mov - mov_c
    b = ref - ref_c
    if not np.any(np.abs(a) > 1e-12):
        raise DegenerateConfiguration("all moving points coincide")
    cross = float(np.sum(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]))
    dot = float(np.sum(a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]))
    theta = math.atan2(cross, dot)
    rx, ry = apply_transform(RigidTransform2D(theta), mov_c)
    return RigidTransform2D(theta, ref_c[0] - rx, ref_c[1] - ry)


def load_keypoints(path) -> KeypointPairSet:
    """Read ``x_mov y_mov x_ref y_ref`` lines; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    moving, reference = [], []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 4:
            raise ValidationError(f"{path}:{lineno}: expected 4 numbers, got {len(parts)}")
        try:
            xm, ym, xr, yr = (float(v) for v in parts)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        moving.append((xm, ym))
        reference.append((xr, yr))
    return KeypointPairSet(tuple(moving), tuple(reference))


# -- similarity --------------------------------------------------------------------

def mean_abs_difference(ref: ThermalImage, mov: ThermalImage, region: Rect) -> float:
    """Mean of ``|ref - mov| / 255`` over ``region``; 0 for identical content."""
    region.check_within(ref.width, ref.height)
    region.check_within(mov.width, mov.height)
    a = ref.pixels[region.slices].astype(np.int32)
    b = mov.pixels[region.slices].astype(np.int32)
    return float(np.abs(a - b).sum(dtype=np.int64)) / (255.0 * region.w * region.h)


def _edt(values: np.ndarray) -> np.ndarray:
    """Euclidean distance from every pixel to the nearest 1-pixel."""
    return ndimage.distance_transform_edt(values == 0)


def _chamfer(a: np.ndarray, b: np.ndarray, dt_a: Optional[np.ndarray] = None) -> float:
    a_on = a != 0
    b_on = b != 0
    na, nb = int(a_on.sum()), int(b_on.sum())
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return MAX_SCORE
    if dt_a is None:
        dt_a = _edt(a)
    dt_b = _edt(b)
    return 0.5 * (float(dt_b[a_on].mean()) + float(dt_a[b_on].mean()))


def chamfer_distance(a: BinaryMask, b: BinaryMask) -> float:
    """Symmetric mean nearest-edge distance between two masks.

    0 when both are empty, :data:`MAX_SCORE` when only one is.
    """
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    return _chamfer(a.values, b.values)


# -- search ------------------------------------------------------------------------

class Metric(str, Enum):
    MEAN_ABS_DIFF = "mean_abs_diff"
    CHAMFER = "chamfer"

    @classmethod
    def parse(cls, text: str) -> "Metric":
        return cls.MEAN_ABS_DIFF if text == "mad" else parse_enum(cls, text)


@dataclass(frozen=True)
class SearchParams:
    """Grid-search bounds. Ranges are half-widths around zero.

    Defaults: theta in +-10 deg by 0.5 deg, translations in +-15 px by 1 px,
    three step-halving refinement levels.
    """

    theta_range: float = math.radians(10.0)
    trans_range: float = 15.0
    theta_step: float = math.radians(0.5)
    trans_step: float = 1.0
    refine_levels: int = 3
    metric: Metric = Metric.MEAN_ABS_DIFF

    def __post_init__(self):
        metric = Metric.parse(self.metric) if isinstance(self.metric, str) else parse_enum(Metric, self.metric)
        object.__setattr__(self, "metric", metric)
        if not (self.theta_step > 0 and self.trans_step > 0):
            raise EmptySearchSpace("search steps must be positive")
        if self.theta_range < 0 or self.trans_range < 0:
            raise EmptySearchSpace("search ranges must be non-negative")
        if self.refine_levels < 0:
            raise ValidationError("refine_levels must be >= 0")

    @classmethod
    def from_degrees(cls, theta_range_deg=10.0, trans_range=15.0, theta_step_deg=0.5, trans_step=1.0,
                     refine_levels=3, metric=Metric.MEAN_ABS_DIFF) -> "SearchParams":
        return cls(math.radians(theta_range_deg), trans_range, math.radians(theta_step_deg), trans_step,
                   refine_levels, Metric.parse(metric) if isinstance(metric, str) else metric)


def _axis_values(half_range: float, step: float) -> list[float]:
    k = int(math.floor(half_range / step + 1e-9))
    return [i * step for i in range(-k, k + 1)]


class _Objective:
    """Memoised score of a candidate (theta, t_x, t_y) on a fixed ROI."""

    def __init__(self, ref: ThermalImage, mov: ThermalImage, roi: Rect, metric: Metric,
                 filter_params: FilterParams):
        self.roi = roi
        self.metric = metric
        self.cache: dict = {}
        if metric is Metric.MEAN_ABS_DIFF:
            self.ref = np.ascontiguousarray(ref.pixels)
            self.mov = np.ascontiguousarray(mov.pixels)
        else:
            ref_edges = directional_valley(ref, filter_params).values
            self.ref_roi_edges = ref_edges[roi.slices]
            self.ref_dt = _edt(self.ref_roi_edges) if self.ref_roi_edges.any() else None
            self.mov_edges = directional_valley(mov, filter_params).values.astype(np.float64)

    def __call__(self, cand: tuple[float, float, float]):
        score = self.cache.get(cand)
        if score is None:
            score = self._evaluate(*cand)
            self.cache[cand] = score
        return score

    def _evaluate(self, theta, tx, ty):
        c, s = math.cos(theta), math.sin(theta)
        roi = self.roi
        if self.metric is Metric.MEAN_ABS_DIFF:
            # integer sum: exact ties, converted to the [0, 1] scale at the end
            return kernels.warp_abs_diff(self.ref, self.mov, c, s, tx, ty, roi.x, roi.y, roi.w, roi.h)
        warped = kernels.warp(self.mov_edges, c, s, tx, ty, False, 0.0)
        return _chamfer(self.ref_roi_edges, warped[roi.slices], self.ref_dt)

    def normalized(self, raw) -> float:
        if self.metric is Metric.MEAN_ABS_DIFF:
            return raw / (255.0 * self.roi.w * self.roi.h)
        return raw


def _rank(score, cand):
    theta, tx, ty = cand
    return (score, abs(theta), abs(tx), abs(ty))


def _search(objective: _Objective, sp: SearchParams) -> tuple[tuple[float, float, float], object]:
    thetas = _axis_values(sp.theta_range, sp.theta_step)
    shifts = _axis_values(sp.trans_range, sp.trans_step)
    if not thetas or not shifts:
        raise EmptySearchSpace("no candidate transforms in range")
    best = None
    best_key = None
    for theta in thetas:
        for tx in shifts:
            for ty in shifts:
                cand = (theta, tx, ty)
                key = _rank(objective(cand), cand)
                if best_key is None or key < best_key:
                    best, best_key = cand, key
    # Refinement: rotations pivot on the ROI centre (translation compensated),
    # which follows the valley that rotating about the image origin creates.
    cx, cy = objective.roi.x + (objective.roi.w - 1) / 2.0, objective.roi.y + (objective.roi.h - 1) / 2.0
    theta_step, trans_step = sp.theta_step, sp.trans_step
    eps = 1e-9
    for _ in range(sp.refine_levels):
        theta_step /= 2.0
        trans_step /= 2.0
        for _ in range(64):
            moved = False
            theta0, tx0, ty0 = best
            px, py = apply_transform(RigidTransform2D(theta0), (cx, cy))
            for dth in (-theta_step, 0.0, theta_step):
                theta = theta0 + dth
                if abs(theta) > sp.theta_range + eps:
                    continue
                qx, qy = apply_transform(RigidTransform2D(theta), (cx, cy))
                base_x = tx0 + px - qx
                base_y = ty0 + py - qy
                for dx in (-trans_step, 0.0, trans_step):
                    tx = base_x + dx
                    if abs(tx) > sp.trans_range + eps:
                        continue
                    for dy in (-trans_step, 0.0, trans_step):
                        ty = base_y + dy
                        if abs(ty) > sp.trans_range + eps:
                            continue
                        cand = (theta, tx, ty)
                        key = _rank(objective(cand), cand)
                        if key < best_key:
                            best, best_key = cand, key
                            moved = True
            if not moved:
                break
    return best, best_key[0]


def register_by_roi(
    ref: ThermalImage,
    mov: ThermalImage,
    roi: Rect,
    sp: SearchParams = SearchParams(),
    filter_params: FilterParams = FilterParams(),
    return_score: bool = False,
):
    """Transform that best aligns ``mov`` onto ``ref`` inside ``roi``.

    ``warp_image(mov, T)`` is the registered frame. Candidates are compared
    by score, then by smaller ``|theta|``, ``|t_x|``, ``|t_y|``.
    """
    roi.check_within(ref.width, ref.height)
    if ref.shape != mov.shape:
        raise DimensionMismatch(f"frame shapes differ: {ref.shape} vs {mov.shape}")
    objective = _Objective(ref, mov, roi, sp.metric, filter_params)
    (theta, tx, ty), raw = _search(objective, sp)
    T = RigidTransform2D(theta, tx, ty)
    if return_score:
        return T, objective.normalized(raw)
    return T


class RegistrationMode(str, Enum):
    ROI_FIRST = "roi_first"
    REGISTER_FIRST = "register_first"

    @classmethod
    def parse(cls, text: str) -> "RegistrationMode":
        return parse_enum(cls, text.replace("-", "_"))


def register_sequence(
    frames: Sequence[ThermalImage],
    mode="roi_first",
    sp: SearchParams = SearchParams(),
    filter_params: FilterParams = FilterParams(),
    roi_params: RoiParams = RoiParams(),
    interpolation="bilinear",
) -> list[tuple[RigidTransform2D, ThermalImage]]:
    """Register every frame to ``frames[0]``.

    ``roi_first`` locates the ROI on the reference and scores only inside
    it; ``register_first`` scores whole frames (the ROI is then located on
    the reference by the caller). Returns ``(transform, registered frame)``
    per input frame; the reference gets the identity and is returned as is.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise ValidationError(f"a sequence needs at least 2 frames, got {len(frames)}")
    mode = RegistrationMode.parse(mode) if isinstance(mode, str) else parse_enum(RegistrationMode, mode)
    ref = frames[0]
    for k, frame in enumerate(frames[1:], 1):
        if frame.shape != ref.shape:
            raise DimensionMismatch(f"frame {k} shape {frame.shape} differs from reference {ref.shape}")
    if mode is RegistrationMode.ROI_FIRST:
        region = detect_thyroid_roi(ref, filter_params, roi_params)
    else:
        region = Rect(0, 0, ref.width, ref.height)
    out = [(RigidTransform2D.identity(), ref)]
    for frame in frames[1:]:
        T = register_by_roi(ref, frame, region, sp, filter_params)
        out.append((T, warp_image(frame, T, interpolation)))
    return out


def write_transforms(path, transforms: Sequence[RigidTransform2D]) -> None:
    """One line per frame: ``frame theta t_x t_y`` (theta in radians)."""
    lines = [f"{k} {T.theta:.12g} {T.t_x:.12g} {T.t_y:.12g}" for k, T in enumerate(transforms)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_transforms(path) -> list[RigidTransform2D]:
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        _, theta, tx, ty = line.split()
        out.append(RigidTransform2D(float(theta), float(tx), float(ty)))
    return out
