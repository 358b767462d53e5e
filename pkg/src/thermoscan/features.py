"""Hot-region segmentation and the four ROI descriptors.

Three descriptors summarise the pixels at or above the threshold (normalised
mean, raw standard deviation, normalised maximum). The fourth measures left /
right asymmetry of the whole ROI: each pixel is compared with the best match
in the 3x3 neighbourhood of its mirror across the vertical centre line.
"""
from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from . import kernels
from .core import BinaryMask, Rect, ThermalImage, crop
from .errors import EmptySegment, ValidationError

__all__ = [
    "DEFAULT_CUTOFF",
    "FEATURE_NAMES",
    "FeatureVector",
    "threshold",
    "segment_stats",
    "asymmetry",
    "extract_features",
]

DEFAULT_CUTOFF = 209
FEATURE_NAMES = ("mean_norm", "std_raw", "max_norm", "asymmetry")
FEATURE_RANGES = {"mean_norm": (0.0, 1.0), "std_raw": (0.0, 127.5), "max_norm": (0.0, 1.0), "asymmetry": (0.0, 1.0)}


@dataclass(frozen=True)
class FeatureVector:
    mean_norm: float
    std_raw: float
    max_norm: float
    asymmetry: float

    def __post_init__(self):
        for name in FEATURE_NAMES:
            value = float(getattr(self, name))
            lo, hi = FEATURE_RANGES[name]
            if not lo <= value <= hi:
                raise ValidationError(f"{name} = {value} outside [{lo}, {hi}]")
            object.__setattr__(self, name, value)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return astuple(self)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)


def threshold(img: ThermalImage, cutoff: int = DEFAULT_CUTOFF) -> BinaryMask:
    """1 where intensity >= cutoff."""
    if not 0 <= cutoff <= 255:
        raise ValidationError(f"cutoff must be in [0, 255], got {cutoff}")
    return BinaryMask(img.pixels >= cutoff)


def segment_stats(img: ThermalImage, mask: BinaryMask) -> tuple[float, float, float]:
    """``(mean / 255, population std, max / 255)`` of the masked pixels."""
    if img.shape != mask.shape:
        raise ValidationError(f"mask shape {mask.shape} differs from image {img.shape}")
    values = img.pixels[mask.values.astype(bool)].astype(np.float64)
    if values.size == 0:
        raise EmptySegment("no pixel reaches the threshold; there is no hot region")
    return float(values.mean() / 255.0), float(values.std()), float(values.max() / 255.0)


def asymmetry(roi_img: ThermalImage) -> float:
    """Mean best-match difference between each pixel and its mirror neighbourhood.

    For pixel ``(i, j)`` of an ``m x n`` ROI the mirror column is
    ``n - 1 - j``; the term is the smallest ``|I(i, j) - I(i + p, n - 1 - j + q)|``
    over ``p, q`` in ``{-1, 0, 1}`` (indices clamped to the ROI), divided by 255.
    The result averages the terms over all ``m * n`` pixels and lies in [0, 1].
    """
    m, n = roi_img.shape
    if n < 2:
        raise ValidationError("asymmetry needs an ROI at least 2 pixels wide")
    return kernels.asymmetry_sum(roi_img.pixels) / (255.0 * m * n)


def extract_features(img: ThermalImage, roi: Rect, cutoff: int = DEFAULT_CUTOFF) -> FeatureVector:
    region = crop(img, roi)
    mean_norm, std_raw, max_norm = segment_stats(region, threshold(region, cutoff))
    return FeatureVector(mean_norm, std_raw, max_norm, asymmetry(region))
