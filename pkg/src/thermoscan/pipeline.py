"""End-to-end processing of one acquisition sequence.

Stages: register every frame to the first one, locate the ROI on the
reference, threshold and describe each registered frame, and classify the
frame descriptors against a labelled gallery.

Artifacts written to the output directory (names are stable)::

    transforms.txt       frame theta t_x t_y
    roi.txt              x y w h
    registered/frame_NNN.pgm
    masks/mask_NNN.pgm   thresholded ROI of each registered frame
    features.csv         one descriptor row per frame
    report.json          per-frame classification plus the patient verdict
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .classifier import Method, PatientRecord, classify_batch, read_records, write_records
from .core import Rect, crop, load_image, save_image, save_mask
from .edge_filter import FilterParams
from .errors import ValidationError, parse_enum
from .features import DEFAULT_CUTOFF, extract_features, threshold
from .registration import (
    RegistrationMode,
    RigidTransform2D,
    SearchParams,
    register_sequence,
    write_transforms,
)
from .roi import RoiParams, detect_thyroid_roi

__all__ = ["PipelineConfig", "PipelineResult", "run_pipeline", "frame_id"]


@dataclass(frozen=True)
class PipelineConfig:
    frames: tuple
    gallery: Path
    out_dir: Path
    patient_id: str = "patient"
    filter_params: FilterParams = FilterParams()
    roi_params: RoiParams = RoiParams()
    mode: RegistrationMode = RegistrationMode.ROI_FIRST
    search: SearchParams = SearchParams()
    cutoff: int = DEFAULT_CUTOFF
    method: Method = Method.VOTE
    k: int = 1
    normalize: bool = False

    def validate(self) -> None:
        if not self.frames:
            raise ValidationError("pipeline needs at least one frame")
        missing = [str(p) for p in (*self.frames, self.gallery) if not Path(p).is_file()]
        if missing:
            raise ValidationError(f"missing input files: {', '.join(missing)}")
        if not 0 <= self.cutoff <= 255:
            raise ValidationError(f"cutoff {self.cutoff} outside [0, 255]")
        if self.k < 1:
            raise ValidationError("k must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path = Path(".")) -> "PipelineConfig":
        """Build from the JSON config layout; relative paths resolve against ``base_dir``."""
        try:
            def path(p):
                p = Path(p)
                return p if p.is_absolute() else base_dir / p

            reg = dict(doc.get("registration", {}))
            search = SearchParams.from_degrees(
                theta_range_deg=reg.pop("theta_range_deg", 10.0),
                trans_range=reg.pop("trans_range", 15.0),
                theta_step_deg=reg.pop("theta_step_deg", 0.5),
                trans_step=reg.pop("trans_step", 1.0),
                refine_levels=reg.pop("refine_levels", 3),
                metric=reg.pop("metric", "mad"),
            )
            mode = RegistrationMode.parse(reg.pop("mode", "roi_first"))
            if reg:
                raise ValidationError(f"unknown registration keys: {sorted(reg)}")
            clf = dict(doc.get("classifier", {}))
            return cls(
                frames=tuple(path(p) for p in doc["frames"]),
                gallery=path(doc["gallery"]),
                out_dir=path(doc["out_dir"]),
                patient_id=str(doc.get("patient_id", "patient")),
                filter_params=FilterParams(**doc.get("filter", {})),
                roi_params=RoiParams(**doc.get("roi", {})),
                mode=mode,
                search=search,
                cutoff=int(doc.get("cutoff", DEFAULT_CUTOFF)),
                method=parse_enum(Method, clf.get("method", "vote")),
                k=int(clf.get("k", 1)),
                normalize=bool(clf.get("normalize", False)),
            )
        except KeyError as exc:
            raise ValidationError(f"config is missing required key {exc}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"bad config value: {exc}") from exc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc, path.parent)


@dataclass
class PipelineResult:
    roi: Rect
    transforms: list
    records: list
    label: Optional[str]
    report: dict = field(default_factory=dict)


def frame_id(patient_id: str, k: int) -> str:
    return f"{patient_id}_f{k:03d}"


def patient_verdict(labels: list) -> Optional[str]:
    """Majority label over frames; a tie goes to the reference frame's label."""
    known = [lab for lab in labels if lab is not None]
    if not known:
        return None
    ranked = Counter(known).most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return labels[0]
    return ranked[0][0]


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    config.validate()
    frames = [load_image(p) for p in config.frames]
    gallery = read_records(config.gallery)
    out = Path(config.out_dir)
    (out / "registered").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)

    if len(frames) > 1:
        registered = register_sequence(
            frames, config.mode, config.search, config.filter_params, config.roi_params
        )
    else:
        registered = [(RigidTransform2D.identity(), frames[0])]
    transforms = [T for T, _ in registered]
    write_transforms(out / "transforms.txt", transforms)

    roi = detect_thyroid_roi(registered[0][1], config.filter_params, config.roi_params)
    (out / "roi.txt").write_text(f"{roi}\n")

    records = []
    for k, (_, img) in enumerate(registered):
        save_image(img, out / "registered" / f"frame_{k:03d}.pgm", sidecar=False)
        save_mask(threshold(crop(img, roi), config.cutoff), out / "masks" / f"mask_{k:03d}.pgm")
        records.append(PatientRecord(frame_id(config.patient_id, k), extract_features(img, roi, config.cutoff)))
    write_records(out / "features.csv", records)

    batch = classify_batch(records, gallery, config.method, config.k, config.normalize)
    labels = [e.get("label") for e in batch.entries]
    verdict = patient_verdict(labels)
    report = {
        "patient_id": config.patient_id,
        "label": verdict,
        "method": config.method.value,
        "roi": [roi.x, roi.y, roi.w, roi.h],
        "frames": batch.as_dict(),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return PipelineResult(roi, transforms, records, verdict, report)
