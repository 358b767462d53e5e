"""Nearest-neighbour diagnosis over the four ROI descriptors.

Two schemes are available:

* ``vote``: every descriptor votes for the gallery patient whose value is
  closest to the query's; the label held by most of the four voted patients
  wins.
* ``knn``: plain k-nearest-neighbour on the Euclidean distance between raw
  (optionally min-max scaled) feature vectors. Without scaling ``std_raw``
  dominates the distance.
"""
from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyGallery, GalleryTooSmall, ThermoscanError, UnreadableFile, ValidationError, parse_enum
from .features import FEATURE_NAMES, FeatureVector

__all__ = [
    "Label",
    "Method",
    "PatientRecord",
    "DistanceTable",
    "VoteResult",
    "feature_distances",
    "per_feature_vote",
    "knn_euclidean",
    "knn_neighbours",
    "classify_batch",
    "BatchReport",
    "read_records",
    "write_records",
]

RECORD_HEADER = ("id",) + FEATURE_NAMES + ("label",)


class Label(str, Enum):
    HEALTHY = "healthy"
    SICK = "sick"


class Method(str, Enum):
    VOTE = "vote"
    KNN = "knn"


@dataclass(frozen=True)
class PatientRecord:
    id: str
    features: FeatureVector
    label: Optional[Label] = None

    def __post_init__(self):
        if self.label is not None and not isinstance(self.label, Label):
            object.__setattr__(self, "label", parse_enum(Label, self.label))

    @classmethod
    def from_values(cls, id, values, label=None) -> "PatientRecord":
        return cls(str(id), FeatureVector(*values), parse_enum(Label, label) if label else None)


@dataclass(frozen=True)
class DistanceTable:
    """Absolute per-feature differences between a query and each gallery patient."""

    ids: tuple
    rows: np.ndarray  # shape (len(ids), 4)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, copy=True).reshape(-1, len(FEATURE_NAMES))
        if rows.shape[0] != len(self.ids):
            raise ValidationError("one row of 4 distances is needed per gallery id")
        if np.any(rows < 0) or not np.all(np.isfinite(rows)):
            raise ValidationError("distances must be finite and non-negative")
        rows.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "rows", rows)

    def row(self, id) -> np.ndarray:
        return self.rows[self.ids.index(id)]


def _check_gallery(gallery: Sequence[PatientRecord]) -> None:
    if not gallery:
        raise EmptyGallery("gallery is empty")
    for rec in gallery:
        if rec.label is None:
            raise ValidationError(f"gallery record {rec.id!r} has no label")


def feature_distances(query: PatientRecord, gallery: Sequence[PatientRecord]) -> DistanceTable:
    if not gallery:
        raise EmptyGallery("gallery is empty")
    if any(g.id == query.id for g in gallery):
        raise ValidationError(f"query {query.id!r} is part of the gallery")
    q = query.features.as_array()
    rows = [np.abs(q - g.features.as_array()) for g in gallery]
    return DistanceTable(tuple(g.id for g in gallery), np.array(rows))


@dataclass(frozen=True)
class VoteResult:
    label: Label
    votes: tuple  # winning gallery id for each feature, in FEATURE_NAMES order
    tally: dict = field(default_factory=dict)  # gallery id -> number of features won

    def as_dict(self) -> dict:
        return {
            "label": self.label.value,
            "votes": dict(zip(FEATURE_NAMES, self.votes)),
            "tally": dict(self.tally),
        }


def per_feature_vote(table: DistanceTable, gallery_labels) -> VoteResult:
    """Let each feature vote for its closest gallery patient.

    ``gallery_labels`` is either a sequence aligned with ``table.ids`` or a
    mapping from id to label. Within a feature the earliest row wins ties.
    When the four votes split 2-2 between labels, the label of the patient
    with the smallest sum of column-max-normalised distances decides.
    """
    if len(table.ids) == 0:
        raise EmptyGallery("distance table is empty")
    if isinstance(gallery_labels, Mapping):
        labels = [parse_enum(Label, gallery_labels[i]) for i in table.ids]
    else:
        labels = [parse_enum(Label, v) for v in gallery_labels]
        if len(labels) != len(table.ids):
            raise ValidationError("one label is needed per distance-table row")
    winners = [int(np.argmin(table.rows[:, f])) for f in range(len(FEATURE_NAMES))]
    counts = Counter(labels[w] for w in winners)
    ranked = counts.most_common()
    if len(ranked) == 1 or ranked[0][1] > ranked[1][1]:
        label = ranked[0][0]
    else:
        col_max = table.rows.max(axis=0)
        scale = np.where(col_max > 0, col_max, 1.0)
        totals = (table.rows / scale).sum(axis=1)
        label = labels[int(np.argmin(totals))]
    votes = tuple(table.ids[w] for w in winners)
    tally = Counter(votes)
    return VoteResult(label, votes, {i: tally[i] for i in table.ids if tally[i]})


def _feature_matrix(query: PatientRecord, gallery: Sequence[PatientRecord], normalize: bool):
    data = np.array([g.features.as_tuple() for g in gallery] + [query.features.as_tuple()])
    if normalize:
        lo = data.min(axis=0)
        span = data.max(axis=0) - lo
        data = np.where(span > 0, (data - lo) / np.where(span > 0, span, 1.0), 0.0)
    return data[:-1], data[-1]


def knn_neighbours(query: PatientRecord, gallery: Sequence[PatientRecord], k: int = 1,
                   normalize: bool = False) -> tuple[Label, list[tuple[str, float]]]:
    """Label plus the ``k`` nearest ``(id, distance)`` pairs, nearest first."""
    _check_gallery(gallery)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if len(gallery) < k:
        raise GalleryTooSmall(f"k={k} but the gallery holds {len(gallery)} records")
    feats, q = _feature_matrix(query, gallery, normalize)
    dists = np.sqrt(((feats - q) ** 2).sum(axis=1))
    order = np.argsort(dists, kind="stable")[:k]
    nearest = [gallery[int(i)] for i in order]
    counts = Counter(r.label for r in nearest).most_common()
    if len(counts) > 1 and counts[0][1] == counts[1][1]:
        label = nearest[0].label
    else:
        label = counts[0][0]
    return label, [(gallery[int(i)].id, float(dists[int(i)])) for i in order]


def knn_euclidean(query: PatientRecord, gallery: Sequence[PatientRecord], k: int = 1,
                  normalize: bool = False) -> Label:
    return knn_neighbours(query, gallery, k, normalize)[0]


@dataclass
class BatchReport:
    entries: list = field(default_factory=list)
    duplicates: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"entries": self.entries, "duplicates": self.duplicates}

    def labels(self) -> dict:
        return {e["id"]: e.get("label") for e in self.entries}

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


def classify_batch(records: Sequence[PatientRecord], gallery: Sequence[PatientRecord],
                   method="vote", k: int = 1, normalize: bool = False) -> BatchReport:
    """Classify each record against the gallery, leaving out its own id.

    The gallery is put in id order first, so the report does not depend on
    how the gallery list was assembled. Per-record failures are reported in
    the entry's ``error`` field instead of being raised.
    """
    method = parse_enum(Method, method)
    ordered = sorted(gallery, key=lambda g: g.id)
    id_counts = Counter(r.id for r in records)
    report = BatchReport(duplicates=sorted(i for i, n in id_counts.items() if n > 1))
    for rec in records:
        entry = {"id": rec.id, "method": method.value}
        others = [g for g in ordered if g.id != rec.id]
        try:
            _check_gallery(others)
            if method is Method.VOTE:
                table = feature_distances(rec, others)
                result = per_feature_vote(table, [g.label for g in others])
                entry.update(result.as_dict())
                entry["distances"] = {
                    gid: dict(zip(FEATURE_NAMES, (round(v, 12) for v in row.tolist())))
                    for gid, row in zip(table.ids, table.rows)
                }
            else:
                label, nearest = knn_neighbours(rec, others, k, normalize)
                entry["label"] = label.value
                entry["k"] = k
                entry["normalize"] = normalize
                entry["neighbours"] = [{"id": i, "distance": round(d, 12)} for i, d in nearest]
        except ThermoscanError as exc:
            entry["label"] = None
            entry["error"] = f"{type(exc).__name__}: {exc}"
        if rec.label is not None:
            entry["true_label"] = rec.label.value
        report.entries.append(entry)
    return report


# -- record files --------------------------------------------------------------------

def read_records(path) -> list[PatientRecord]:
    """Read ``id,mean_norm,std_raw,max_norm,asymmetry,label`` rows."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(n.strip() for n in reader.fieldnames[:5]) != RECORD_HEADER[:5]:
                raise ValidationError(f"{path}: header must start with {','.join(RECORD_HEADER[:5])}")
            records = []
            for lineno, row in enumerate(reader, 2):
                try:
                    values = [float(row[name]) for name in FEATURE_NAMES]
                except (TypeError, ValueError) as exc:
                    raise ValidationError(f"{path}:{lineno}: {exc}") from exc
                label = (row.get("label") or "").strip() or None
                records.append(PatientRecord.from_values(row["id"].strip(), values, label))
            return records
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc


def format_feature(value: float) -> str:
    text = f"{value:.6f}"
    return "0.000000" if text == "-0.000000" else text


def write_records(path, records: Sequence[PatientRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_HEADER)
        for rec in records:
            writer.writerow(
                [rec.id]
                + [format_feature(v) for v in rec.features.as_tuple()]
                + [rec.label.value if rec.label else ""]
            )
