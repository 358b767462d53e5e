"""Phantom scenes and galleries shared by the test modules."""
import json
from pathlib import Path

from thermoscan.classifier import PatientRecord, write_records
from thermoscan.core import save_image
from thermoscan.features import extract_features
from thermoscan.registration import SearchParams
from thermoscan.roi import detect_thyroid_roi
from thermoscan.synthgen import Nodule, generate_phantom, neck_phantom, random_jitter

# coarse grid, deep refinement: same accuracy as the defaults at a fraction of the cost
FAST_SEARCH = SearchParams.from_degrees(4, 12, 2, 4, 4)
FAST_SEARCH_DOC = {"theta_range_deg": 4, "trans_range": 12, "theta_step_deg": 2, "trans_step": 4, "refine_levels": 4}

SICK_NODULE = Nodule((300, 260), 45, 250, 14)
HEALTHY_NODULE = Nodule((239.5, 280), 36, 220, 21)  # on the midline, below the cutoff peak of a nodule

GALLERY = (
    ("g_healthy1", Nodule((239.5, 270), 35, 222, 20), "healthy"),
    ("g_healthy2", Nodule((239.5, 290), 38, 218, 22), "healthy"),
    ("g_sick1", Nodule((310, 250), 40, 250, 14), "sick"),
    ("g_sick2", Nodule((180, 300), 42, 248, 15), "sick"),
)


def gallery_records():
    out = []
    for i, (gid, nodule, label) in enumerate(GALLERY):
        img = generate_phantom(neck_phantom(nodule, noise_sigma=2, seed=100 + i))[0]
        out.append(PatientRecord(gid, extract_features(img, detect_thyroid_roi(img)), label))
    return out


def write_sequence(spec, directory: Path) -> list[str]:
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for k, frame in enumerate(generate_phantom(spec)):
        name = f"frame_{k:03d}.pgm"
        save_image(frame, directory / name)
        names.append(name)
    return names


def write_pipeline_case(root: Path, name: str, nodule, method: str, n_frames: int = 3, out_dir=None) -> Path:
    """Write frames, gallery and config for one patient; return the config path."""
    root.mkdir(parents=True, exist_ok=True)
    gallery = root / "gallery.csv"
    if not gallery.exists():
        write_records(gallery, gallery_records())
    spec = neck_phantom(nodule, jitter=random_jitter(n_frames, 2.0, 5.0, seed=7), noise_sigma=2, seed=5)
    case = root / name
    frames = write_sequence(spec, case)
    config = {
        "frames": frames,
        "gallery": "../gallery.csv",
        "out_dir": str(out_dir) if out_dir else f"out_{method}",
        "patient_id": name,
        "registration": FAST_SEARCH_DOC,
        "classifier": {"method": method, "k": 1, "normalize": method == "knn"},
    }
    path = case / f"config_{method}.json"
    path.write_text(json.dumps(config, indent=2))
    return path
