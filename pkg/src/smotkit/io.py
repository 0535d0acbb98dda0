"""MOTChallenge text files, COCO JSON and sequence-directory discovery."""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from pathlib import Path

from .association import Detection
from .geometry import BBox
from .trackset import TrackSet, from_records

log = logging.getLogger(__name__)


class MotFormatError(ValueError):
    """A MOT file had no usable rows; ``line_errors`` lists what went wrong."""

    def __init__(self, path, line_errors):
        self.line_errors = list(line_errors)
        first = "; ".join(self.line_errors[:3])
        super().__init__(f"{path}: no valid rows ({len(self.line_errors)} malformed): {first}")


def _parse_row(line: str, lineno: int, min_cols: int):
    parts = [p.strip() for p in line.replace(" ", ",").split(",") if p.strip() != ""] if "," not in line else [
        p.strip() for p in line.split(",")
    ]
    if len(parts) < min_cols:
        raise ValueError(f"line {lineno}: expected at least {min_cols} columns, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"line {lineno}: non-numeric field in {line.strip()!r}") from None
    if not all(math.isfinite(v) for v in vals[:7]):
        raise ValueError(f"line {lineno}: non-finite value")
    frame = vals[0]
    if frame != int(frame) or frame < 1:
        raise ValueError(f"line {lineno}: frame must be an integer >= 1, got {parts[0]}")
    if vals[4] <= 0 or vals[5] <= 0:
        raise ValueError(f"line {lineno}: box width and height must be positive, got w={parts[4]} h={parts[5]}")
    return vals


def _read_rows(path, min_cols: int, errors: list | None):
    path = Path(path)
    rows, bad = [], []
    text = path.read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            rows.append(_parse_row(line, lineno, min_cols))
        except ValueError as exc:
            bad.append(str(exc))
    for msg in bad:
        log.warning("%s: %s", path, msg)
    if errors is not None:
        errors.extend(bad)
    if not rows:
        if bad:
            raise MotFormatError(path, bad)
        log.warning("%s: file has no rows", path)
    return rows


def parse_mot_dets(path, errors: list | None = None) -> dict[int, list[Detection]]:
    """Read ``frame,-1,x,y,w,h,score,...`` rows grouped by frame.

    Malformed rows are skipped and described (with line numbers) in
    ``errors``; a file whose rows are all malformed raises
    :class:`MotFormatError`.
    """
    out: dict[int, list[Detection]] = defaultdict(list)
    for vals in _read_rows(path, 7, errors if errors is not None else []):
        score = vals[6]
        if not 0.0 <= score <= 1.0:
            msg = f"{path}: frame {int(vals[0])}: score {score} outside [0, 1], clipped"
            log.warning(msg)
            score = min(1.0, max(0.0, score))
        out[int(vals[0])].append(Detection(int(vals[0]), BBox(*vals[2:6]), score))
    return dict(sorted(out.items()))


def parse_mot_tracks(path, gt: bool = False, errors: list | None = None) -> TrackSet:
    """Read ``frame,id,x,y,w,h,...`` rows as a track set.

    For ground truth (``gt=True``) rows whose 7th column is 0 are the MOT
    "do not evaluate" entries and are skipped.
    """
    recs = []
    for vals in _read_rows(path, 6, errors):
        if gt and len(vals) >= 7 and vals[6] == 0:
            continue
        recs.append((int(vals[0]), int(vals[1]), BBox(*vals[2:6])))
    return from_records(recs)


def format_track_row(frame: int, tid: int, box: BBox) -> str:
    return f"{frame},{tid},{box.x:.2f},{box.y:.2f},{box.w:.2f},{box.h:.2f},1,-1,-1,-1\n"


def write_mot_tracks(records, path) -> None:
    """Write ``(frame, id, bbox)`` rows sorted by (frame, id) with 2-decimal coordinates."""
    rows = sorted(((int(f), int(i), b) for f, i, b in records), key=lambda r: (r[0], r[1]))
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.writelines(format_track_row(*r) for r in rows)


def write_mot_dets(dets_by_frame, path) -> None:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        for frame in sorted(dets_by_frame):
            for d in dets_by_frame[frame]:
                b = d.bbox
                fh.write(f"{frame},-1,{b.x:.2f},{b.y:.2f},{b.w:.2f},{b.h:.2f},{d.score:.4f},-1,-1,-1\n")


def write_trackset(ts: TrackSet, path) -> None:
    write_mot_tracks(((f, tid, b) for f, items in ts.items() for tid, b in items), path)


# -- sequence layouts ---------------------------------------------------------

_LAYOUTS = {
    "gt": ("gt/gt.txt",),
    "det": ("det/det.txt",),
    "pred": (),
}


def find_sequences(root, kind: str) -> dict[str, Path]:
    """Map sequence name -> file for a MOT-style directory (or a single file).

    Accepted layouts: ``<root>/<seq>/gt/gt.txt`` (gt), ``<root>/<seq>/det/det.txt``
    (det) and flat ``<root>/<seq>.txt`` for every kind.
    """
    root = Path(root)
    if root.is_file():
        return {root.stem: root}
    if not root.is_dir():
        raise FileNotFoundError(f"no such file or directory: {root}")
    found = {}
    for child in sorted(root.iterdir()):
        if child.is_dir():
            for rel in _LAYOUTS[kind]:
                if (child / rel).is_file():
                    found[child.name] = child / rel
                    break
        elif child.suffix == ".txt":
            found.setdefault(child.stem, child)
    return dict(sorted(found.items()))


# -- COCO -------------------------------------------------------------------


def load_coco(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "images" not in data:
        raise ValueError(f"{path}: not a COCO annotation file (missing 'images')")
    ids = {img["id"] for img in data["images"]}
    for a in data.get("annotations", []):
        if a["image_id"] not in ids:
            raise ValueError(f"{path}: annotation {a.get('id')} references unknown image {a['image_id']}")
    return data


def save_coco(data: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def mot_to_coco(gt: TrackSet, image_w: int, image_h: int, file_pattern: str = "{frame:06d}.jpg") -> dict:
    """COCO dict with one image per frame and one annotation per GT box."""
    images, anns = [], []
    for frame in sorted(gt):
        images.append({"id": frame, "file_name": file_pattern.format(frame=frame), "width": image_w, "height": image_h})
        for tid, b in sorted(gt[frame], key=lambda r: r[0]):
            anns.append(
                {
                    "id": len(anns) + 1,
                    "image_id": frame,
                    "category_id": 1,
                    "bbox": [b.x, b.y, b.w, b.h],
                    "area": b.w * b.h,
                    "iscrowd": 0,
                    "track_id": tid,
                }
            )
    return {"images": images, "annotations": anns, "categories": [{"id": 1, "name": "object"}]}
