"""Frame-indexed sets of identified boxes (ground truth or tracker output)."""

from __future__ import annotations

from collections import defaultdict
from typing import Dict, List, Tuple

from .geometry import BBox

# frame -> [(id, box), ...]
TrackSet = Dict[int, List[Tuple[int, BBox]]]


def from_records(records) -> TrackSet:
    """Build a track set from ``(frame, id, bbox)`` rows."""
    out: TrackSet = defaultdict(list)
    for frame, tid, box in records:
        out[int(frame)].append((int(tid), box))
    return dict(sorted(out.items()))


def to_records(ts: TrackSet):
    return sorted(((f, tid, box) for f, items in ts.items() for tid, box in items), key=lambda r: (r[0], r[1]))


def by_track(ts: TrackSet) -> dict[int, list[tuple[int, BBox]]]:
    """Regroup as ``id -> [(frame, box), ...]`` sorted by frame."""
    out = defaultdict(list)
    for frame in sorted(ts):
        for tid, box in ts[frame]:
            out[tid].append((frame, box))
    return dict(sorted(out.items()))


def check_unique_ids(ts: TrackSet, name: str = "track set") -> None:
    for frame, items in ts.items():
        ids = [tid for tid, _ in items]
        if len(ids) != len(set(ids)):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"{name}: duplicate id(s) {dup} in frame {frame}")


def all_boxes(ts: TrackSet) -> list[BBox]:
    return [box for items in ts.values() for _, box in items]


def num_boxes(ts: TrackSet) -> int:
    return sum(len(v) for v in ts.values())
