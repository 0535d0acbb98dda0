"""Synthetic multi-target scenarios with known ground truth.

Randomness comes from numpy's Philox-4x32 counter-based generator seeded with
``ScenarioSpec.seed``; every draw happens in a fixed order so a spec maps to
exactly one scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .association import Detection
from .geometry import BBox
from .trackset import TrackSet

MOTION_MODELS = ("linear", "ema-turn", "crossing-pairs")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str = "sim"
    n_targets: int = 6
    n_frames: int = 100
    image_w: int = 1920
    image_h: int = 1080
    motion_model: str = "linear"
    # std of the per-frame heading impulse (rad) for ema-turn; the turn rate
    # itself is an EMA of the impulses with factor turn_smoothing
    turn_rate: float = 0.08
    turn_smoothing: float = 0.8
    # white per-frame heading noise (rad) on top of the smooth heading
    heading_jitter: float = 0.0
    speed_min: float = 2.0
    speed_max: float = 6.0
    # relative per-frame speed jitter (std of a multiplicative factor)
    speed_jitter: float = 0.0
    box_min: float = 6.0
    box_max: float = 20.0
    # extra pairs whose paths cross, added on top of n_targets
    n_crossing_pairs: int = 0
    noise_std: float = 0.0
    dropout: float = 0.0
    score_mean: float = 0.7
    score_std: float = 0.15
    # fraction of surviving detections scored inside [low_band_min, low_band_max)
    low_fraction: float = 0.0
    low_band_min: float = 0.1
    low_band_max: float = 0.25
    # mean number of background false positives per frame
    clutter_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.motion_model not in MOTION_MODELS:
            raise ValueError(f"motion_model must be one of {MOTION_MODELS}, got {self.motion_model!r}")
        for name in ("dropout", "low_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1], got {v}")
        if self.n_targets < 0 or self.n_crossing_pairs < 0:
            raise ValueError("target counts must be >= 0")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if not 0 < self.box_min <= self.box_max:
            raise ValueError("need 0 < box_min <= box_max")
        if not 0 <= self.speed_min <= self.speed_max:
            raise ValueError("need 0 <= speed_min <= speed_max")
        if self.noise_std < 0 or self.score_std < 0 or self.clutter_rate < 0:
            raise ValueError("noise_std, score_std and clutter_rate must be >= 0")
        if not 0 <= self.low_band_min < self.low_band_max <= 1:
            raise ValueError("need 0 <= low_band_min < low_band_max <= 1")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _fit(centers: np.ndarray, w: float, h: float, spec: ScenarioSpec, rng) -> np.ndarray | None:
    """Translate a center path so every box stays inside the image, or None."""
    lo = centers.min(0) - [w / 2, h / 2]
    hi = centers.max(0) + [w / 2, h / 2]
    room = np.array([spec.image_w, spec.image_h]) - (hi - lo)
    if np.any(room < 0):
        return None
    shift = -lo + rng.uniform(0, 1, 2) * room
    return centers + shift


def _speed_profile(spec, rng, n):
    base = rng.uniform(spec.speed_min, spec.speed_max)
    if spec.speed_jitter <= 0:
        return np.full(n, base)
    return base * np.clip(1.0 + spec.speed_jitter * rng.standard_normal(n), 0.2, 3.0)


def _mover_path(spec: ScenarioSpec, rng) -> np.ndarray:
    n = spec.n_frames
    heading = rng.uniform(-math.pi, math.pi)
    speeds = _speed_profile(spec, rng, n - 1)
    if spec.motion_model == "ema-turn":
        impulses = spec.turn_rate * rng.standard_normal(n - 1)
        omega = np.zeros(n - 1)
        acc = 0.0
        for i, imp in enumerate(impulses):
            acc = spec.turn_smoothing * acc + (1 - spec.turn_smoothing) * imp
            omega[i] = acc
        headings = heading + np.cumsum(omega)
    else:
        headings = np.full(n - 1, heading)
    if spec.heading_jitter > 0:
        headings = headings + spec.heading_jitter * rng.standard_normal(n - 1)
    steps = np.stack([speeds * np.cos(headings), speeds * np.sin(headings)], axis=1)
    return np.vstack([np.zeros((1, 2)), np.cumsum(steps, axis=0)])


def _box_size(spec, rng):
    return rng.uniform(spec.box_min, spec.box_max), rng.uniform(spec.box_min, spec.box_max)


def _crossing(spec: ScenarioSpec, rng, cross_frame: int):
    """Two linear paths through a shared point at ``cross_frame`` (0-based)."""
    n = spec.n_frames
    t = np.arange(n, dtype=float)[:, None] - cross_frame
    heading = rng.uniform(-math.pi, math.pi)
    turn = rng.uniform(math.radians(30), math.radians(150)) * rng.choice([-1.0, 1.0])
    out = []
    size = rng.uniform(spec.box_min, spec.box_max)
    for h in (heading, heading + turn):
        s = rng.uniform(spec.speed_min, spec.speed_max)
        out.append((t * [s * math.cos(h), s * math.sin(h)], size * rng.uniform(0.9, 1.1), size * rng.uniform(0.9, 1.1)))
    return out


def _place_pair(spec, rng, cross_frame):
    for _ in range(200):
        (pa, wa, ha), (pb, wb, hb) = _crossing(spec, rng, cross_frame)
        w, h = max(wa, wb), max(ha, hb)
        both = np.vstack([pa, pb])
        lo = both.min(0) - [w / 2, h / 2]
        hi = both.max(0) + [w / 2, h / 2]
        room = np.array([spec.image_w, spec.image_h]) - (hi - lo)
        if np.all(room >= 0):
            shift = -lo + rng.uniform(0, 1, 2) * room
            return [(pa + shift, wa, ha), (pb + shift, wb, hb)]
    raise ValueError("infeasible scenario: crossing pair does not fit inside the image")


def _ground_truth_paths(spec: ScenarioSpec, rng):
    paths = []
    n_movers = spec.n_targets
    n_pairs = spec.n_crossing_pairs
    if spec.motion_model == "crossing-pairs":
        n_pairs += spec.n_targets // 2
        n_movers = spec.n_targets % 2
    for _ in range(n_movers):
        w, h = _box_size(spec, rng)
        if w > spec.image_w or h > spec.image_h:
            raise ValueError("infeasible scenario: targets larger than the image")
        for _ in range(200):
            placed = _fit(_mover_path(spec, rng), w, h, spec, rng)
            if placed is not None:
                break
        else:
            raise ValueError("infeasible scenario: trajectories do not fit inside the image")
        paths.append((placed, w, h))
    for _ in range(n_pairs):
        if spec.n_frames < 3:
            raise ValueError("crossing pairs need n_frames >= 3")
        lo, hi = spec.n_frames // 3, max(spec.n_frames // 3 + 1, 2 * spec.n_frames // 3)
        cross = int(rng.integers(lo, hi))
        paths.extend(_place_pair(spec, rng, cross))
    return paths


def _score(spec, rng) -> float:
    if spec.low_fraction > 0 and rng.uniform() < spec.low_fraction:
        mid = (spec.low_band_min + spec.low_band_max) / 2
        s = rng.normal(mid, (spec.low_band_max - spec.low_band_min) / 4)
        return float(np.clip(s, spec.low_band_min, np.nextafter(spec.low_band_max, 0)))
    s = rng.normal(spec.score_mean, spec.score_std)
    return float(np.clip(s, spec.low_band_max, 1.0))


def _to_trackset(paths, n_frames) -> TrackSet:
    gt: TrackSet = {f: [] for f in range(1, n_frames + 1)}
    for tid, (centers, w, h) in enumerate(paths, start=1):
        for k, (cx, cy) in enumerate(centers):
            gt[k + 1].append((tid, BBox.from_center(float(cx), float(cy), float(w), float(h))))
    return gt


def detections_from(gt: TrackSet, spec: ScenarioSpec, rng=None):
    """Noisy, thinned, scored detections (plus clutter) from a ground-truth set."""
    rng = make_rng(spec.seed) if rng is None else rng
    dets: dict[int, list[Detection]] = {}
    for f in sorted(gt):
        frame_dets = []
        for _, box in gt[f]:
            if spec.dropout > 0 and rng.uniform() < spec.dropout:
                continue
            if spec.noise_std > 0:
                j = rng.normal(0.0, spec.noise_std, 4)
                box = BBox(box.x + j[0], box.y + j[1], max(1.0, box.w + j[2]), max(1.0, box.h + j[3]))
            frame_dets.append(Detection(f, box, _score(spec, rng)))
        if spec.clutter_rate > 0:
            for _ in range(int(rng.poisson(spec.clutter_rate))):
                w, h = _box_size(spec, rng)
                x = rng.uniform(0, max(0.0, spec.image_w - w))
                y = rng.uniform(0, max(0.0, spec.image_h - h))
                score = float(rng.uniform(0.0, min(1.0, spec.low_band_max + 0.1)))
                frame_dets.append(Detection(f, BBox(x, y, w, h), score))
        order = rng.permutation(len(frame_dets))
        dets[f] = [frame_dets[i] for i in order]
    return dets


def generate(spec: ScenarioSpec):
    """Returns ``(gt, dets_by_frame)``; frames are numbered from 1."""
    rng = make_rng(spec.seed)
    gt = _to_trackset(_ground_truth_paths(spec, rng), spec.n_frames)
    return gt, detections_from(gt, spec, rng)


def crossing_pair(spec: ScenarioSpec = ScenarioSpec(n_frames=40)):
    """Two targets whose boxes coincide at the middle frame."""
    if spec.n_frames < 10:
        raise ValueError("crossing_pair needs n_frames >= 10")
    rng = make_rng(spec.seed)
    gt = _to_trackset(_place_pair(spec, rng, spec.n_frames // 2), spec.n_frames)
    return gt, detections_from(gt, spec, rng)


def benchmark_suite(n: int = 20, **overrides) -> list[ScenarioSpec]:
    """Fixed scenarios (seeds 0..n-1) used for the ablation comparison."""
    base = dict(
        n_targets=6,
        n_crossing_pairs=3,
        n_frames=120,
        image_w=1280,
        image_h=720,
        motion_model="ema-turn",
        turn_rate=0.15,
        heading_jitter=0.5,
        speed_min=3.0,
        speed_max=8.0,
        speed_jitter=0.1,
        box_min=6.0,
        box_max=16.0,
        noise_std=1.0,
        dropout=0.1,
        low_fraction=0.1,
    )
    base.update(overrides)
    return [ScenarioSpec(name=f"bench{seed:02d}", seed=seed, **base) for seed in range(n)]
