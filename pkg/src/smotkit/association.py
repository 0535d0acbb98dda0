"""Appearance-free multi-object tracker.

Detections are split into confidence bands and associated in three stages:

1. high-score detections against every live track, similarity plus a
   direction-consistency cost;
2. low-score detections against tracks left over from stage 1, similarity only;
3. remaining high-score detections against remaining tracks, compared with the
   tracks' last observed boxes instead of their Kalman predictions.

Each later stage uses a gate lowered by ``stage_decrement`` per stage.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .assignment import solve_assignment
from .geometry import BBox, SimilarityConfig, as_array, pairwise_similarity
from .motion import (
    EmaVelocity,
    KalmanState,
    MotionConfig,
    ema_update,
    kf_init,
    kf_predict,
    kf_update,
    pairwise_direction_cost,
)


class Detection(NamedTuple):
    frame: int
    bbox: BBox
    score: float


@dataclass(frozen=True)
class ConfidenceBands:
    threshold_high: float = 0.25
    threshold_low: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.threshold_low <= self.threshold_high <= 1.0:
            raise ValueError(
                "confidence bands need 0 <= threshold_low <= threshold_high <= 1, "
                f"got low={self.threshold_low}, high={self.threshold_high}"
            )


@dataclass(frozen=True)
class AssociationConfig:
    match_threshold: float = 0.25
    stage_decrement: float = 0.08
    min_hits: int = 3
    max_age: int = 30
    history_len: int = 30
    bands: ConfidenceBands = ConfidenceBands()
    sim: SimilarityConfig = SimilarityConfig()
    motion: MotionConfig = MotionConfig()

    def __post_init__(self):
        if self.stage_decrement < 0:
            raise ValueError("stage_decrement must be >= 0")
        if self.match_threshold - 2 * self.stage_decrement < 0:
            raise ValueError(
                "match_threshold - 2 * stage_decrement must be >= 0, got "
                f"{self.match_threshold} - 2 * {self.stage_decrement}"
            )
        if self.match_threshold > 1:
            raise ValueError("match_threshold must be <= 1")
        if self.min_hits < 1:
            raise ValueError("min_hits must be >= 1")
        if self.max_age < 0:
            raise ValueError("max_age must be >= 0")
        if self.history_len < 2:
            raise ValueError("history_len must be >= 2")

    def gate(self, stage: int) -> float:
        """Similarity gate for stage 1, 2 or 3."""
        return self.match_threshold - (stage - 1) * self.stage_decrement


def band(dets: Iterable[Detection], bands: ConfidenceBands):
    """Split detections into (high, low, discard), keeping input order."""
    high, low, discard = [], [], []
    for d in dets:
        if d.score >= bands.threshold_high:
            high.append(d)
        elif d.score >= bands.threshold_low:
            low.append(d)
        else:
            discard.append(d)
    return high, low, discard


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"
    REMOVED = "removed"


@dataclass
class Track:
    id: int
    kstate: KalmanState
    last_observation: Detection
    history: deque
    ema: EmaVelocity = EmaVelocity()
    hits: int = 1
    age_since_update: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    output_id: int | None = None
    momentum: EmaVelocity = EmaVelocity()

    @property
    def predicted_bbox(self) -> BBox:
        return self.kstate.bbox()

    @property
    def direction(self) -> EmaVelocity:
        """Velocity used for the direction cost (EMA or k-frame momentum)."""
        return self.momentum if self.momentum.initialized else self.ema

    @property
    def is_live(self) -> bool:
        return self.status is not TrackStatus.REMOVED


def _observation_velocity(track: Track, det: Detection, cfg: MotionConfig):
    """Velocity feeding the direction estimate when ``det`` is accepted."""
    prev = track.last_observation
    if cfg.use_ema:
        gap = det.frame - prev.frame
        return ((det.bbox.cx - prev.bbox.cx) / gap, (det.bbox.cy - prev.bbox.cy) / gap)
    # observation delta_t frames back if present, else the closest newer one
    by_frame = {d.frame: d for d in track.history}
    ref = prev
    for k in range(cfg.delta_t, 0, -1):
        if det.frame - k in by_frame:
            ref = by_frame[det.frame - k]
            break
    gap = det.frame - ref.frame
    return ((det.bbox.cx - ref.bbox.cx) / gap, (det.bbox.cy - ref.bbox.cy) / gap)


def cost_matrix(tracks, dets, cfg: AssociationConfig, use_direction: bool, boxes=None):
    """``-similarity + weight * direction_cost`` between tracks and detections.

    ``boxes`` overrides the track boxes (defaults to Kalman predictions).
    Returns ``(cost, similarity)``.
    """
    n, m = len(tracks), len(dets)
    if n == 0 or m == 0:
        return np.zeros((n, m)), np.zeros((n, m))
    if boxes is None:
        boxes = [t.predicted_bbox for t in tracks]
    det_boxes = as_array([d.bbox for d in dets])
    sim = pairwise_similarity(as_array(boxes), det_boxes, cfg.sim)
    cost = -sim
    weight = cfg.motion.direction_cost_weight
    if use_direction and weight > 0:
        vel = np.array([[t.direction.vx, t.direction.vy] if t.direction.initialized else [0.0, 0.0] for t in tracks])
        last = np.array([t.last_observation.bbox.center for t in tracks])
        centers = det_boxes[:, :2] + det_boxes[:, 2:] / 2.0
        cost = cost + weight * pairwise_direction_cost(vel, last, centers)
    return cost, sim


class Tracker:
    """Single-sequence tracker; call :meth:`step` once per frame in order."""

    def __init__(self, cfg: AssociationConfig = AssociationConfig()):
        self.cfg = cfg
        self.tracks: list[Track] = []
        self.frame = 0
        self._next_id = 1
        self._next_output_id = 1

    def _spawn(self, det: Detection) -> Track:
        track = Track(
            id=self._next_id,
            kstate=kf_init(det.bbox, self.cfg.motion),
            last_observation=det,
            history=deque([det], maxlen=self.cfg.history_len),
        )
        self._next_id += 1
        return track

    def _associate(self, tracks, dets, stage: int):
        if not tracks or not dets:
            return [], list(range(len(tracks))), list(range(len(dets)))
        boxes = [t.last_observation.bbox for t in tracks] if stage == 3 else None
        cost, sim = cost_matrix(tracks, dets, self.cfg, use_direction=stage == 1, boxes=boxes)
        result = solve_assignment(cost, gate=self.cfg.gate(stage), similarity=sim)
        return result.matches, result.unmatched_rows, result.unmatched_cols

    def _apply_match(self, track: Track, det: Detection) -> None:
        mcfg = self.cfg.motion
        v = _observation_velocity(track, det, mcfg)
        if mcfg.use_ema:
            track.ema = ema_update(track.ema, v, mcfg.ema_alpha)
        else:
            track.momentum = EmaVelocity(v[0], v[1], True)
        track.kstate = kf_update(track.kstate, det.bbox, mcfg)
        track.last_observation = det
        track.history.append(det)
        track.hits += 1
        track.age_since_update = 0
        if track.status is TrackStatus.LOST or (
            track.status is TrackStatus.TENTATIVE and track.hits >= self.cfg.min_hits
        ):
            track.status = TrackStatus.CONFIRMED

    def step(self, dets: Iterable[Detection] = (), frame: int | None = None):
        """Advance one frame. Returns ``[(output_id, BBox), ...]`` for confirmed tracks."""
        dets = list(dets)
        expected = self.frame + 1 if frame is None else frame
        if expected <= self.frame:
            raise ValueError(f"frame {expected} is not after frame {self.frame}")
        for d in dets:
            if d.frame != expected:
                raise ValueError(f"detection from frame {d.frame} passed to frame {expected}")
        self.frame = expected
        cfg = self.cfg

        live = [t for t in self.tracks if t.is_live]
        for t in live:
            t.kstate = kf_predict(t.kstate, cfg.motion)

        high, low, _ = band(dets, cfg.bands)
        matched: set[int] = set()

        # stage 1
        m1, rest_t, rest_h = self._associate(live, high, 1)
        for ti, di in m1:
            self._apply_match(live[ti], high[di])
            matched.add(live[ti].id)
        pool = [live[i] for i in rest_t]
        high_left = [high[i] for i in rest_h]

        # stage 2
        m2, rest_t, _ = self._associate(pool, low, 2)
        for ti, di in m2:
            self._apply_match(pool[ti], low[di])
            matched.add(pool[ti].id)
        pool = [pool[i] for i in rest_t]

        # stage 3
        m3, rest_t, rest_h = self._associate(pool, high_left, 3)
        for ti, di in m3:
            self._apply_match(pool[ti], high_left[di])
            matched.add(pool[ti].id)
        high_left = [high_left[i] for i in rest_h]

        for t in live:
            if t.id in matched:
                continue
            t.age_since_update += 1
            if t.status is TrackStatus.TENTATIVE:
                t.status = TrackStatus.REMOVED
            elif t.status is TrackStatus.CONFIRMED:
                t.status = TrackStatus.LOST
            if t.status is TrackStatus.LOST and t.age_since_update > cfg.max_age:
                t.status = TrackStatus.REMOVED

        for d in high_left:
            t = self._spawn(d)
            if cfg.min_hits <= 1:
                t.status = TrackStatus.CONFIRMED
            live.append(t)

        self.tracks = [t for t in live if t.is_live]
        out = []
        for t in self.tracks:
            if t.status is TrackStatus.CONFIRMED and t.age_since_update == 0:
                if t.output_id is None:
                    t.output_id = self._next_output_id
                    self._next_output_id += 1
                out.append((t.output_id, t.kstate.bbox()))
        return out


class TrackRecord(NamedTuple):
    frame: int
    id: int
    bbox: BBox


def run_sequence(dets_by_frame, cfg: AssociationConfig = AssociationConfig(), n_frames: int | None = None):
    """Run a tracker over a whole sequence.

    ``dets_by_frame`` maps (or iterates as pairs) frame -> detections, with
    frames strictly increasing. Frames without detections are still stepped so
    track ages advance. Returns :class:`TrackRecord` rows sorted by (frame, id).
    """
    items = list(dets_by_frame.items()) if hasattr(dets_by_frame, "items") else list(dets_by_frame)
    last = 0
    for f, _ in items:
        if f < 1:
            raise ValueError(f"frame indices start at 1, got {f}")
        if f <= last:
            raise ValueError(f"frames must be strictly increasing: {f} after {last}")
        last = f
    end = max(last, n_frames or 0)
    lookup = dict(items)
    tracker = Tracker(cfg)
    records = []
    for f in range(1, end + 1):
        for oid, box in tracker.step(lookup.get(f, ()), frame=f):
            records.append(TrackRecord(f, oid, box))
    records.sort(key=lambda r: (r.frame, r.id))
    return records
