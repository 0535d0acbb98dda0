"""Constant-velocity Kalman filter over ``[cx, cy, w, h]`` and EMA-smoothed motion direction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BBox

MIN_SIZE = 1.0
_NDIM = 4

_F = np.eye(2 * _NDIM)
_F[:_NDIM, _NDIM:] = np.eye(_NDIM)
_H = np.eye(_NDIM, 2 * _NDIM)


@dataclass(frozen=True)
class MotionConfig:
    ema_alpha: float = 0.8
    direction_cost_weight: float = 0.2
    # False falls back to OC-SORT momentum: direction from the observation
    # ``delta_t`` frames back to the newest one
    use_ema: bool = True
    delta_t: int = 3
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160

    def __post_init__(self):
        if not 0.0 <= self.ema_alpha <= 1.0:
            raise ValueError(f"ema_alpha must be in [0, 1], got {self.ema_alpha}")
        if self.direction_cost_weight < 0:
            raise ValueError("direction_cost_weight must be >= 0")
        if self.delta_t < 1:
            raise ValueError("delta_t must be >= 1")
        if self.std_weight_position <= 0 or self.std_weight_velocity <= 0:
            raise ValueError("noise weights must be positive")


@dataclass
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    def bbox(self) -> BBox:
        cx, cy, w, h = self.mean[:4]
        return BBox.from_center(float(cx), float(cy), float(w), float(h))


def _floor_size(mean: np.ndarray) -> None:
    mean[2:4] = np.maximum(mean[2:4], MIN_SIZE)


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return (p + p.T) / 2.0


def kf_init(box, cfg: MotionConfig = MotionConfig()) -> KalmanState:
    """Zero-velocity state from a :class:`BBox` or anything carrying ``.bbox``."""
    box = getattr(box, "bbox", box)
    mean = np.array([box.cx, box.cy, box.w, box.h, 0.0, 0.0, 0.0, 0.0])
    _floor_size(mean)
    h = mean[3]
    std = np.array(
        [2 * cfg.std_weight_position * h] * _NDIM + [10 * cfg.std_weight_velocity * h] * _NDIM
    )
    return KalmanState(mean, np.diag(std**2))


def kf_predict(s: KalmanState, cfg: MotionConfig = MotionConfig()) -> KalmanState:
    h = s.mean[3]
    std = np.array([cfg.std_weight_position * h] * _NDIM + [cfg.std_weight_velocity * h] * _NDIM)
    mean = _F @ s.mean
    _floor_size(mean)
    cov = _F @ s.covariance @ _F.T + np.diag(std**2)
    return KalmanState(mean, _symmetrize(cov))


def kf_update(s: KalmanState, box, cfg: MotionConfig = MotionConfig()) -> KalmanState:
    """Measurement update with ``[cx, cy, w, h]`` of ``box`` (Joseph form)."""
    box = getattr(box, "bbox", box)
    h = s.mean[3]
    r = np.diag(np.full(_NDIM, (cfg.std_weight_position * h) ** 2))
    z = np.array([box.cx, box.cy, box.w, box.h])
    p = s.covariance
    innov_cov = _H @ p @ _H.T + r
    jitter = 0.0
    for _ in range(8):
        try:
            chol = np.linalg.cholesky(innov_cov + jitter * np.eye(_NDIM))
            break
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, 1e-9 * max(1.0, np.trace(innov_cov)))
    else:
        chol = np.linalg.cholesky(np.eye(_NDIM) * max(1.0, np.trace(innov_cov)))
    # K = P H^T S^-1 via two triangular solves
    ph = p @ _H.T
    gain = np.linalg.solve(chol.T, np.linalg.solve(chol, ph.T)).T
    mean = s.mean + gain @ (z - _H @ s.mean)
    _floor_size(mean)
    ikh = np.eye(2 * _NDIM) - gain @ _H
    cov = ikh @ p @ ikh.T + gain @ r @ gain.T
    return KalmanState(mean, _symmetrize(cov))


@dataclass(frozen=True)
class EmaVelocity:
    vx: float = 0.0
    vy: float = 0.0
    initialized: bool = False


def ema_update(v: EmaVelocity, v_ins, alpha: float) -> EmaVelocity:
    """``alpha * v + (1 - alpha) * v_ins``; an uninitialized ``v`` is seeded with ``v_ins``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    ix, iy = float(v_ins[0]), float(v_ins[1])
    if not v.initialized:
        return EmaVelocity(ix, iy, True)
    return EmaVelocity(alpha * v.vx + (1.0 - alpha) * ix, alpha * v.vy + (1.0 - alpha) * iy, True)


DIRECTION_EPS = 1e-6


def direction_cost(track_v: EmaVelocity, track_last_center, det_center) -> float:
    """Angle between the track velocity and the last-observation-to-detection step, over pi."""
    if not track_v.initialized:
        return 0.0
    dx = float(det_center[0]) - float(track_last_center[0])
    dy = float(det_center[1]) - float(track_last_center[1])
    nv = math.hypot(track_v.vx, track_v.vy)
    nd = math.hypot(dx, dy)
    if nv < DIRECTION_EPS or nd < DIRECTION_EPS:
        return 0.0
    cos = (track_v.vx * dx + track_v.vy * dy) / (nv * nd)
    return math.acos(min(1.0, max(-1.0, cos))) / math.pi


def pairwise_direction_cost(velocities: np.ndarray, last_centers: np.ndarray, det_centers: np.ndarray) -> np.ndarray:
    """Vectorized :func:`direction_cost`; rows with zero velocity give zero cost.

    ``velocities`` and ``last_centers`` are ``(N, 2)``, ``det_centers`` is ``(M, 2)``.
    """
    v = np.asarray(velocities, dtype=float).reshape(-1, 2)
    c = np.asarray(last_centers, dtype=float).reshape(-1, 2)
    d = np.asarray(det_centers, dtype=float).reshape(-1, 2)
    dx = d[None, :, 0] - c[:, None, 0]
    dy = d[None, :, 1] - c[:, None, 1]
    nd = np.hypot(dx, dy)
    nv = np.hypot(v[:, 0], v[:, 1])[:, None]
    valid = (nd >= DIRECTION_EPS) & (nv >= DIRECTION_EPS)
    denom = np.where(valid, nv * nd, 1.0)
    cos = np.clip((v[:, 0:1] * dx + v[:, 1:2] * dy) / denom, -1.0, 1.0)
    return np.where(valid, np.arccos(cos) / np.pi, 0.0)
