"""Box arithmetic for tiny-object association.

Boxes are top-left + width/height in continuous pixel coordinates. Scalar
functions take :class:`BBox`; the ``pairwise_*`` variants take ``(N, 4)``
arrays in the same layout and return ``(N, M)`` matrices for cost building.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class BBox(NamedTuple):
    x: float
    y: float
    w: float
    h: float

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @classmethod
    def from_center(cls, cx, cy, w, h) -> "BBox":
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    def translate(self, dx, dy) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)

    def validate(self) -> "BBox":
        if not all(math.isfinite(v) for v in self):
            raise ValueError(f"non-finite box {tuple(self)}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box must have positive size, got w={self.w}, h={self.h}")
        return self


@dataclass(frozen=True)
class SimilarityConfig:
    expansion_scale: float = 2.0
    use_expansion: bool = True
    use_distance_penalty: bool = True

    def __post_init__(self):
        if not self.expansion_scale >= 1.0:
            raise ValueError(f"expansion_scale must be >= 1, got {self.expansion_scale}")

    @property
    def scale(self) -> float:
        return self.expansion_scale if self.use_expansion else 1.0


def _overlap(a0, a1, b0, b1):
    return max(0.0, min(a1, b1) - max(a0, b0))


def iou(a: BBox, b: BBox) -> float:
    inter = _overlap(a.x, a.x2, b.x, b.x2) * _overlap(a.y, a.y2, b.y, b.y2)
    if inter <= 0.0:
        return 0.0
    return min(1.0, inter / (a.area + b.area - inter))


def expand(b: BBox, scale: float) -> BBox:
    """Scale width and height by ``scale`` about the box center."""
    if scale < 1.0:
        raise ValueError(f"scale must be >= 1, got {scale}")
    if scale == 1.0:
        return b
    w, h = b.w * scale, b.h * scale
    return BBox(b.cx - w / 2.0, b.cy - h / 2.0, w, h)


def expanded_iou(a: BBox, b: BBox, scale: float) -> float:
    return iou(expand(a, scale), expand(b, scale))


def center_distance(a: BBox, b: BBox) -> float:
    return math.hypot(a.cx - b.cx, a.cy - b.cy)


def normalized_distance(a: BBox, b: BBox, scale: float = 1.0) -> float:
    """Center distance over the diagonal of the box enclosing both expanded boxes.

    With ``scale=1`` this is the square root of the DIoU penalty term.
    """
    ea, eb = expand(a, scale), expand(b, scale)
    ew = max(ea.x2, eb.x2) - min(ea.x, eb.x)
    eh = max(ea.y2, eb.y2) - min(ea.y, eb.y)
    return center_distance(a, b) / math.hypot(ew, eh)


def similarity(a: BBox, b: BBox, cfg: SimilarityConfig = SimilarityConfig()) -> float:
    """Association similarity in [0, 1].

    Both enhancements on: ``(EIoU - ND + 1) / 2``. Without the distance
    penalty the overlap term is returned as-is, so gates keep their plain-IoU
    meaning; without expansion the overlap term is plain IoU.
    """
    overlap = expanded_iou(a, b, cfg.scale)
    if not cfg.use_distance_penalty:
        return overlap
    return (overlap - normalized_distance(a, b, cfg.scale) + 1.0) / 2.0


def dotd(a: BBox, b: BBox, s_norm: float) -> float:
    """Dot distance similarity ``exp(-d / s_norm)`` between box centers."""
    if not s_norm > 0:
        raise ValueError(f"s_norm must be positive, got {s_norm}")
    return math.exp(-center_distance(a, b) / s_norm)


# -- vectorized forms -------------------------------------------------------


def as_array(boxes) -> np.ndarray:
    arr = np.asarray(boxes, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 4))
    return arr.reshape(-1, 4)


def _expand_arr(b: np.ndarray, scale: float) -> np.ndarray:
    if scale == 1.0:
        return b
    w, h = b[:, 2] * scale, b[:, 3] * scale
    cx, cy = b[:, 0] + b[:, 2] / 2.0, b[:, 1] + b[:, 3] / 2.0
    return np.stack([cx - w / 2.0, cy - h / 2.0, w, h], axis=1)


def pairwise_iou(a, b, scale: float = 1.0) -> np.ndarray:
    a, b = _expand_arr(as_array(a), scale), _expand_arr(as_array(b), scale)
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[:, 0], b[:, 1]
    bx2, by2 = bx1 + b[:, 2], by1 + b[:, 3]
    iw = np.clip(np.minimum(ax2, bx2) - np.maximum(ax1, bx1), 0.0, None)
    ih = np.clip(np.minimum(ay2, by2) - np.maximum(ay1, by1), 0.0, None)
    inter = iw * ih
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    return np.where(inter > 0.0, np.minimum(1.0, inter / np.where(union > 0, union, 1.0)), 0.0)


def pairwise_center_distance(a, b) -> np.ndarray:
    a, b = as_array(a), as_array(b)
    dx = (a[:, 0] + a[:, 2] / 2.0)[:, None] - (b[:, 0] + b[:, 2] / 2.0)[None, :]
    dy = (a[:, 1] + a[:, 3] / 2.0)[:, None] - (b[:, 1] + b[:, 3] / 2.0)[None, :]
    return np.hypot(dx, dy)


def pairwise_normalized_distance(a, b, scale: float = 1.0) -> np.ndarray:
    a, b = as_array(a), as_array(b)
    ea, eb = _expand_arr(a, scale), _expand_arr(b, scale)
    ew = np.maximum((ea[:, 0] + ea[:, 2])[:, None], (eb[:, 0] + eb[:, 2])[None, :]) - np.minimum(
        ea[:, 0][:, None], eb[:, 0][None, :]
    )
    eh = np.maximum((ea[:, 1] + ea[:, 3])[:, None], (eb[:, 1] + eb[:, 3])[None, :]) - np.minimum(
        ea[:, 1][:, None], eb[:, 1][None, :]
    )
    return pairwise_center_distance(a, b) / np.hypot(ew, eh)


def pairwise_similarity(a, b, cfg: SimilarityConfig = SimilarityConfig()) -> np.ndarray:
    overlap = pairwise_iou(a, b, cfg.scale)
    if not cfg.use_distance_penalty:
        return overlap
    return (overlap - pairwise_normalized_distance(a, b, cfg.scale) + 1.0) / 2.0


def pairwise_dotd(a, b, s_norm: float) -> np.ndarray:
    if not s_norm > 0:
        raise ValueError(f"s_norm must be positive, got {s_norm}")
    return np.exp(-pairwise_center_distance(a, b) / s_norm)


def paired_iou(a, b, scale: float = 1.0) -> np.ndarray:
    """IoU of ``a[i]`` with ``b[i]`` for aligned (N, 4) arrays."""
    a, b = _expand_arr(as_array(a), scale), _expand_arr(as_array(b), scale)
    if a.shape != b.shape:
        raise ValueError(f"paired inputs must align, got {a.shape} and {b.shape}")
    iw = np.clip(np.minimum(a[:, 0] + a[:, 2], b[:, 0] + b[:, 2]) - np.maximum(a[:, 0], b[:, 0]), 0.0, None)
    ih = np.clip(np.minimum(a[:, 1] + a[:, 3], b[:, 1] + b[:, 3]) - np.maximum(a[:, 1], b[:, 1]), 0.0, None)
    inter = iw * ih
    union = a[:, 2] * a[:, 3] + b[:, 2] * b[:, 3] - inter
    return np.where(inter > 0.0, np.minimum(1.0, inter / np.where(union > 0, union, 1.0)), 0.0)


def paired_similarity(a, b, cfg: SimilarityConfig = SimilarityConfig()) -> np.ndarray:
    a, b = as_array(a), as_array(b)
    overlap = paired_iou(a, b, cfg.scale)
    if not cfg.use_distance_penalty:
        return overlap
    ea, eb = _expand_arr(a, cfg.scale), _expand_arr(b, cfg.scale)
    ew = np.maximum(ea[:, 0] + ea[:, 2], eb[:, 0] + eb[:, 2]) - np.minimum(ea[:, 0], eb[:, 0])
    eh = np.maximum(ea[:, 1] + ea[:, 3], eb[:, 1] + eb[:, 3]) - np.minimum(ea[:, 1], eb[:, 1])
    d = np.hypot((a[:, 0] + a[:, 2] / 2) - (b[:, 0] + b[:, 2] / 2), (a[:, 1] + a[:, 3] / 2) - (b[:, 1] + b[:, 3] / 2))
    return (overlap - d / np.hypot(ew, eh) + 1.0) / 2.0
