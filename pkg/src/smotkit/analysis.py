"""Ground-truth motion statistics: velocity ratios, displacement ratios and
the four-way similarity-variant percentile study.

Every function accepts a single track set or a list of them (e.g. all
sequences of a split); samples are pooled across the list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import SimilarityConfig, paired_iou, paired_similarity
from .trackset import TrackSet, by_track

RATIO_BAND = (0.8, 1.2)
STILL_FRACTION = 0.3
PERCENTILES = (10, 30, 50, 70, 90)
METHODS = ("default", "expansion", "distance", "both")
MIN_SAMPLES = 10
SPEED_EPS = 1e-6


def _as_list(gts):
    return [gts] if isinstance(gts, dict) else list(gts)


def _runs(gts):
    """Yield arrays of shape (n, 4) [x, y, w, h] for maximal runs of consecutive frames per track."""
    for gt in _as_list(gts):
        for _, obs in sorted(by_track(gt).items()):
            frames = np.array([f for f, _ in obs])
            boxes = np.array([tuple(b) for _, b in obs], dtype=float)
            breaks = np.flatnonzero(np.diff(frames) != 1) + 1
            yield from np.split(boxes, breaks)


def _centers(boxes):
    return boxes[:, :2] + boxes[:, 2:] / 2


# -- velocity ratio -----------------------------------------------------------


@dataclass
class VelocityRatioReport:
    window: int
    ratios: np.ndarray
    excluded: int = 0  # samples whose reference speed was ~0

    @property
    def n_samples(self) -> int:
        return int(self.ratios.size)

    @property
    def fraction_in_band(self) -> float:
        if self.ratios.size == 0:
            return float("nan")
        lo, hi = RATIO_BAND
        return float(np.mean((self.ratios >= lo) & (self.ratios <= hi)))

    def histogram(self, bins=None):
        bins = np.linspace(0.0, 3.0, 31) if bins is None else bins
        return np.histogram(np.clip(self.ratios, bins[0], bins[-1]), bins=bins)


def velocity_ratios(gts, window: int) -> VelocityRatioReport:
    """speed(t) / mean of the ``window`` preceding per-frame speeds.

    A sample needs ``window + 2`` consecutive observations. Samples whose
    reference speed is below 1e-6 px/frame are excluded and counted.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    out, excluded = [], 0
    for run in _runs(gts):
        if len(run) < window + 2:
            continue
        speed = np.linalg.norm(np.diff(_centers(run), axis=0), axis=1)
        # reference for speed[k] is mean(speed[k-window:k])
        ref = np.convolve(speed, np.ones(window) / window, mode="valid")[:-1]
        cur = speed[window:]
        ok = ref >= SPEED_EPS
        excluded += int((~ok).sum())
        out.append(cur[ok] / ref[ok])
    ratios = np.concatenate(out) if out else np.empty(0)
    return VelocityRatioReport(window, ratios, excluded)


def velocity_table(gts, windows=range(1, 6)):
    """Reports for several windows plus whether the in-band fraction never increases."""
    gts = _as_list(gts)
    reports = [velocity_ratios(gts, n) for n in windows]
    fr = [r.fraction_in_band for r in reports]
    nonincreasing = all(b <= a + 1e-12 for a, b in zip(fr, fr[1:]))
    return reports, nonincreasing


# -- displacement / size ------------------------------------------------------


@dataclass
class DisplacementReport:
    x_ratio: np.ndarray  # |dcx| / w of the earlier box
    y_ratio: np.ndarray  # |dcy| / h of the earlier box
    still: np.ndarray  # displacement below STILL_FRACTION of the shorter side

    @property
    def n_pairs(self) -> int:
        return int(self.still.size)

    @property
    def n_still(self) -> int:
        return int(self.still.sum())

    def histograms(self, bins=None, include_still: bool = False):
        bins = np.linspace(0.0, 3.0, 31) if bins is None else bins
        keep = np.ones_like(self.still) if include_still else ~self.still
        hx = np.histogram(np.clip(self.x_ratio[keep], bins[0], bins[-1]), bins=bins)
        hy = np.histogram(np.clip(self.y_ratio[keep], bins[0], bins[-1]), bins=bins)
        return hx, hy


def _consecutive_pairs(gts):
    prev, nxt = [], []
    for run in _runs(gts):
        if len(run) >= 2:
            prev.append(run[:-1])
            nxt.append(run[1:])
    if not prev:
        return np.empty((0, 4)), np.empty((0, 4))
    return np.vstack(prev), np.vstack(nxt)


def _still_mask(prev, nxt):
    disp = np.linalg.norm(_centers(nxt) - _centers(prev), axis=1)
    return disp < STILL_FRACTION * np.minimum(prev[:, 2], prev[:, 3])


def displacement_size_ratios(gts) -> DisplacementReport:
    prev, nxt = _consecutive_pairs(gts)
    d = np.abs(_centers(nxt) - _centers(prev))
    return DisplacementReport(d[:, 0] / prev[:, 2], d[:, 1] / prev[:, 3], _still_mask(prev, nxt))


# -- similarity-variant percentiles --------------------------------------------


@dataclass
class IoUPercentileReport:
    displacement_filter: str
    n_samples: int
    percentiles: tuple = PERCENTILES
    values: dict = field(default_factory=dict)  # method -> list of percentile values


def nearest_rank(values, pcts=PERCENTILES):
    """Nearest-rank percentiles: the ceil(p/100 * n)-th smallest value."""
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    if n == 0:
        raise ValueError("no samples")
    return [float(v[max(1, int(np.ceil(p / 100.0 * n))) - 1]) for p in pcts]


def method_scores(prev: np.ndarray, nxt: np.ndarray, scale: float = 2.0) -> dict:
    """Per-pair score of each similarity variant for aligned box arrays."""
    return {
        "default": paired_iou(prev, nxt),
        "expansion": paired_iou(prev, nxt, scale),
        "distance": paired_similarity(prev, nxt, SimilarityConfig(scale, use_expansion=False)),
        "both": paired_similarity(prev, nxt, SimilarityConfig(scale)),
    }


def iou_method_percentiles(gts, cfg: SimilarityConfig = SimilarityConfig(), displacement_filter: str = "keep_low"):
    """Percentiles of the four similarity variants over consecutive GT pairs.

    ``keep_low`` keeps only low-displacement ("still") pairs, ``drop_low``
    keeps only the others.
    """
    mode = displacement_filter.replace("-", "_")
    if mode not in ("keep_low", "drop_low"):
        raise ValueError(f"displacement_filter must be keep_low or drop_low, got {displacement_filter!r}")
    prev, nxt = _consecutive_pairs(gts)
    still = _still_mask(prev, nxt)
    keep = still if mode == "keep_low" else ~still
    prev, nxt = prev[keep], nxt[keep]
    if len(prev) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} box pairs after filtering, got {len(prev)}")
    scores = method_scores(prev, nxt, cfg.expansion_scale)
    return IoUPercentileReport(mode, len(prev), PERCENTILES, {m: nearest_rank(scores[m]) for m in METHODS})
