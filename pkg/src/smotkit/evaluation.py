"""SO-HOTA: HOTA detection/association scores with dot distance as the similarity.

Matching follows the reference HOTA protocol: per frame, a single optimal
assignment maximizing ``global_alignment * similarity``; a matched pair counts
as a true positive at level ``alpha`` when its similarity is at least ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import solve_assignment
from .geometry import as_array, pairwise_dotd
from .trackset import TrackSet, all_boxes, check_unique_ids

ALPHAS = np.round(np.arange(0.05, 0.99, 0.05), 2)
_EPS = np.finfo(float).eps


def compute_s_norm(gt: TrackSet) -> float:
    """Mean ``sqrt(w * h)`` over every ground-truth box."""
    boxes = all_boxes(gt)
    if not boxes:
        raise ValueError("cannot compute s_norm from empty ground truth")
    return float(np.mean([math.sqrt(b.w * b.h) for b in boxes]))


@dataclass
class SequenceEval:
    """Per-alpha counts plus derived scores (scores in [0, 100])."""

    alphas: np.ndarray
    tp: np.ndarray
    fn: np.ndarray
    fp: np.ndarray
    # sum over true positives of their association Jaccard
    assoc_sum: np.ndarray
    name: str = ""
    s_norm: float = float("nan")

    @property
    def det_a_alpha(self) -> np.ndarray:
        return self.tp / np.maximum(1.0, self.tp + self.fn + self.fp)

    @property
    def ass_a_alpha(self) -> np.ndarray:
        return self.assoc_sum / np.maximum(1.0, self.tp)

    @property
    def hota_alpha(self) -> np.ndarray:
        return np.sqrt(self.det_a_alpha * self.ass_a_alpha)

    @property
    def so_deta(self) -> float:
        return 100.0 * float(np.mean(self.det_a_alpha))

    @property
    def so_assa(self) -> float:
        return 100.0 * float(np.mean(self.ass_a_alpha))

    @property
    def so_hota(self) -> float:
        return 100.0 * float(np.mean(self.hota_alpha))

    def summary(self) -> dict:
        return {"SO-HOTA": self.so_hota, "SO-DetA": self.so_deta, "SO-AssA": self.so_assa}


def _frames(gt: TrackSet, pred: TrackSet):
    return sorted(set(gt) | set(pred))


def evaluate(gt: TrackSet, pred: TrackSet, s_norm: float | None = None, name: str = "") -> SequenceEval:
    check_unique_ids(gt, "ground truth")
    check_unique_ids(pred, "prediction")
    if s_norm is None:
        s_norm = compute_s_norm(gt)
    if not s_norm > 0:
        raise ValueError(f"s_norm must be positive, got {s_norm}")

    gt_ids = sorted({tid for items in gt.values() for tid, _ in items})
    pr_ids = sorted({tid for items in pred.values() for tid, _ in items})
    gt_index = {t: i for i, t in enumerate(gt_ids)}
    pr_index = {t: i for i, t in enumerate(pr_ids)}
    n_a = len(ALPHAS)
    zeros = np.zeros(n_a)

    frames = []
    for f in _frames(gt, pred):
        g, p = gt.get(f, []), pred.get(f, [])
        gi = np.array([gt_index[t] for t, _ in g], dtype=int)
        pi = np.array([pr_index[t] for t, _ in p], dtype=int)
        sim = pairwise_dotd(as_array([b for _, b in g]), as_array([b for _, b in p]), s_norm) if len(g) and len(p) else None
        frames.append((gi, pi, sim))

    potential = np.zeros((len(gt_ids), len(pr_ids)))
    gt_count = np.zeros(len(gt_ids))
    pr_count = np.zeros(len(pr_ids))
    for gi, pi, sim in frames:
        gt_count[gi] += 1
        pr_count[pi] += 1
        if sim is None:
            continue
        denom = sim.sum(0)[None, :] + sim.sum(1)[:, None] - sim
        sim_iou = np.where(denom > _EPS, sim / np.where(denom > _EPS, denom, 1.0), 0.0)
        potential[gi[:, None], pi[None, :]] += sim_iou
    global_alignment = potential / np.maximum(_EPS, gt_count[:, None] + pr_count[None, :] - potential)

    tp, fn, fp = zeros.copy(), zeros.copy(), zeros.copy()
    matches = np.zeros((n_a, len(gt_ids), len(pr_ids)))
    for gi, pi, sim in frames:
        if sim is None:
            fn += len(gi)
            fp += len(pi)
            continue
        score = global_alignment[gi[:, None], pi[None, :]] * sim
        result = solve_assignment(-score)
        rows = np.array([r for r, _ in result.matches], dtype=int)
        cols = np.array([c for _, c in result.matches], dtype=int)
        matched_sim = sim[rows, cols]
        for a, alpha in enumerate(ALPHAS):
            ok = matched_sim >= alpha - _EPS
            n = int(ok.sum())
            tp[a] += n
            fn[a] += len(gi) - n
            fp[a] += len(pi) - n
            np.add.at(matches[a], (gi[rows[ok]], pi[cols[ok]]), 1)

    assoc_sum = zeros.copy()
    union = gt_count[:, None] + pr_count[None, :]
    for a in range(n_a):
        mc = matches[a]
        assoc_sum[a] = float(np.sum(mc * (mc / np.maximum(1.0, union - mc))))
    return SequenceEval(ALPHAS.copy(), tp, fn, fp, assoc_sum, name=name, s_norm=float(s_norm))


def aggregate(seqs) -> SequenceEval:
    """Pool counts across sequences, then recompute the ratios."""
    seqs = list(seqs)
    if not seqs:
        raise ValueError("aggregate needs at least one sequence")
    return SequenceEval(
        ALPHAS.copy(),
        sum(s.tp for s in seqs),
        sum(s.fn for s in seqs),
        sum(s.fp for s in seqs),
        sum(s.assoc_sum for s in seqs),
        name="COMBINED",
        s_norm=seqs[0].s_norm if len({s.s_norm for s in seqs}) == 1 else float("nan"),
    )


def count_id_switches(gt: TrackSet, pred: TrackSet, s_norm: float | None = None, threshold: float = 0.5) -> int:
    """Identity switches of ground-truth trajectories.

    Per frame, GT and predictions are matched on dot distance (pairs below
    ``threshold`` are not matches), keeping last frame's pairings when they
    still qualify. A switch is counted whenever a GT id is matched to a
    different prediction id than at its previous match.
    """
    check_unique_ids(gt, "ground truth")
    check_unique_ids(pred, "prediction")
    if s_norm is None:
        s_norm = compute_s_norm(gt)
    last_match: dict[int, int] = {}
    prev_pairs: dict[int, int] = {}
    switches = 0
    for f in _frames(gt, pred):
        g, p = gt.get(f, []), pred.get(f, [])
        if not g or not p:
            prev_pairs = {}
            continue
        sim = pairwise_dotd(as_array([b for _, b in g]), as_array([b for _, b in p]), s_norm)
        # continuing pairs get a bonus larger than any similarity difference
        bonus = np.zeros_like(sim)
        p_ids = [t for t, _ in p]
        for i, (gid, _) in enumerate(g):
            if gid in prev_pairs and prev_pairs[gid] in p_ids:
                bonus[i, p_ids.index(prev_pairs[gid])] = 1.0
        result = solve_assignment(-(sim + bonus), gate=threshold, similarity=sim)
        prev_pairs = {}
        for r, c in result.matches:
            gid, pid = g[r][0], p[c][0]
            if gid in last_match and last_match[gid] != pid:
                switches += 1
            last_match[gid] = pid
            prev_pairs[gid] = pid
    return switches
