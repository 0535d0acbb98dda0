import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import boxes
from smotkit.geometry import (
    BBox,
    SimilarityConfig,
    center_distance,
    dotd,
    expand,
    expanded_iou,
    iou,
    normalized_distance,
    paired_iou,
    paired_similarity,
    pairwise_dotd,
    pairwise_iou,
    pairwise_normalized_distance,
    pairwise_similarity,
    similarity,
)

A = BBox(0, 0, 10, 10)
B = BBox(15, 0, 10, 10)


def raster_area(box, res):
    """Cells of a 1/res grid covered by a box with grid-aligned edges."""
    return round(box.w * res) * round(box.h * res)


def raster_iou(a, b, res=1):
    """IoU by painting both boxes onto a pixel grid and counting cells."""
    x0 = min(a.x, b.x)
    y0 = min(a.y, b.y)
    x1 = max(a.x2, b.x2)
    y1 = max(a.y2, b.y2)
    w, h = round((x1 - x0) * res), round((y1 - y0) * res)
    grid = np.zeros((2, h, w), dtype=bool)
    for k, bx in enumerate((a, b)):
        c0, r0 = round((bx.x - x0) * res), round((bx.y - y0) * res)
        grid[k, r0 : r0 + round(bx.h * res), c0 : c0 + round(bx.w * res)] = True
    inter = np.count_nonzero(grid[0] & grid[1])
    union = np.count_nonzero(grid[0] | grid[1])
    return inter / union


class TestExamples:
    def test_iou_identity(self):
        assert iou(A, A) == 1.0

    def test_iou_disjoint(self):
        assert iou(A, BBox(20, 20, 5, 5)) == 0.0

    def test_iou_half_shift(self):
        assert iou(A, BBox(5, 0, 10, 10)) == pytest.approx(1 / 3, abs=1e-15)

    @pytest.mark.parametrize(
        "box, scale, expected",
        [((0, 0, 10, 10), 2, (-5, -5, 20, 20)), ((0, 0, 10, 10), 1, (0, 0, 10, 10)), ((3, 4, 6, 8), 2, (0, 0, 12, 16))],
    )
    def test_expand(self, box, scale, expected):
        assert expand(BBox(*box), scale) == BBox(*expected)

    def test_expand_rejects_shrinking(self):
        with pytest.raises(ValueError):
            expand(A, 0.5)

    def test_expanded_iou_worked_pair(self):
        # expanded boxes (-5,-5,20,20) and (10,-5,20,20): overlap 5x20, union 700
        assert expanded_iou(A, B, 2) == pytest.approx(100 / 700, abs=1e-15)
        assert expanded_iou(A, B, 1) == 0.0
        assert expanded_iou(B, B, 3.7) == 1.0

    def test_normalized_distance(self):
        assert normalized_distance(A, BBox(2, 2, 6, 6)) == 0.0
        assert normalized_distance(A, B, 2) == pytest.approx(15 / math.sqrt(1625), abs=1e-15)

    def test_normalized_distance_approaches_one(self):
        a, b = BBox(0, 0, 1e-3, 1e-3), BBox(100, 100, 1e-3, 1e-3)
        assert normalized_distance(a, b) > 0.9999

    def test_similarity(self):
        assert similarity(A, A) == 1.0
        expected = (100 / 700 - 15 / math.sqrt(1625) + 1) / 2
        assert similarity(A, B, SimilarityConfig(2.0)) == pytest.approx(expected, abs=1e-15)
        assert similarity(A, B, SimilarityConfig(2.0)) == pytest.approx(0.3854, abs=5e-5)

    def test_similarity_far_tiny_boxes_near_zero(self):
        a, b = BBox(0, 0, 0.01, 0.01), BBox(900, 900, 0.01, 0.01)
        assert similarity(a, b) < 1e-4

    def test_similarity_toggles(self):
        assert similarity(A, B, SimilarityConfig(2.0, use_distance_penalty=False)) == expanded_iou(A, B, 2)
        assert similarity(A, B, SimilarityConfig(2.0, use_expansion=False, use_distance_penalty=False)) == iou(A, B)
        no_exp = similarity(A, B, SimilarityConfig(2.0, use_expansion=False))
        assert no_exp == pytest.approx((0 - 15 / math.hypot(25, 10) + 1) / 2)

    def test_dotd(self):
        assert dotd(A, A, 5.0) == 1.0
        assert dotd(A, A.translate(7, 0), 7.0) == pytest.approx(math.exp(-1))
        assert dotd(A, A.translate(6, 8), 20.0) == pytest.approx(math.exp(-0.5))
        assert dotd(A, A.translate(6, 8), 20.0) == pytest.approx(0.6065, abs=5e-5)

    @pytest.mark.parametrize("s", [0.0, -1.0])
    def test_dotd_rejects_bad_scale(self, s):
        with pytest.raises(ValueError):
            dotd(A, B, s)

    def test_bbox_validate(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 1).validate()
        with pytest.raises(ValueError):
            BBox(0, float("nan"), 1, 1).validate()


int_box = st.builds(
    BBox,
    st.integers(0, 300),
    st.integers(0, 300),
    st.integers(1, 200),
    st.integers(1, 200),
)


@given(int_box, int_box)
def test_iou_matches_raster(a, b):
    assert iou(a, b) == pytest.approx(raster_iou(a, b), rel=1e-9, abs=1e-12)


@given(int_box, int_box)
def test_expanded_iou_matches_half_pixel_raster(a, b):
    ea, eb = expand(a, 2), expand(b, 2)
    assert expanded_iou(a, b, 2) == pytest.approx(raster_iou(ea, eb, res=2), rel=1e-9, abs=1e-12)


@given(boxes, boxes)
def test_symmetry_and_bounds(a, b):
    cfg = SimilarityConfig()
    for fn in (iou, lambda p, q: expanded_iou(p, q, 2.5), normalized_distance, lambda p, q: similarity(p, q, cfg),
               lambda p, q: dotd(p, q, 10.0)):
        v = fn(a, b)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(fn(b, a), abs=1e-12)


@given(boxes, boxes)
def test_scale_one_reduces_to_iou(a, b):
    assert expanded_iou(a, b, 1.0) == iou(a, b)


@given(boxes, boxes, st.floats(1.0, 5.0))
def test_expansion_never_lowers_disjoint_overlap(a, b, s):
    if iou(a, b) == 0.0:
        assert expanded_iou(a, b, s) >= 0.0
        ea, eb = expand(a, s), expand(b, s)
        if min(ea.x2, eb.x2) > max(ea.x, eb.x) and min(ea.y2, eb.y2) > max(ea.y, eb.y):
            assert expanded_iou(a, b, s) > 0.0


@given(boxes, boxes, st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_translation_invariance(a, b, dx, dy):
    ta, tb = a.translate(dx, dy), b.translate(dx, dy)
    assert iou(ta, tb) == pytest.approx(iou(a, b), abs=1e-9)
    assert expanded_iou(ta, tb, 2) == pytest.approx(expanded_iou(a, b, 2), abs=1e-9)
    assert normalized_distance(ta, tb, 2) == pytest.approx(normalized_distance(a, b, 2), abs=1e-9)
    assert similarity(ta, tb) == pytest.approx(similarity(a, b), abs=1e-9)
    assert dotd(ta, tb, 3.0) == pytest.approx(dotd(a, b, 3.0), abs=1e-9)


@given(st.lists(boxes, min_size=1, max_size=6), st.lists(boxes, min_size=1, max_size=6))
def test_pairwise_forms_match_scalar(xs, ys):
    cfg = SimilarityConfig(1.7)
    m_iou = pairwise_iou(xs, ys, 1.7)
    m_nd = pairwise_normalized_distance(xs, ys, 1.7)
    m_sim = pairwise_similarity(xs, ys, cfg)
    m_dotd = pairwise_dotd(xs, ys, 4.0)
    for i, a in enumerate(xs):
        for j, b in enumerate(ys):
            assert m_iou[i, j] == pytest.approx(expanded_iou(a, b, 1.7), abs=1e-12)
            assert m_nd[i, j] == pytest.approx(normalized_distance(a, b, 1.7), abs=1e-12)
            assert m_sim[i, j] == pytest.approx(similarity(a, b, cfg), abs=1e-12)
            assert m_dotd[i, j] == pytest.approx(dotd(a, b, 4.0), abs=1e-12)


@given(st.lists(st.tuples(boxes, boxes), min_size=1, max_size=8))
def test_paired_forms_match_scalar(pairs):
    xs, ys = [p for p, _ in pairs], [q for _, q in pairs]
    for cfg in (SimilarityConfig(), SimilarityConfig(use_expansion=False)):
        got = paired_similarity(xs, ys, cfg)
        assert got == pytest.approx([similarity(a, b, cfg) for a, b in pairs], abs=1e-12)
    assert paired_iou(xs, ys) == pytest.approx([iou(a, b) for a, b in pairs], abs=1e-12)


def test_empty_pairwise_shapes():
    assert pairwise_iou([], [A]).shape == (0, 1)
    assert pairwise_similarity([A, B], []).shape == (2, 0)


def test_center_distance():
    assert center_distance(A, B) == 15.0
