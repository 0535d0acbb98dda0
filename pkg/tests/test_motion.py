import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smotkit.geometry import BBox
from smotkit.motion import (
    EmaVelocity,
    KalmanState,
    MotionConfig,
    direction_cost,
    ema_update,
    kf_init,
    kf_predict,
    kf_update,
    pairwise_direction_cost,
)

CFG = MotionConfig()
finite = st.floats(-1e3, 1e3, allow_nan=False)


def is_psd(p, tol=1e-6):
    return np.allclose(p, p.T, atol=1e-8) and np.linalg.eigvalsh(p).min() >= -tol


class TestKalman:
    def test_init_zero_velocity(self):
        s = kf_init(BBox.from_center(100, 50, 10, 8))
        assert s.mean.tolist() == [100, 50, 10, 8, 0, 0, 0, 0]
        assert is_psd(s.covariance)

    def test_init_deterministic(self):
        a, b = kf_init(BBox(1, 2, 3, 4)), kf_init(BBox(1, 2, 3, 4))
        assert np.array_equal(a.mean, b.mean) and np.array_equal(a.covariance, b.covariance)

    def test_init_uses_configured_uncertainty(self):
        s = kf_init(BBox.from_center(0, 0, 10, 20))
        std = np.sqrt(np.diag(s.covariance))
        assert std[:4] == pytest.approx([2 * 20 / 20] * 4)
        assert std[4:] == pytest.approx([10 * 20 / 160] * 4)

    def test_predict_moves_by_velocity(self):
        s = KalmanState(np.array([0, 0, 10, 10, 3, -2, 0, 0], float), np.eye(8))
        p = kf_predict(s)
        assert p.mean[:4].tolist() == [3, -2, 10, 10]

    def test_predict_static(self):
        s = kf_init(BBox(5, 5, 10, 10))
        assert kf_predict(s).mean[:4] == pytest.approx(s.mean[:4])

    def test_predict_matches_hand_rolled_oracle(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(8, 8))
        s = KalmanState(np.array([10, 10, 6, 9, 1, 1, 0, 0], float), a @ a.T + np.eye(8))
        f = np.eye(8)
        for i in range(4):
            f[i, i + 4] = 1.0
        q = np.diag([(9 / 20) ** 2] * 4 + [(9 / 160) ** 2] * 4)
        expected = f @ s.covariance @ f.T + q
        got = kf_predict(s)
        assert got.covariance == pytest.approx(expected, abs=1e-12)
        assert np.trace(got.covariance) > np.trace(s.covariance)

    def test_update_zero_innovation_keeps_mean(self):
        s = kf_predict(kf_init(BBox(0, 0, 10, 10)))
        u = kf_update(s, s.bbox())
        assert u.mean[:4] == pytest.approx(s.mean[:4], abs=1e-12)

    def test_update_contracts_covariance(self):
        s = kf_predict(kf_init(BBox(0, 0, 10, 10)))
        u = kf_update(s, BBox(1, 1, 10, 10))
        assert np.trace(u.covariance) <= np.trace(s.covariance)
        assert is_psd(u.covariance)

    def test_repeated_constant_measurement_converges(self):
        target = BBox(40, 30, 12, 7)
        s = kf_init(BBox(38, 29, 11, 8))
        for _ in range(50):
            s = kf_update(kf_predict(s), target)
        z = np.array([target.cx, target.cy, target.w, target.h])
        assert np.linalg.norm(s.mean[:4] - z) < 1e-3

    def test_size_floor(self):
        s = KalmanState(np.array([0, 0, 1.5, 1.5, 0, 0, -3, -3], float), np.eye(8))
        p = kf_predict(s)
        assert p.mean[2] == 1.0 and p.mean[3] == 1.0

    def test_singular_innovation_is_regularized(self):
        s = KalmanState(np.array([0, 0, 10, 10, 0, 0, 0, 0], float), np.zeros((8, 8)))
        cfg = MotionConfig(std_weight_position=1e-300)
        u = kf_update(s, BBox(1, 1, 10, 10), cfg)
        assert np.all(np.isfinite(u.mean)) and np.all(np.isfinite(u.covariance))

    @pytest.mark.parametrize("v, h", [((1.5, -1.0), 10), ((0.0, 1.9), 6), ((1.2, 1.2), 40), ((0.3, 0.1), 3)])
    def test_constant_velocity_prediction_error(self, v, h):
        # noise-free, so the lag is speed * (gain-dependent factor); the factor
        # after 5 updates is ~0.25, independent of box size
        v = np.array(v)
        s = kf_init(BBox.from_center(100, 100, 10, h))
        for t in range(1, 30):
            s = kf_predict(s)
            c = np.array([100, 100]) + t * v
            if t > 5:
                assert np.linalg.norm(s.mean[:2] - c) < 0.5
            s = kf_update(s, BBox.from_center(c[0], c[1], 10, h))

    def test_fast_target_lag_decays(self):
        v = np.array([3.0, -1.5])
        s = kf_init(BBox.from_center(100, 100, 10, 10))
        errs = []
        for t in range(1, 30):
            s = kf_predict(s)
            c = np.array([100, 100]) + t * v
            errs.append(np.linalg.norm(s.mean[:2] - c))
            s = kf_update(s, BBox.from_center(c[0], c[1], 10, 10))
        assert all(b < a for a, b in zip(errs[1:], errs[2:]))
        assert errs[-1] < 0.05

    def test_symmetry_over_long_run(self):
        rng = np.random.default_rng(0)
        s = kf_init(BBox(0, 0, 10, 10))
        worst = 0.0
        for t in range(10_000):
            s = kf_predict(s)
            s = kf_update(s, BBox(t * 0.5 + rng.normal(), rng.normal(), 10 + rng.normal(), 10))
            worst = max(worst, float(np.abs(s.covariance - s.covariance.T).max()))
        assert worst < 1e-8
        assert is_psd(s.covariance)


class TestEma:
    def test_formula(self):
        v = ema_update(EmaVelocity(1, 0, True), (0, 1), 0.8)
        assert (v.vx, v.vy) == pytest.approx((0.8, 0.2))

    def test_alpha_extremes(self):
        base = EmaVelocity(2, 3, True)
        assert ema_update(base, (9, 9), 1.0) == base
        assert ema_update(base, (9, -1), 0.0) == EmaVelocity(9, -1, True)

    def test_seeding(self):
        assert ema_update(EmaVelocity(), (4, 5), 0.8) == EmaVelocity(4, 5, True)

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            ema_update(EmaVelocity(), (0, 0), 1.5)

    @given(finite, finite, finite, finite, st.floats(0, 1))
    def test_convex_combination(self, vx, vy, ix, iy, a):
        out = ema_update(EmaVelocity(vx, vy, True), (ix, iy), a)
        for o, p, q in ((out.vx, vx, ix), (out.vy, vy, iy)):
            assert min(p, q) - 1e-9 <= o <= max(p, q) + 1e-9


class TestDirection:
    @pytest.mark.parametrize("disp, expected", [((2, 0), 0.0), ((-1, 0), 1.0), ((0, 3), 0.5)])
    def test_examples(self, disp, expected):
        assert direction_cost(EmaVelocity(1, 0, True), (0, 0), disp) == pytest.approx(expected)

    def test_uninitialized_and_degenerate(self):
        assert direction_cost(EmaVelocity(), (0, 0), (5, 5)) == 0.0
        assert direction_cost(EmaVelocity(1e-9, 0, True), (0, 0), (5, 5)) == 0.0
        assert direction_cost(EmaVelocity(1, 0, True), (5, 5), (5, 5 + 1e-9)) == 0.0

    @given(finite, finite, finite, finite, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, vx, vy, dx, dy, k1, k2):
        base = direction_cost(EmaVelocity(vx, vy, True), (0, 0), (dx, dy))
        scaled = direction_cost(EmaVelocity(k1 * vx, k1 * vy, True), (0, 0), (k2 * dx, k2 * dy))
        if math.hypot(vx, vy) > 1e-3 and math.hypot(dx, dy) > 1e-3:
            assert scaled == pytest.approx(base, abs=1e-7)
        assert 0.0 <= base <= 1.0

    @given(
        st.lists(st.tuples(finite, finite, finite, finite), min_size=1, max_size=5),
        st.lists(st.tuples(finite, finite), min_size=1, max_size=5),
    )
    def test_vectorized_matches_scalar(self, tracks, dets):
        vel = np.array([t[:2] for t in tracks])
        last = np.array([t[2:] for t in tracks])
        got = pairwise_direction_cost(vel, last, np.array(dets))
        for i, t in enumerate(tracks):
            for j, d in enumerate(dets):
                want = direction_cost(EmaVelocity(t[0], t[1], True), t[2:], d)
                assert got[i, j] == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize(
    "kwargs", [dict(ema_alpha=1.1), dict(ema_alpha=-0.1), dict(direction_cost_weight=-1), dict(delta_t=0),
               dict(std_weight_position=0)]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        MotionConfig(**kwargs)
