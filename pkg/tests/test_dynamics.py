import numpy as np
import pytest

from aifpointing.dynamics import (
    NoiseSpec,
    SystemParams,
    TaskSpec,
    clamp_action,
    observe,
    sample_observation,
    scale_task,
    step,
    to_model,
    to_pixels,
)

DT = 0.02


def make_params(**kw):
    defaults = dict(damping=24.0, stiffness=10.0, target=0.85, width=0.06, click_threshold=0.05)
    defaults.update(kw)
    return SystemParams(**defaults)


class TestStep:
    def test_origin_is_fixed_point(self):
        p = make_params()
        assert np.array_equal(step(p, np.zeros(4), np.zeros(2), DT), np.zeros(4))

    def test_cursor_row_hand_evaluated(self):
        p = make_params(damping=24.0)
        out = step(p, [0.0, 1.0, 0.0, 0.0], [0.0, 0.0], DT)
        np.testing.assert_allclose(out, [0.02, 0.52, 0.0, 0.0], atol=1e-15)

    def test_button_row_hand_evaluated(self):
        p = make_params(stiffness=10.0)
        out = step(p, [0.0, 0.0, 0.1, 0.2], [0.0, 1.0], DT)
        np.testing.assert_allclose(out, [0.0, 0.0, 0.2, 0.18], atol=1e-15)

    def test_rejects_non_finite(self):
        p = make_params()
        with pytest.raises(ValueError):
            step(p, [np.nan, 0, 0, 0], [0, 0], DT)
        with pytest.raises(ValueError):
            step(p, np.zeros(4), [np.inf, 0], DT)

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            step(make_params(), np.zeros(4), np.zeros(2), 0.0)

    def test_actions_clamped_to_bounds(self):
        p = make_params()
        big = step(p, np.zeros(4), [500.0, 30.0], DT)
        capped = step(p, np.zeros(4), [50.0, 1.0], DT)
        np.testing.assert_array_equal(big, capped)
        assert np.array_equal(clamp_action([-999, 0.5]), [-50.0, 0.5])

    def test_linear_in_state_and_action(self):
        # sums of sampled actions must stay inside the clamp bounds
        p = make_params()
        rng = np.random.default_rng(7)
        zero = step(p, np.zeros(4), np.zeros(2), DT)
        for _ in range(50):
            s, sp = rng.standard_normal((2, 4))
            a, ap = rng.uniform([-25.0, -0.5], [25.0, 0.5], (2, 2))
            lhs = step(p, s + sp, a + ap, DT) - zero
            rhs = (step(p, s, a, DT) - zero) + (step(p, sp, ap, DT) - zero)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_velocity_and_displacement_decay(self):
        p = make_params()
        s = np.array([0.3, 1.5, 0.04, 0.08])
        for _ in range(40):
            nxt = step(p, s, np.zeros(2), DT)
            assert abs(nxt[1]) <= abs(s[1])
            assert abs(nxt[3]) <= abs(s[3])
            s = nxt


class TestObserve:
    def test_click_and_hit_on_target(self):
        p = make_params()
        o = observe(p, [p.target, 0.0, 0.04, 0.06])
        assert (o[2], o[3], o[4]) == (1.0, 1.0, 0.0)

    def test_misclick_outside_target(self):
        p = make_params()
        o = observe(p, [p.target + p.width, 0.0, 0.04, 0.06])
        assert (o[2], o[3], o[4]) == (1.0, 0.0, -1.0)

    def test_no_reclick_without_release(self):
        p = make_params()
        o = observe(p, [p.target, 0.0, 0.06, 0.06])
        assert o[2] == 0.0

    def test_boundary_counts_as_hit(self):
        # closed interval: the exact boundary is a hit (dyadic values so the
        # comparison is float-exact)
        p = make_params(target=0.5, width=0.25)
        o = observe(p, [0.625, 0.0, 0.0, 0.06])
        assert o[3] == 1.0

    def test_continuous_channels_pass_through(self):
        p = make_params()
        o = observe(p, [0.123, -0.4, 0.01, 0.02])
        assert o[0] == 0.123 and o[1] == 0.02

    def test_feedback_identity_holds_everywhere(self):
        p = make_params()
        rng = np.random.default_rng(3)
        for _ in range(200):
            s = rng.uniform([-1, -2, -0.1, -0.1], [2, 2, 0.15, 0.15])
            o = observe(p, s)
            assert o[4] == o[3] - o[2]
            if o[2] == 1.0:
                assert s[2] < p.click_threshold < s[3]


class TestSampleObservation:
    def test_zero_noise_equals_observe(self):
        p = make_params()
        rng = np.random.default_rng(0)
        s = np.array([0.2, 0.1, 0.0, 0.06])
        np.testing.assert_array_equal(
            sample_observation(p, s, NoiseSpec(0.0, 0.0), rng), observe(p, s)
        )

    def test_fixed_seed_is_reproducible(self):
        p = make_params()
        s = np.array([0.2, 0.1, 0.0, 0.06])
        a = sample_observation(p, s, NoiseSpec(), np.random.default_rng(42))
        b = sample_observation(p, s, NoiseSpec(), np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)

    def test_discrete_channels_noise_free(self):
        p = make_params()
        rng = np.random.default_rng(5)
        o = sample_observation(p, [p.target, 0, 0.04, 0.06], NoiseSpec(0.5, 0.5), rng)
        assert (o[2], o[3], o[4]) == (1.0, 1.0, 0.0)

    @pytest.mark.slow
    def test_empirical_noise_std(self):
        p = make_params()
        rng = np.random.default_rng(11)
        sigma = 0.37
        s = np.zeros(4)
        draws = np.array(
            [sample_observation(p, s, NoiseSpec(sigma, sigma), rng)[0] for _ in range(100_000)]
        )
        assert abs(draws.std() - sigma) / sigma < 0.02


class TestTaskScaling:
    def test_stated_scaling(self):
        t, w = scale_task(TaskSpec(target_px=1750, width_px=60))
        assert (t, w) == (0.85, 0.06)

    def test_centring(self):
        t, _ = scale_task(TaskSpec(target_px=900, width_px=60))
        assert t == 0.0

    def test_round_trip_identity(self):
        task = TaskSpec(target_px=363, width_px=20)
        t, _ = scale_task(task)
        assert to_pixels(t, task) == 363
        assert to_model(363, task) == t

    def test_target_outside_canvas_rejected(self):
        with pytest.raises(ValueError):
            TaskSpec(target_px=1795, width_px=20)

    def test_invariant_validation(self):
        with pytest.raises(ValueError):
            SystemParams(width=0.0)
        with pytest.raises(ValueError):
            SystemParams(damping=-1.0)
        with pytest.raises(ValueError):
            NoiseSpec(-0.1, 0.0)
