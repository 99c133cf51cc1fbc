import numpy as np
import pytest

from spinsplice.control import (
    ControlSchedule,
    NoiseSpec,
    apply_noise,
    linear_baseline,
    make_schedule,
    noise_window_count,
    polynomial_cut,
    polynomial_stitch,
    pulse_train,
    schedule_from_dict,
    sine_cut,
)


class TestEvaluate:
    def test_linear_cut(self):
        for duration in (1.0, 2.0, 0.37):
            sched = linear_baseline(duration, "cut")
            for t in np.linspace(0.0, duration, 7):
                assert sched.value(t) == pytest.approx(1.0 - t / duration, abs=1e-14)
            assert sched.value(-0.5) == 1.0
            assert sched.value(duration + 0.5) == 0.0

    def test_linear_stitch(self):
        sched = linear_baseline(1.0, "stitch")
        assert sched.value(0.25) == pytest.approx(0.25, abs=1e-14)
        assert sched.value(-1.0) == 0.0
        assert sched.value(2.0) == 1.0

    def test_polynomial_published_parameters_midpoint(self):
        # two free coefficients 0.87 and -0.72 give a derived leading -1.15;
        # halfway through the drive: 1 - 1.15/2 + 0.87/4 - 0.72/8 = 0.5525
        sched = polynomial_cut(2.0, (0.87, -0.72))
        assert sched.value(1.0) == pytest.approx(0.5525, abs=1e-12)

    def test_endpoint_exactness_polynomial_and_sine(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            params = tuple(rng.normal(scale=40.0, size=rng.integers(1, 5)))
            poly = polynomial_cut(0.6, params)
            assert abs(poly.value(0.0) - 1.0) < 1e-12
            assert abs(poly.value(0.6)) < 1e-12
            sine = sine_cut(0.6, tuple(rng.normal(size=3)))
            assert abs(sine.value(0.0) - 1.0) < 1e-12
            assert abs(sine.value(0.6)) < 1e-12
            stitch = polynomial_stitch(0.6, params)
            assert abs(stitch.value(0.0)) < 1e-12
            assert abs(stitch.value(0.6) - 1.0) < 1e-12

    def test_pulse_windows(self):
        sched = pulse_train(0.6, (-5.4, 4.1))
        assert sched.value(0.1) == -5.4
        assert sched.value(0.45) == 4.1
        # half-open windows: the boundary belongs to the later pulse
        assert sched.value(0.0) == -5.4
        assert sched.value(0.3) == 4.1
        # plateaus outside the drive
        assert sched.value(-0.01) == 1.0
        assert sched.value(0.6) == 0.0
        assert sched.value(7.0) == 0.0

    def test_pulse_stitch_plateaus(self):
        sched = pulse_train(1.0, (0.3, 0.9), direction="stitch")
        assert sched.value(-1.0) == 0.0
        assert sched.value(1.0) == 1.0

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(5)
        schedules = [
            polynomial_cut(0.6, (54.3, -36.3)),
            sine_cut(0.6, (0.3, -0.1)),
            pulse_train(0.6, (-5.4, 4.1)),
            polynomial_stitch(0.9, (1.0, 2.0, -0.5)),
        ]
        ts = rng.uniform(-0.5, 1.5, size=40)
        for sched in schedules:
            vec = sched.values(ts)
            assert np.allclose(vec, [sched.value(t) for t in ts], atol=1e-14)


class TestStitchMirror:
    def test_pointwise_mirror_of_cut(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            params = tuple(rng.normal(scale=20.0, size=3))
            duration = float(rng.uniform(0.2, 3.0))
            stitch = polynomial_stitch(duration, params)
            cut = polynomial_cut(duration, params)
            for t in np.linspace(-0.2, duration + 0.2, 23):
                assert stitch.value(t) == pytest.approx(cut.value(duration - t), abs=1e-12)


class TestDerivative:
    def test_matches_numerical_derivative(self):
        schedules = [
            polynomial_cut(0.6, (54.3, -36.3)),
            sine_cut(0.6, (0.3, -0.1)),
            polynomial_stitch(0.9, (4.0, -2.0)),
        ]
        eps = 1e-7
        for sched in schedules:
            for t in np.linspace(0.05, sched.duration - 0.05, 9):
                numeric = (sched.value(t + eps) - sched.value(t - eps)) / (2 * eps)
                assert sched.derivative(t) == pytest.approx(numeric, abs=1e-5)

    def test_sine_boundary_slope_inequalities(self):
        # negative slope at both ends is equivalent to the two half-plane
        # conditions on the sine coefficients (two-term series)
        rng = np.random.default_rng(17)
        duration = 0.6
        for _ in range(200):
            b1, b2 = rng.uniform(-1.0, 1.0, size=2)
            sched = sine_cut(duration, (b1, b2))
            start_negative = sched.derivative(0.0) < 0.0
            end_negative = sched.derivative(duration) < 0.0
            assert start_negative == (b2 < 1.0 / (2.0 * np.pi) - b1 / 2.0)
            assert end_negative == (b2 < 1.0 / (2.0 * np.pi) + b1 / 2.0)

    def test_pulse_derivative_is_zero(self):
        sched = pulse_train(1.0, (2.0, -1.0))
        assert sched.derivative(0.4) == 0.0


class TestValidation:
    def test_duration_positive(self):
        with pytest.raises(ValueError, match="duration"):
            polynomial_cut(0.0)
        with pytest.raises(ValueError, match="duration"):
            polynomial_cut(-1.0, (1.0,))

    def test_kind_direction_consistency(self):
        with pytest.raises(ValueError, match="direction"):
            ControlSchedule("polynomial_cut", 1.0, (), "stitch")
        with pytest.raises(ValueError, match="direction"):
            make_schedule("sine_cut", 1.0, (0.1,), "stitch")

    def test_pulse_needs_amplitudes(self):
        with pytest.raises(ValueError, match="amplitude"):
            pulse_train(1.0, ())

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            make_schedule("spline", 1.0)

    def test_roundtrip_serialization(self):
        for sched in (
            polynomial_cut(0.6, (54.3, -36.3)),
            sine_cut(0.6, (0.3, -0.1)),
            pulse_train(0.6, (-5.4, 4.1), "stitch"),
            polynomial_stitch(2.0, (0.87, -0.72)),
        ):
            assert schedule_from_dict(sched.to_dict()) == sched


class TestNoise:
    def test_zero_strength_is_identity(self):
        base = polynomial_cut(0.6, (54.3, -36.3))
        noisy = apply_noise(base, NoiseSpec(window=0.01, strength=0.0, seed=42))
        ts = np.linspace(-0.1, 0.7, 50)
        assert np.abs(noisy.values(ts) - base.values(ts)).max() < 1e-15

    def test_fixed_seed_is_reproducible(self):
        base = linear_baseline(0.6)
        spec = NoiseSpec(window=0.1, strength=0.8, seed=123456)
        first = apply_noise(base, spec)
        second = apply_noise(base, spec)
        assert first.offsets == second.offsets
        assert apply_noise(base, NoiseSpec(0.1, 0.8, seed=654321)).offsets != first.offsets

    def test_offsets_bounded_and_windows_counted(self):
        base = linear_baseline(0.6)
        strength = 1.4
        noisy = apply_noise(base, NoiseSpec(window=0.01, strength=strength, seed=5))
        assert len(noisy.offsets) == 60
        assert noise_window_count(0.6, 0.01) == 60
        assert noise_window_count(0.6, 0.25) == 3
        assert max(abs(o) for o in noisy.offsets) <= strength / 2.0

    def test_noise_is_zero_mean(self):
        base = linear_baseline(1.0)
        strength = 1.0
        t_probe = 0.37
        draws = [
            apply_noise(base, NoiseSpec(window=0.5, strength=strength, seed=s)).value(t_probe)
            - base.value(t_probe)
            for s in range(4000)
        ]
        # uniform offsets have std strength/sqrt(12); allow four standard errors
        standard_error = strength / np.sqrt(12.0 * len(draws))
        assert abs(np.mean(draws)) < 4.0 * standard_error

    def test_outside_window_unchanged(self):
        base = linear_baseline(0.6)
        noisy = apply_noise(base, NoiseSpec(window=0.1, strength=2.0, seed=11))
        assert noisy.value(-0.2) == base.value(-0.2)
        assert noisy.value(0.6) == base.value(0.6)
        assert noisy.value(1.0) == base.value(1.0)

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="window"):
            NoiseSpec(window=0.0, strength=1.0, seed=1)
        with pytest.raises(ValueError, match="strength"):
            NoiseSpec(window=0.1, strength=-1.0, seed=1)
        with pytest.raises(ValueError, match="seed"):
            NoiseSpec(window=0.1, strength=1.0, seed=-5)

    def test_breakpoints_cover_noise_windows(self):
        base = pulse_train(0.6, (1.0, -2.0))
        noisy = apply_noise(base, NoiseSpec(window=0.2, strength=0.5, seed=3))
        assert noisy.breakpoints() == pytest.approx((0.2, 0.3, 0.4))
