import numpy as np
import pytest
from hypothesis import given, strategies as st

from mesoecho.echo import (
    EchoRecord,
    EchoSeries,
    detect_echo_maxima,
    estimate_crossover,
    extract_AB,
    first_echo_spacing,
    fit_decoherence_time,
    fit_fgr_slope,
    line_fit,
    log_ratio_series,
)
from mesoecho.errors import FitError
from mesoecho.evolution import PolarizationTrace

TIMES = np.round(0.01 * np.arange(0, 6001), 10)


def _records(ts, ys):
    return [EchoRecord(k + 1, float(t), float(y), 1.0, 1.0) for k, (t, y) in enumerate(zip(ts, ys))]


def _series(values, iso=None):
    iso = np.ones_like(values) if iso is None else iso
    return EchoSeries(TIMES, np.asarray(values, dtype=float), np.exp(-values) * iso, iso)


class TestLogRatio:
    def test_identical_traces(self):
        iso = PolarizationTrace(TIMES, 0.5 + 0.4 * np.cos(TIMES))
        s = log_ratio_series(iso, iso)
        assert np.all(s.values == 0)

    def test_synthetic_exponential(self):
        iso = PolarizationTrace(TIMES, 0.6 + 0.3 * np.cos(TIMES))
        pert = PolarizationTrace(TIMES, iso.values * np.exp(-TIMES / 7.0))
        s = log_ratio_series(pert, iso)
        assert np.allclose(s.values, TIMES / 7.0, atol=1e-12)

    def test_mask_floor(self):
        iso = PolarizationTrace(TIMES[:4], [1.0, 1e-7, 0.5, 0.5])
        pert = PolarizationTrace(TIMES[:4], [1.0, 0.5, 1e-6, 0.25])
        s = log_ratio_series(pert, iso)
        assert list(s.mask) == [False, True, True, False]
        assert s.values[3] == pytest.approx(np.log(2))

    def test_grid_mismatch(self):
        a = PolarizationTrace([0, 1, 2], [1, 1, 1])
        b = PolarizationTrace([0, 1, 3], [1, 1, 1])
        with pytest.raises(ValueError):
            log_ratio_series(a, b)


class TestDetection:
    def test_sine_crests(self):
        y = TIMES / 20 + 0.2 * np.sin(5 * TIMES)
        spacing = 2 * np.pi / 5
        records = detect_echo_maxima(_series(y), spacing=spacing)
        # crests of t/20 + 0.2 sin(5t): 5 * 0.2 cos(5t) = -1/20
        phase = np.arccos(-1 / 20)
        expected = (phase + 2 * np.pi * np.arange(60)) / 5
        expected = expected[(expected > 0.3 * spacing) & (expected < TIMES[-1] - 0.3 * spacing)]
        got = np.array([r.time for r in records])
        assert len(got) == len(expected)
        assert np.max(np.abs(got - expected)) <= 0.01
        assert np.allclose(np.diff(got), spacing, atol=0.02)
        assert [r.index for r in records] == list(range(1, len(records) + 1))

    def test_linear_has_no_maxima(self):
        with pytest.raises(FitError):
            detect_echo_maxima(_series(TIMES / 10), spacing=1.0)

    def test_origin_excluded(self):
        # the only maximum of a falling series is t = 0
        with pytest.raises(FitError):
            detect_echo_maxima(_series(-TIMES), spacing=0.02)

    def test_spacing_from_isolated_trace(self):
        iso = 0.5 + 0.5 * np.cos(2 * np.pi * TIMES / 3.0)
        assert first_echo_spacing(TIMES, iso) == pytest.approx(3.0)

    def test_masked_points_ignored(self):
        y = TIMES / 20 + 0.2 * np.sin(5 * TIMES)
        y[1000:1100] = np.nan
        records = detect_echo_maxima(_series(y), spacing=2 * np.pi / 5)
        assert all(not (10.0 <= r.time < 11.0) for r in records)


class TestCrossover:
    def test_linear_runs_to_end(self):
        ts = 6.5 * np.arange(1, 11)
        assert estimate_crossover(_records(ts, ts / 40)) == ts[-1]

    def test_linear_then_flat(self):
        ts = 6.5 * np.arange(1, 11)
        ys = np.minimum(ts, ts[4]) / 40
        assert estimate_crossover(_records(ts, ys)) == ts[5]

    def test_needs_four_records(self):
        with pytest.raises(FitError):
            estimate_crossover(_records([1, 2, 3], [1, 2, 3]))

    def test_noisy_envelope_then_plateau(self):
        rng = np.random.default_rng(0)
        ts = 6.5 * np.arange(1, 16)
        ys = np.minimum(ts, ts[8]) / 30 + 0.003 * rng.normal(size=len(ts))
        t_r = estimate_crossover(_records(ts, ys))
        assert ts[3] <= t_r <= ts[10]

    def test_result_is_fixed_point(self):
        rng = np.random.default_rng(4)
        ts = 6.5 * np.arange(1, 20)
        ys = ts / 30 + 0.01 * rng.normal(size=len(ts))
        t_r = estimate_crossover(_records(ts, ys))
        k = int(np.searchsorted(ts, t_r))
        for j in range(3, k):
            f = line_fit(ts[:j], ys[:j])
            bound = 2 * max(f.rmse, 1e-10 * (1 + np.max(np.abs(ys[:j]))))
            assert abs(ys[j] - (f.intercept + f.slope * ts[j])) <= bound


class TestDecoherenceFit:
    def test_exact_exponential(self):
        ts = 6.5 * np.arange(1, 12)
        fit = fit_decoherence_time(_records(ts, 0.3 + ts / 50), ts[-1] + 1)
        assert fit.tau_phi == pytest.approx(50, rel=1e-9)
        assert fit.n_points_used == 11
        assert fit.included == tuple(range(1, 12))

    def test_records_beyond_crossover_dropped(self):
        ts = 6.5 * np.arange(1, 12)
        fit = fit_decoherence_time(_records(ts, ts / 50), ts[5])
        assert fit.n_points_used == 5 and fit.crossover_time == ts[5]

    def test_needs_three_points(self):
        ts = 6.5 * np.arange(1, 12)
        with pytest.raises(FitError):
            fit_decoherence_time(_records(ts, ts / 50), ts[2])

    def test_rejects_growth(self):
        ts = 6.5 * np.arange(1, 6)
        with pytest.raises(FitError):
            fit_decoherence_time(_records(ts, -ts / 50), 100.0)

    @given(shift=st.floats(-5, 5), tau=st.floats(5, 500))
    def test_intercept_absorbs_offset(self, shift, tau):
        ts = 6.5 * np.arange(1, 10)
        a = fit_decoherence_time(_records(ts, ts / tau), 100.0)
        b = fit_decoherence_time(_records(ts, ts / tau + shift), 100.0)
        assert b.tau_phi == pytest.approx(a.tau_phi, rel=1e-9)

    @given(c=st.floats(0.1, 10))
    def test_time_scaling(self, c):
        ts = 6.5 * np.arange(1, 10)
        ys = ts / 40 + 0.01 * np.sin(ts)
        a = fit_decoherence_time(_records(ts, ys), 100.0)
        b = fit_decoherence_time(_records(c * ts, ys), 100.0 * c)
        assert b.tau_phi == pytest.approx(c * a.tau_phi, rel=1e-9)

    def test_noise_robustness(self):
        ts = 6.5 * np.arange(1, 16)
        taus = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            ratio = np.exp(-ts / 50) * (1 + 0.01 * rng.normal(size=len(ts)))
            taus.append(fit_decoherence_time(_records(ts, -np.log(ratio)), ts[-1] + 1).tau_phi)
        assert np.all(np.abs(np.array(taus) - 50) <= 2.5)


class TestFGR:
    def test_exact_line(self):
        x = np.linspace(0.0025, 0.0144, 8)
        f = fit_fgr_slope(np.column_stack((x, 0.96 * x)))
        assert f.slope == pytest.approx(0.96, rel=1e-12)
        assert abs(f.intercept) < 1e-14

    def test_repeated_abscissa(self):
        with pytest.raises(FitError):
            fit_fgr_slope([(0.01, 1), (0.01, 2), (0.01, 3)])

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_fgr_slope([(0.01, 1), (0.02, 2)])

    def test_scaling(self):
        x = np.linspace(0.0025, 0.0144, 8)
        y = 1.3 * x + 1e-4 * np.sin(40 * x)
        a = fit_fgr_slope(np.column_stack((x, y))).slope
        b = fit_fgr_slope(np.column_stack((x, y / 3.0))).slope
        assert b == pytest.approx(a / 3.0, rel=1e-12)


WEIGHTS = [(0, 1), (1, 1), (-2, 1), (1, 0.5), (1.8, 0.5)]


class TestAB:
    def test_recovers_constants(self):
        entries = [(a, b, 0.49 * a * a + 1.00 * b * b) for a, b in WEIGHTS]
        ab = extract_AB(entries)
        assert ab.A == pytest.approx(0.49, abs=1e-9) and ab.B == pytest.approx(1.00, abs=1e-9)

    @given(A=st.floats(0.05, 5), B=st.floats(0.05, 5))
    def test_exact_for_any_constants(self, A, B):
        ab = extract_AB([(a, b, A * a * a + B * b * b) for a, b in WEIGHTS])
        assert ab.A == pytest.approx(A, rel=1e-9) and ab.B == pytest.approx(B, rel=1e-9)

    def test_tabulated_slopes(self):
        ab = extract_AB([(a, b, s) for (a, b), s in zip(WEIGHTS, [0.96, 1.47, 2.7, 0.81, 1.8])])
        assert 0.41 <= ab.A <= 0.57 and 0.94 <= ab.B <= 1.06
        assert ab.A_err > 0 and ab.B_err > 0

    def test_degenerate(self):
        with pytest.raises(FitError):
            extract_AB([(1, 1, 1.4), (2, 2, 5.6)])
        with pytest.raises(FitError):
            extract_AB([(1, 1, 1.4), (2, 2, 5.6), (3, 3, 12.6)])

    def test_requires_both_weights(self):
        with pytest.raises(FitError):
            extract_AB([(0, 1, 1.0), (0, 2, 4.0), (0, 3, 9.0)])

    def test_non_positive_intercept(self):
        with pytest.raises(FitError):
            extract_AB([(0, 1, -1.0), (1, 1, 1.0), (2, 1, 2.0)])
