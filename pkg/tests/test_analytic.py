import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mesoecho.analytic import (
    Regime,
    TwoSpinParams,
    decoherence_time,
    default_glbe_step,
    glbe_converged,
    glbe_numeric_solver,
    isolated_chain_P11,
    observable_frequency,
    two_spin_decay_rates,
    two_spin_P11,
)
from mesoecho.errors import CriticalRegimeError, StepSizeError
from mesoecho.evolution import EvolutionConfig, autocorrelation_P11
from mesoecho.lattice import LadderSpec

import oracle

T = np.linspace(0, 60, 601)


class TestIsolatedChain:
    def test_single_site(self):
        assert np.all(isolated_chain_P11(1, "open", T).values == 1.0)

    def test_two_sites(self):
        assert np.allclose(isolated_chain_P11(2, "open", T).values, np.cos(T / 2) ** 2, atol=1e-14)

    @pytest.mark.parametrize("m", [2, 3, 4, 5])
    def test_open_matches_dense_trace(self, m):
        h = oracle.ladder_hamiltonian(m, 1.0, 0.0, 0, 0, False)
        ref = oracle.autocorrelation(h, 0, 2 * m, T[::20])
        assert np.allclose(isolated_chain_P11(m, "open", T[::20]).values, ref, atol=1e-10)

    @pytest.mark.parametrize("m", [3, 4, 5, 6])
    def test_ring_matches_ladder_at_zero_coupling(self, m):
        cfg = EvolutionConfig(t_max=60, dt=0.1)
        ladder = autocorrelation_P11(LadderSpec(m, boundary="periodic"), cfg)
        assert np.max(np.abs(isolated_chain_P11(m, "periodic", cfg.times).values - ladder.values)) < 1e-8

    def test_ring_needs_twist_average_for_even_length(self):
        # plain periodic plane waves miss the antiperiodic parity sector
        m = 4
        k = np.arange(m)
        plain = np.abs(np.exp(-1j * np.outer(T, np.cos(2 * np.pi * k / m))).sum(1) / m) ** 2
        exact = autocorrelation_P11(LadderSpec(m, boundary="periodic"), EvolutionConfig(t_max=60, dt=0.1)).values
        assert np.max(np.abs(plain - exact)) > 0.1
        assert np.max(np.abs(isolated_chain_P11(m, "periodic", T).values - exact)) < 1e-8

    def test_excitation_site_in_open_chain(self):
        cfg = EvolutionConfig(t_max=20, dt=0.5)
        ladder = autocorrelation_P11(LadderSpec(4, excitation_site=2), cfg)
        iso = isolated_chain_P11(4, "open", cfg.times, excitation_site=2)
        assert np.allclose(iso.values, ladder.values, atol=1e-10)


class TestDecayRates:
    def test_ratio(self):
        gxy, gzz = two_spin_decay_rates(1, 1, 0.1, 1.0)
        assert gzz / gxy == pytest.approx(8 / (3 * math.pi), abs=1e-12)

    def test_absolute_values(self):
        gxy, gzz = two_spin_decay_rates(1, 1, 0.1, 1.0)
        assert 2 * gxy == pytest.approx(0.01, rel=1e-14)
        assert 2 * gzz == pytest.approx(8 / (3 * math.pi) * 0.01, rel=1e-14)

    def test_vanishing_weights(self):
        assert two_spin_decay_rates(0, 1, 0.1, 1)[1] == 0
        assert two_spin_decay_rates(1, 0, 0.1, 1)[0] == 0

    def test_environment_polarization_reduces_ising_rate(self):
        rates = [two_spin_decay_rates(1, 1, 0.1, 1, (dp, 0.0))[1] for dp in (0, 0.1, 0.2, 0.3, 0.5)]
        assert all(x > y for x, y in zip(rates, rates[1:]))

    def test_doubling_scales_quadratically(self):
        g1 = two_spin_decay_rates(1.3, 0.7, 0.05, 1.0)
        assert two_spin_decay_rates(2.6, 0.7, 0.05, 1.0)[1] == pytest.approx(4 * g1[1], rel=1e-14)
        assert two_spin_decay_rates(1.3, 1.4, 0.05, 1.0)[0] == pytest.approx(4 * g1[0], rel=1e-14)
        g2 = two_spin_decay_rates(1.3, 0.7, 0.1, 1.0)
        assert g2[0] == pytest.approx(4 * g1[0], rel=1e-14) and g2[1] == pytest.approx(4 * g1[1], rel=1e-14)
        g3 = two_spin_decay_rates(1.3, 0.7, 0.05, 2.0)
        assert g3[0] == pytest.approx(g1[0] / 2, rel=1e-14) and g3[1] == pytest.approx(g1[1] / 2, rel=1e-14)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            two_spin_decay_rates(1, 1, 0.1, 0.0)
        with pytest.raises(ValueError):
            two_spin_decay_rates(1, 1, 0.1, 1.0, (0.7, 0))


class TestObservableFrequency:
    def test_no_ising(self):
        sol = observable_frequency(TwoSpinParams(1.3, 0.1, 0.0))
        assert sol.omega == 1.3 and sol.eta == 0 and sol.phi == 0
        assert sol.regime is Regime.OSCILLATORY

    def test_critical(self):
        sol = observable_frequency(TwoSpinParams(1.0, 0.1, 1.0))
        assert sol.regime is Regime.CRITICAL and sol.omega == 0 and sol.eta == 0 and sol.phi is None

    def test_overdamped(self):
        sol = observable_frequency(TwoSpinParams(1.0, 0.0, 2.0))
        assert sol.omega == 0 and sol.eta == pytest.approx(math.sqrt(3))
        assert sol.regime is Regime.OVERDAMPED

    @given(g=st.floats(0.0, 5.0), w0=st.floats(0.1, 3.0))
    def test_trichotomy(self, g, w0):
        sol = observable_frequency(TwoSpinParams(w0, 0.0, g))
        if g < w0:
            assert sol.regime is Regime.OSCILLATORY and sol.omega > 0 and sol.eta == 0
            assert -math.pi / 2 < sol.phi <= 0
            assert math.tan(sol.phi) == pytest.approx(-g / sol.omega, rel=1e-9, abs=1e-12)
        elif g > w0:
            assert sol.regime is Regime.OVERDAMPED and sol.omega == 0 and sol.eta > 0

    def test_continuity_at_criticality(self):
        below = observable_frequency(TwoSpinParams(1.0, 0.0, 1 - 1e-10))
        above = observable_frequency(TwoSpinParams(1.0, 0.0, 1 + 1e-10))
        assert below.omega < 1e-4 and above.eta < 1e-4


class TestClosedForm:
    def test_isolated_swap(self):
        trace = two_spin_P11(TwoSpinParams(1.0, 0.0, 0.0), T)
        assert np.allclose(trace.values, np.cos(T / 2) ** 2, atol=1e-14)

    @given(
        w0=st.floats(0.2, 2.0),
        gxy=st.floats(0.0, 1.0),
        gzz=st.floats(0.0, 4.0),
        dp=st.floats(0.01, 0.5),
    )
    def test_initial_value(self, w0, gxy, gzz, dp):
        p = TwoSpinParams(w0, gxy, gzz, dp)
        if observable_frequency(p).regime is Regime.CRITICAL:
            return
        assert two_spin_P11(p, [0.0]).values[0] == pytest.approx(2 * dp, abs=1e-13)

    def test_pure_ising_limit(self):
        p = TwoSpinParams(1.0, 0.0, 0.3, delta_p=0.4)
        assert two_spin_P11(p, [2000.0]).values[0] == pytest.approx(0.4, abs=1e-12)
        tail = glbe_numeric_solver(p, 0.02, 60.0).values[-1]
        assert tail == pytest.approx(0.4, abs=1e-3)

    def test_pure_xy_limit(self):
        assert two_spin_P11(TwoSpinParams(1.0, 0.2, 0.0), [500.0]).values[0] == pytest.approx(0, abs=1e-12)

    def test_critical_refused(self):
        with pytest.raises(CriticalRegimeError):
            two_spin_P11(TwoSpinParams(1.0, 0.0, 1.0), T)

    def test_overdamped_finite_at_long_times(self):
        v = two_spin_P11(TwoSpinParams(1.0, 0.0, 50.0), [0.0, 1e4]).values
        assert np.all(np.isfinite(v))

    def test_decoherence_time(self):
        p = TwoSpinParams(1.0, 0.02, 0.1)
        assert decoherence_time(p) == pytest.approx(1 / 0.14)
        p = TwoSpinParams(1.0, 0.0, 2.0)
        assert decoherence_time(p) == pytest.approx(1 / (2 - math.sqrt(3)))
        assert decoherence_time(TwoSpinParams(1.0, 0.0, 0.0)) == math.inf


class TestVolterra:
    def test_free_rotation(self):
        tr = glbe_numeric_solver(TwoSpinParams(1.0, 0.0, 0.0), 0.05, 50.0)
        assert np.max(np.abs(tr.values - np.cos(tr.times / 2) ** 2)) < 1e-8

    def test_step_precondition(self):
        with pytest.raises(StepSizeError):
            glbe_numeric_solver(TwoSpinParams(1.0, 0.0, 0.0), 0.06, 10.0)
        with pytest.raises(StepSizeError):
            glbe_numeric_solver(TwoSpinParams(0.1, 0.5, 1.0), 0.04, 10.0)

    def test_oscillatory_match(self):
        p = TwoSpinParams(1.0, 0.0, 0.1)
        tr = glbe_numeric_solver(p, 0.01, 5 * decoherence_time(p))
        assert np.max(np.abs(tr.values - two_spin_P11(p, tr.times).values)) < 1e-3

    def test_second_order_without_extrapolation(self):
        p = TwoSpinParams(1.0, 0.1, 0.6)
        errs = []
        for dt in (0.02, 0.01):
            tr = glbe_numeric_solver(p, dt, 10.0, richardson=False)
            errs.append(np.max(np.abs(tr.values - two_spin_P11(p, tr.times).values)))
        assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)

    def test_overdamped_coherent_part_monotone(self):
        p = TwoSpinParams(1.0, 0.0, 3.0)
        tr = glbe_converged(p, 20.0)
        # with gamma_xy = 0 the incoherent term is constant, so P itself decays monotonically
        assert np.all(np.diff(tr.values) <= 1e-12)
        assert np.max(np.abs(tr.values - two_spin_P11(p, tr.times).values)) < 1e-4

    def test_critical_point_still_integrates(self):
        p = TwoSpinParams(1.0, 0.05, 1.0)
        tr = glbe_converged(p, 10.0)
        assert np.all(np.isfinite(tr.values)) and tr.values[0] == pytest.approx(1.0)

    def test_default_step_respects_precondition(self):
        p = TwoSpinParams(0.5, 1.0, 2.0)
        glbe_numeric_solver(p, default_glbe_step(p), 1.0)
