"""Two-level decay model: amplitude, maps, rates, thresholds."""

import numpy as np
import pytest

from nmkit import channels, decay
from nmkit.errors import (
    GridTooCoarse,
    NegativeTime,
    Singular,
    UnphysicalG,
    ValidationError,
)


def zero_kernel(t_max, dt):
    n = int(round(t_max / dt)) + 1
    return decay.TabulatedKernel(times=dt * np.arange(n), values=np.zeros(n, dtype=complex))


class TestAnalyticAmplitude:
    def test_initial_condition(self):
        for gamma0 in (0.1, 0.5, 5.0):
            assert decay.g_analytic(decay.ExponentialKernel(gamma0, 1.0), 0.0) == 1.0

    def test_critical_coupling_limit(self):
        # d -> 0 limit: e^{-lam t/2} (1 + lam t / 2) at gamma0 = lam/2
        k = decay.ExponentialKernel(0.5, 1.0)
        assert decay.g_analytic(k, 2.0) == pytest.approx(2.0 * np.exp(-1.0), abs=1e-12)

    def test_critical_limit_continuous(self):
        # approaching the critical point from both sides matches the limit formula
        t = 1.7
        target = decay.g_analytic(decay.ExponentialKernel(0.5, 1.0), t)
        below = decay.g_analytic(decay.ExponentialKernel(0.5 - 1e-7, 1.0), t)
        above = decay.g_analytic(decay.ExponentialKernel(0.5 + 1e-7, 1.0), t)
        assert abs(below - target) < 1e-6
        assert abs(above - target) < 1e-6

    def test_strong_coupling_has_zero(self):
        k = decay.ExponentialKernel(5.0, 1.0)
        times = np.linspace(0, 3, 3001)
        g = np.real(decay.g_analytic(k, times))
        assert (g[:-1] * g[1:] < 0).any()

    def test_rejects_negative_time(self):
        with pytest.raises(NegativeTime):
            decay.g_analytic(decay.ExponentialKernel(1.0, 1.0), -0.1)


class TestNumericAmplitude:
    def test_zero_kernel_is_constant(self):
        traj = decay.g_numeric(zero_kernel(5.0, 0.01), 5.0, 0.01)
        assert np.max(np.abs(traj.g - 1.0)) == 0.0

    @pytest.mark.parametrize("gamma0", [0.2, 0.5, 1.0, 5.0])
    def test_against_closed_form(self, gamma0):
        k = decay.ExponentialKernel(gamma0, 1.0)
        traj = decay.g_numeric(k, 10.0, 1e-3)
        exact = decay.g_analytic(k, traj.times)
        assert np.max(np.abs(traj.g - exact)) < 1e-5

    def test_second_order_convergence(self):
        k = decay.ExponentialKernel(5.0, 1.0)
        errors = []
        for dt in (2e-3, 1e-3):
            traj = decay.g_numeric(k, 5.0, dt)
            errors.append(np.max(np.abs(traj.g - decay.g_analytic(k, traj.times))))
        assert 3.0 <= errors[0] / errors[1] <= 5.0

    def test_grid_guard(self):
        with pytest.raises(GridTooCoarse):
            decay.g_numeric(decay.ExponentialKernel(1.0, 1.0), 10.0, 0.2)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValidationError):
            decay.g_numeric(decay.ExponentialKernel(1.0, 1.0), 10.0, -0.1)


class TestMarkovLimit:
    def test_initial_value(self):
        assert decay.markov_g(1.0, 0.0) == 1.0

    def test_exponential_value(self):
        assert decay.markov_g(1.0, 2.0) == pytest.approx(np.exp(-1.0), abs=1e-15)

    def test_gap_shrinks_with_alpha(self):
        gaps = []
        for alpha in (0.1, 0.01, 0.001):
            k = decay.ExponentialKernel(gamma0=alpha, lam=1.0)
            t = np.linspace(0, 5 / alpha, 2000)
            gap = np.max(np.abs(decay.g_analytic(k, t) - decay.markov_g(alpha, t)))
            gaps.append(gap)
        assert gaps[0] > gaps[1] > gaps[2]


class TestDecayMap:
    def test_identity_at_unit_amplitude(self):
        assert np.max(np.abs(decay.map_at(1.0) - np.eye(4))) == 0.0

    def test_total_decay_reaches_ground(self, rng):
        from conftest import random_density

        s = decay.map_at(0.0)
        rho = random_density(rng, 2)
        out = channels.apply_super(s, rho)
        assert np.max(np.abs(out - np.diag([1.0, 0.0]))) <= 1e-12

    def test_half_amplitude_is_cp(self):
        ok, wmin = channels.is_completely_positive(decay.map_at(0.5), 1e-9)
        assert ok and wmin >= -1e-12

    def test_trace_preserving(self):
        for g in (1.0, 0.5, 0.3 + 0.4j, 0.0):
            assert channels.is_trace_preserving(decay.map_at(g), 1e-10)

    def test_rejects_unphysical(self):
        with pytest.raises(UnphysicalG):
            decay.map_at(1.1)

    def test_populations_and_coherences(self):
        g = 0.6 + 0.2j
        rho = np.array([[0.3, 0.1 - 0.2j], [0.1 + 0.2j, 0.7]], dtype=complex)
        out = channels.apply_super(decay.map_at(g), rho)
        p = abs(g) ** 2
        assert out[1, 1] == pytest.approx(p * 0.7, abs=1e-12)
        assert out[0, 0] == pytest.approx(0.3 + (1 - p) * 0.7, abs=1e-12)
        assert out[1, 0] == pytest.approx(g * (0.1 + 0.2j), abs=1e-12)
        assert out[0, 1] == pytest.approx(np.conj(g * (0.1 + 0.2j)), abs=1e-12)


class TestRates:
    def test_markov_rates_are_constant(self):
        times = 1e-3 * np.arange(5001)
        traj = decay.GTrajectory(times=times, g=decay.markov_g(1.0, times))
        gamma, shift = decay.rates(traj)
        assert np.max(np.abs(gamma - 1.0)) < 1e-6
        assert np.max(np.abs(shift)) < 1e-6

    def test_zero_kernel_rates_vanish(self):
        traj = decay.g_numeric(zero_kernel(2.0, 0.01), 2.0, 0.01)
        gamma, shift = decay.rates(traj)
        assert np.max(np.abs(gamma)) == 0.0
        assert np.max(np.abs(shift)) == 0.0

    def test_negative_rate_where_amplitude_grows(self):
        # rate is positive while |G| shrinks toward its first zero, and
        # turns negative on the growth stretch that follows it
        traj = decay.g_numeric(decay.ExponentialKernel(5.0, 1.0), 2.0, 1e-3)
        gamma, _ = decay.rates(traj)
        g_abs = np.abs(traj.g)
        first_zero = int(np.argmin(g_abs[:1500]))
        before = gamma[: first_zero - 5]
        after = gamma[first_zero + 5 : first_zero + 100]
        assert np.nanmin(before) > 0
        assert np.nanmin(after) < 0

    def test_gap_markers_at_zeros(self):
        traj = decay.g_numeric(decay.ExponentialKernel(5.0, 1.0), 10.0, 1e-3)
        g_floor = np.abs(traj.g).min()
        assert g_floor <= decay.G_ZERO_TOL or not np.isnan(decay.rates(traj)[0]).any()

    def test_rate_identity(self):
        # gamma = -(2/|G|) d|G|/dt away from zeros of G
        traj = decay.g_numeric(decay.ExponentialKernel(5.0, 1.0), 10.0, 1e-3)
        gamma, _ = decay.rates(traj)
        g_abs = np.abs(traj.g)
        alt = -2.0 * np.gradient(g_abs, traj.dt, edge_order=2) / np.where(g_abs == 0, 1.0, g_abs)
        mask = g_abs > 0.05
        rel = np.abs(gamma[mask] - alt[mask]) / np.maximum(np.abs(alt[mask]), 1e-2)
        assert np.max(rel) < 1e-4


class TestIntermediateClosedForm:
    def test_equal_amplitudes_identity(self):
        mid = decay.intermediate_map_closed_form(0.7 + 0.1j, 0.7 + 0.1j)
        assert np.max(np.abs(mid - np.eye(4))) <= 1e-12

    def test_cp_iff_amplitude_shrinks(self):
        ok, _ = channels.is_completely_positive(
            decay.intermediate_map_closed_form(0.8, 0.5), 1e-9
        )
        assert ok
        ok, wmin = channels.is_completely_positive(
            decay.intermediate_map_closed_form(0.5, 0.8), 1e-9
        )
        assert not ok
        # Choi spectrum of the ratio map contains 1 - |g2/g1|^2
        assert wmin == pytest.approx(1.0 - (0.8 / 0.5) ** 2, abs=1e-12)

    def test_singular_at_zero(self):
        with pytest.raises(Singular):
            decay.intermediate_map_closed_form(0.0, 0.5)

    def test_composition_consistency(self):
        g1, g2 = 0.8 * np.exp(0.3j), 0.5 * np.exp(-0.2j)
        lhs = decay.intermediate_map_closed_form(g1, g2) @ decay.map_at(g1)
        assert np.max(np.abs(lhs - decay.map_at(g2))) <= 1e-9


class TestFamily:
    def test_zero_kernel_family_is_identity(self):
        fam = decay.family(zero_kernel(1.0, 0.01), 1.0, 0.01)
        assert np.max(np.abs(fam.maps - np.eye(4))) == 0.0

    def test_maps_are_tp_and_cp(self):
        fam = decay.family(decay.ExponentialKernel(5.0, 1.0), 5.0, 0.01)
        for k in range(0, len(fam), 50):
            assert channels.is_trace_preserving(fam.maps[k], 1e-10)
            assert channels.is_completely_positive(fam.maps[k], 1e-9)[0]


class TestThresholdBehavior:
    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.49])
    def test_weak_coupling_monotone(self, alpha):
        k = decay.ExponentialKernel(alpha, 1.0)
        g = np.abs(decay.g_analytic(k, np.linspace(0, 50, 50001)))
        assert (np.diff(g) <= 0).all()

    @pytest.mark.parametrize("alpha", [0.51, 1.0, 5.0])
    def test_strong_coupling_has_growth(self, alpha):
        k = decay.ExponentialKernel(alpha, 1.0)
        g = np.abs(decay.g_analytic(k, np.linspace(0, 50, 50001)))
        assert (np.diff(g) > 0).any()


class TestKernelSpecs:
    def test_exponential_round_trip(self):
        k = decay.ExponentialKernel(gamma0=2.5, lam=0.7)
        back = decay.kernel_from_obj(decay.kernel_to_obj(k))
        assert back == k

    def test_tabulated_round_trip(self):
        k = decay.TabulatedKernel(
            times=0.1 * np.arange(4), values=np.array([1, 0.5j, 0.25, 0.1 + 0j])
        )
        back = decay.kernel_from_obj(decay.kernel_to_obj(k))
        assert np.array_equal(back.times, k.times)
        assert np.array_equal(back.values, k.values)

    def test_alpha_ratio(self):
        k = decay.ExponentialKernel(gamma0=0.2, lam=2.0)
        assert k.alpha == pytest.approx(k.correlation_time / k.relaxation_time)
        assert k.alpha == pytest.approx(0.1)

    def test_rejects_nonpositive_parameters(self):
        with pytest.raises(ValidationError):
            decay.ExponentialKernel(gamma0=0.0, lam=1.0)

    def test_rejects_unknown_type(self):
        with pytest.raises(ValidationError):
            decay.kernel_from_obj({"type": "lorentzian"})

    def test_tabulated_requires_uniform_grid(self):
        with pytest.raises(ValidationError):
            decay.TabulatedKernel(times=np.array([0.0, 0.1, 0.3]),
                                  values=np.zeros(3, dtype=complex))

    def test_trajectory_rejects_unphysical(self):
        with pytest.raises(UnphysicalG):
            decay.GTrajectory(times=np.array([0.0, 0.1]), g=np.array([1.0, 1.5]))
