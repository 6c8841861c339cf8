"""Superoperator, Choi and divisibility machinery."""

import numpy as np
import pytest
from scipy.linalg import expm

from nmkit import channels, decay, qmat
from nmkit.errors import Singular, ValidationError

from conftest import random_density, random_kraus, random_unitary


def transpose_super(n):
    """Superoperator of the transpose map (positive but not CP)."""
    s = np.zeros((n * n, n * n), dtype=complex)
    for k in range(n):
        for l in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[k, l] = 1.0
            s[:, k + n * l] = channels.vec(e.T)
    return s


class TestVectorization:
    def test_round_trip(self, rng):
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert np.array_equal(channels.unvec(channels.vec(m)), m)

    def test_column_stacking_identity(self, rng):
        # vec(A B C) = (C^T kron A) vec(B)
        a, b, c = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
                   for _ in range(3))
        lhs = channels.vec(a @ b @ c)
        rhs = qmat.kron(c.T, a) @ channels.vec(b)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


class TestKrausToSuper:
    def test_identity(self):
        s = channels.kraus_to_super([np.eye(2)])
        assert np.array_equal(s, np.eye(4))

    def test_bit_flip(self):
        p = 0.3
        s = channels.kraus_to_super(
            [np.sqrt(p) * qmat.SIGMA_X, np.sqrt(1 - p) * np.eye(2)]
        )
        out = channels.apply_super(s, np.diag([1.0, 0.0]))
        assert np.max(np.abs(out - np.diag([0.7, 0.3]))) <= 1e-12

    def test_matches_direct_application(self, rng):
        ops = random_kraus(rng, 3, 2)
        s = channels.kraus_to_super(ops)
        rho = random_density(rng, 3)
        direct = sum(k @ rho @ k.conj().T for k in ops)
        assert np.max(np.abs(channels.apply_super(s, rho) - direct)) <= 1e-10

    def test_amplitude_damping_matches_decay_map(self):
        g = 0.6 + 0.3j
        ops = [
            np.array([[1, 0], [0, g]], dtype=complex),
            np.array([[0, np.sqrt(1 - abs(g) ** 2)], [0, 0]], dtype=complex),
        ]
        assert np.max(np.abs(channels.kraus_to_super(ops) - decay.map_at(g))) <= 1e-12

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            channels.kraus_to_super([])


class TestChoi:
    def test_identity_channel(self):
        choi = channels.super_to_choi(np.eye(4, dtype=complex))
        bell = qmat.pure_state([1, 0, 0, 1])
        assert np.max(np.abs(choi - 2.0 * bell)) <= 1e-12
        w = np.linalg.eigvalsh(choi)
        assert np.allclose(w, [0, 0, 0, 2], atol=1e-12)

    def test_depolarizing_channel(self):
        n = 2
        s = np.zeros((4, 4), dtype=complex)
        for k in range(n):
            s[:, k + n * k] = channels.vec(np.eye(n) / n)
        choi = channels.super_to_choi(s)
        assert np.max(np.abs(choi - np.eye(4) / 2)) <= 1e-12

    def test_random_channel_choi_psd(self, rng):
        for _ in range(20):
            s = channels.kraus_to_super(random_kraus(rng, 2, 3))
            wmin = channels.choi_min_eigenvalue(s)
            assert wmin >= -1e-10

    def test_choi_trace_equals_dim(self, rng):
        s = channels.kraus_to_super(random_kraus(rng, 3, 2))
        assert np.trace(channels.super_to_choi(s)).real == pytest.approx(3.0, abs=1e-10)

    def test_kraus_round_trip(self, rng):
        s = channels.kraus_to_super(random_kraus(rng, 2, 3))
        ops = channels.choi_to_kraus(channels.super_to_choi(s))
        rebuilt = channels.kraus_to_super(ops)
        rho = random_density(rng, 2)
        assert np.max(np.abs(
            channels.apply_super(rebuilt, rho) - channels.apply_super(s, rho)
        )) <= 1e-8


class TestCompletePositivity:
    def test_identity(self):
        ok, wmin = channels.is_completely_positive(np.eye(4, dtype=complex), 1e-12)
        assert ok
        assert abs(wmin) <= 1e-12

    def test_transpose_map(self):
        ok, wmin = channels.is_completely_positive(transpose_super(2), 1e-7)
        assert not ok
        assert wmin == pytest.approx(-1.0, abs=1e-12)

    def test_decay_growth_interval_not_cp(self):
        # |G| growing between two times makes the intermediate map non-CP
        step = decay.intermediate_map_closed_form(0.5, 0.6)
        ok, wmin = channels.is_completely_positive(step, 1e-7)
        assert not ok
        assert wmin < 0

    def test_rejects_negative_tol(self):
        with pytest.raises(ValidationError):
            channels.is_completely_positive(np.eye(4), -1.0)


class TestInvert:
    def test_identity(self):
        assert np.max(np.abs(channels.invert(np.eye(9)) - np.eye(9))) <= 1e-12

    def test_unitary_conjugation(self, rng):
        u = random_unitary(rng, 2)
        s = channels.kraus_to_super([u])
        s_inv = channels.invert(s)
        expected = channels.kraus_to_super([u.conj().T])
        assert np.max(np.abs(s_inv - expected)) <= 1e-10

    def test_decay_map_singular_at_zero(self):
        with pytest.raises(Singular):
            channels.invert(decay.map_at(0.0))

    def test_inverse_quality(self, rng):
        s = channels.kraus_to_super(random_kraus(rng, 2, 2))
        assert np.max(np.abs(s @ channels.invert(s) - np.eye(4))) <= 1e-8


class TestSuperoperatorContracts:
    def test_trace_preservation_flag(self, rng):
        s = channels.kraus_to_super(random_kraus(rng, 2, 3))
        assert channels.is_trace_preserving(s)
        assert not channels.is_trace_preserving(0.5 * s)

    def test_hermiticity_preservation(self, rng):
        s = channels.kraus_to_super(random_kraus(rng, 2, 3))
        assert channels.is_hermiticity_preserving(s)

    def test_kraus_normalization_defect(self, rng):
        assert channels.kraus_defect(random_kraus(rng, 3, 2)) <= 1e-9

    def test_composition_associativity(self, rng):
        s1, s2, s3 = (channels.kraus_to_super(random_kraus(rng, 2, 2)) for _ in range(3))
        assert np.max(np.abs((s1 @ s2) @ s3 - s1 @ (s2 @ s3))) <= 1e-10


def lindblad_decay_super(gamma):
    """Generator superoperator of plain amplitude damping at constant rate."""
    sm = qmat.SIGMA_MINUS
    num = sm.conj().T @ sm
    eye = np.eye(2)
    return gamma * (
        qmat.kron(sm.conj(), sm)
        - 0.5 * (qmat.kron(eye, num) + qmat.kron(num.T, eye))
    )


class TestIntermediateMap:
    def test_same_index_is_identity(self):
        fam = decay.family(decay.ExponentialKernel(0.2, 1.0), 1.0, 0.01)
        mid = channels.intermediate_map(fam, 5, 5)
        assert np.max(np.abs(mid - np.eye(4))) <= 1e-10

    def test_semigroup_family(self):
        gen = lindblad_decay_super(0.7)
        dt = 0.05
        times = dt * np.arange(21)
        maps = np.stack([expm(gen * t) for t in times])
        fam = channels.MapFamily(times=times, maps=maps)
        mid = channels.intermediate_map(fam, 4, 9)
        assert np.max(np.abs(mid - expm(gen * (5 * dt)))) <= 1e-9

    def test_composition_reproduces_endpoint(self):
        fam = decay.family(decay.ExponentialKernel(5.0, 1.0), 2.0, 0.01)
        mid = channels.intermediate_map(fam, 30, 120)
        assert np.max(np.abs(mid @ fam.maps[30] - fam.maps[120])) <= 1e-8

    def test_matches_closed_form(self):
        traj = decay.g_numeric(decay.ExponentialKernel(5.0, 1.0), 2.0, 0.01)
        fam = decay.family_from_trajectory(traj)
        mid = channels.intermediate_map(fam, 10, 50)
        closed = decay.intermediate_map_closed_form(traj.g[10], traj.g[50])
        assert np.max(np.abs(mid - closed)) <= 1e-8


class TestAuditDivisibility:
    def test_semigroup_is_divisible(self):
        gen = lindblad_decay_super(1.0)
        times = 0.05 * np.arange(40)
        maps = np.stack([expm(gen * t) for t in times])
        fam = channels.MapFamily(times=times, maps=maps)
        assert channels.audit_divisibility(fam) == []

    def test_weak_coupling_divisible(self):
        fam = decay.family(decay.ExponentialKernel(0.2, 1.0), 10.0, 0.01)
        assert channels.audit_divisibility(fam) == []

    def test_strong_coupling_intervals_match_growth(self):
        traj = decay.g_numeric(decay.ExponentialKernel(5.0, 1.0), 10.0, 0.01)
        fam = decay.family_from_trajectory(traj)
        intervals = channels.audit_divisibility(fam)
        assert intervals

        g_abs = np.abs(traj.g)
        growing = np.flatnonzero(np.diff(g_abs) > 0)
        flagged = np.zeros(len(traj.times) - 1, dtype=bool)
        for iv in intervals:
            if iv.kind == "cp_violation":
                lo = int(round(iv.t_start / 0.01))
                hi = int(round(iv.t_end / 0.01))
                flagged[lo:hi] = True
        # agreement up to one grid step at the boundaries
        flagged_steps = np.flatnonzero(flagged)
        assert set(growing).symmetric_difference(flagged_steps) <= set(
            np.concatenate([growing - 1, growing + 1, flagged_steps - 1, flagged_steps + 1])
        )

    def test_singular_steps_reported_in_band(self):
        # family that collapses to the ground state: G hits exactly zero
        times = np.array([0.0, 1.0, 2.0])
        maps = np.stack([decay.map_at(1.0), decay.map_at(0.0), decay.map_at(0.0)])
        fam = channels.MapFamily(times=times, maps=maps)
        intervals = channels.audit_divisibility(fam)
        kinds = [iv.kind for iv in intervals]
        assert "singular" in kinds


class TestMapFamily:
    def test_requires_identity_start(self):
        times = np.array([0.0, 1.0])
        maps = np.stack([decay.map_at(0.9), decay.map_at(0.8)])
        with pytest.raises(ValidationError):
            channels.MapFamily(times=times, maps=maps)

    def test_requires_uniform_grid(self):
        times = np.array([0.0, 1.0, 3.0])
        maps = np.stack([np.eye(4)] * 3)
        with pytest.raises(ValidationError):
            channels.MapFamily(times=times, maps=maps)

    def test_json_round_trip(self):
        fam = decay.family(decay.ExponentialKernel(1.0, 1.0), 0.5, 0.05)
        doc = channels.map_family_to_obj(fam)
        back = channels.map_family_from_obj(doc)
        assert np.array_equal(back.times, fam.times)
        assert np.max(np.abs(back.maps - fam.maps)) == 0.0

    def test_malformed_document(self):
        with pytest.raises(ValidationError):
            channels.map_family_from_obj({"dim": 2, "times": [0.0]})
