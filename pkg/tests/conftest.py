"""Shared randomized-state helpers and analytic oracles for the test suite."""

import numpy as np
import pytest
from scipy.optimize import brentq


def random_density(rng, dim):
    """Full-rank random density matrix from a Ginibre factor."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_pure(rng, dim):
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    return psi


def random_unitary(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(rng, dim, n_ops):
    """Kraus operators of a random CPT channel from a Haar isometry."""
    a = rng.standard_normal((dim * n_ops, dim)) + 1j * rng.standard_normal((dim * n_ops, dim))
    q, r = np.linalg.qr(a)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return [q[k * dim : (k + 1) * dim, :] for k in range(n_ops)]


def analytic_lobe_gains(gamma0, lam, t_max):
    """Backflow gains of the equator pair from the closed-form amplitude.

    Independent oracle for the measure in the oscillatory regime: zeros of
    G are bracketed between consecutive extrema of |G| (which sit at
    integer multiples of 2 pi / nu), and each lobe contributes |G| at the
    extremum following the zero, clipped to the simulation window.
    """
    from nmkit import decay

    kernel = decay.ExponentialKernel(gamma0, lam)
    nu = np.sqrt(2 * gamma0 * lam - lam * lam)

    def g_real(t):
        return float(np.real(decay.g_analytic(kernel, t)))

    gains = []
    j = 1
    while True:
        lo, hi = 2 * np.pi * (j - 1) / nu + 1e-13, 2 * np.pi * j / nu
        if g_real(lo) * g_real(hi) > 0:
            break
        zero = brentq(g_real, lo, hi, xtol=1e-14)
        if zero >= t_max:
            break
        gains.append(abs(g_real(min(2 * np.pi * j / nu, t_max))))
        j += 1
    return gains


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
