"""Time-local master equations and their propagators.

Generators in Lindblad form, the canonical (diagonal) form of a generator
given in a traceless operator basis, semigroup propagators by matrix
exponential, time-ordered propagators for time-dependent generators, and
direct state integration.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .channels import super_dim, unvec, vec
from .errors import DimMismatch, NegativeTime, ValidationError
from .qmat import SIGMA_MINUS, hermiticity_defect, herm_eig, kron
from .serialize import cmatrix_from_pairs, cmatrix_to_pairs


@dataclass
class LindbladGenerator:
    """Generator rho -> -i[H, rho] + sum_i g_i (A_i rho A_i^+ - {A_i^+ A_i, rho}/2).

    ``channels`` is a list of (rate, operator) pairs; rates may be negative
    for time-local generators of non-divisible dynamics.
    """

    hamiltonian: np.ndarray
    channels: list

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=complex)
        if hermiticity_defect(self.hamiltonian) > 1e-10:
            raise ValidationError("generator Hamiltonian must be Hermitian within 1e-10")
        self.channels = [(float(g), np.asarray(a, dtype=complex)) for g, a in self.channels]
        n = self.hamiltonian.shape[0]
        for _, a in self.channels:
            if a.shape != (n, n):
                raise DimMismatch(f"channel operator shape {a.shape} does not match {n}")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass
class GeneratorTrajectory:
    """A time-dependent generator sampled on a uniform grid."""

    times: np.ndarray
    generators: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.generators):
            raise ValidationError("times and generators must have equal length")
        if len(self.times) < 2:
            raise ValidationError("trajectory needs at least two grid points")
        steps = np.diff(self.times)
        if steps.min() <= 0 or np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
            raise ValidationError("time grid must be uniform and increasing")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def dim(self) -> int:
        return self.generators[0].dim


@dataclass
class KossakowskiForm:
    """Generator data (H, F_i, c_ij) in a traceless orthonormal operator basis."""

    hamiltonian: np.ndarray
    basis: list
    coefficients: np.ndarray

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=complex)
        self.basis = [np.asarray(f, dtype=complex) for f in self.basis]
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if hermiticity_defect(self.hamiltonian) > 1e-10:
            raise ValidationError("Hamiltonian must be Hermitian within 1e-10")
        m = len(self.basis)
        if self.coefficients.shape != (m, m):
            raise ValidationError("coefficient matrix must be square over the basis")
        if hermiticity_defect(self.coefficients) > 1e-10:
            raise ValidationError("coefficient matrix must be Hermitian within 1e-10")
        for i, fi in enumerate(self.basis):
            if abs(np.trace(fi)) > 1e-10:
                raise ValidationError(f"basis operator {i} is not traceless")
            for j, fj in enumerate(self.basis):
                want = 1.0 if i == j else 0.0
                if abs(np.trace(fi.conj().T @ fj) - want) > 1e-10:
                    raise ValidationError(f"basis operators {i},{j} are not orthonormal")


def generator_to_super(gen: LindbladGenerator) -> np.ndarray:
    """Superoperator matrix of a Lindblad-form generator (column stacking)."""
    n = gen.dim
    eye = np.eye(n, dtype=complex)
    h = gen.hamiltonian
    s = -1j * (kron(eye, h) - kron(h.T, eye))
    for g, a in gen.channels:
        aa = a.conj().T @ a
        s += g * (kron(a.conj(), a) - 0.5 * (kron(eye, aa) + kron(aa.T, eye)))
    return s


def canonical_form(form: KossakowskiForm) -> LindbladGenerator:
    """Diagonalize the coefficient matrix into canonical rates and operators.

    The rates are the (possibly negative) eigenvalues of the coefficient
    matrix; the canonical operators are the matching unitary combinations
    of the basis.  The action of the generator is unchanged.
    """
    dec = herm_eig(form.coefficients)
    channels = []
    basis = np.stack(form.basis)
    for k, rate in enumerate(dec.eigenvalues):
        a_k = np.tensordot(dec.eigenvectors[:, k], basis, axes=(0, 0))
        channels.append((float(rate), a_k))
    return LindbladGenerator(hamiltonian=form.hamiltonian, channels=channels)


def expm_propagator(gen: LindbladGenerator, t: float) -> np.ndarray:
    """Semigroup propagator exp(L t) by scaling-and-squaring."""
    if t < 0:
        raise NegativeTime("propagator requires t >= 0")
    return expm(generator_to_super(gen) * t)


def _step_propagators(traj: GeneratorTrajectory, i1: int, i2: int):
    """Per-step propagators with the generator evaluated at interval midpoints."""
    dt = traj.dt
    supers = [generator_to_super(g) for g in traj.generators[i1 : i2 + 1]]
    for k in range(i2 - i1):
        yield expm(0.5 * (supers[k] + supers[k + 1]) * dt)


def ordered_propagator(traj: GeneratorTrajectory, i1: int, i2: int) -> np.ndarray:
    """Time-ordered propagator from grid index i1 to i2.

    Composes per-step exponentials of midpoint-evaluated generators
    (second-order accurate); the composition law over subintervals holds
    by construction.
    """
    if i2 < i1:
        raise ValidationError(f"need i2 >= i1, got {i1} > {i2}")
    n = traj.dim
    prop = np.eye(n * n, dtype=complex)
    for step in _step_propagators(traj, i1, i2):
        prop = step @ prop
    return prop


def propagator_series(traj: GeneratorTrajectory) -> np.ndarray:
    """Cumulative propagators from time 0 to every grid point."""
    n = traj.dim
    out = np.empty((len(traj.times), n * n, n * n), dtype=complex)
    out[0] = np.eye(n * n, dtype=complex)
    for k, step in enumerate(_step_propagators(traj, 0, len(traj.times) - 1)):
        out[k + 1] = step @ out[k]
    return out


def evolve_state(traj: GeneratorTrajectory, rho0) -> np.ndarray:
    """Integrate the master equation d rho/dt = K(t) rho with RK4.

    The generator is interpolated linearly for the internal stages.  After
    each step the state is re-Hermitized and trace-renormalized, which
    perturbs it only at roundoff level but keeps the density-matrix
    invariants valid over long runs.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n = traj.dim
    if rho0.shape != (n, n):
        raise DimMismatch(f"state shape {rho0.shape} does not match dimension {n}")
    dt = traj.dt
    supers = [generator_to_super(g) for g in traj.generators]
    out = np.empty((len(traj.times), n, n), dtype=complex)
    out[0] = rho0
    v = vec(rho0)
    for k in range(len(traj.times) - 1):
        s0 = supers[k]
        s1 = supers[k + 1]
        smid = 0.5 * (s0 + s1)
        k1 = s0 @ v
        k2 = smid @ (v + 0.5 * dt * k1)
        k3 = smid @ (v + 0.5 * dt * k2)
        k4 = s1 @ (v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = unvec(v)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.real(np.trace(rho))
        v = vec(rho)
        out[k + 1] = rho
    return out


def amplitude_damping_generator(gamma: float, shift: float = 0.0) -> LindbladGenerator:
    """Time-local generator of the two-level decay model at fixed (gamma, shift)."""
    if np.isnan(gamma) or np.isnan(shift):
        raise ValidationError("rate gap markers (NaN) cannot enter a generator")
    number_op = np.array([[0, 0], [0, 1]], dtype=complex)  # sigma_+ sigma_-
    return LindbladGenerator(
        hamiltonian=0.5 * shift * number_op,
        channels=[(gamma, SIGMA_MINUS)],
    )


def amplitude_damping_trajectory(times, gamma, shift=None) -> GeneratorTrajectory:
    """Generator trajectory from decay-rate and shift series."""
    gamma = np.asarray(gamma, dtype=float)
    shift = np.zeros_like(gamma) if shift is None else np.asarray(shift, dtype=float)
    gens = [amplitude_damping_generator(g, s) for g, s in zip(gamma, shift)]
    return GeneratorTrajectory(times=np.asarray(times, dtype=float), generators=gens)


def generator_trajectory_to_obj(traj: GeneratorTrajectory) -> dict:
    """JSON-ready document with per-step Hamiltonians and channels."""
    return {
        "dim": traj.dim,
        "dt": traj.dt,
        "steps": [
            {
                "H": cmatrix_to_pairs(g.hamiltonian),
                "channels": [
                    {"rate": rate, "op": cmatrix_to_pairs(a)} for rate, a in g.channels
                ],
            }
            for g in traj.generators
        ],
    }


def generator_trajectory_from_obj(obj) -> GeneratorTrajectory:
    try:
        n = int(obj["dim"])
        dt = float(obj["dt"])
        gens = []
        for step in obj["steps"]:
            ham = cmatrix_from_pairs(step["H"], n, n)
            channels = [
                (float(ch["rate"]), cmatrix_from_pairs(ch["op"], n, n))
                for ch in step.get("channels", [])
            ]
            gens.append(LindbladGenerator(hamiltonian=ham, channels=channels))
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed generator-trajectory document: {exc}") from exc
    times = dt * np.arange(len(gens))
    return GeneratorTrajectory(times=times, generators=gens)
