"""Dense complex linear algebra for quantum states.

Hermitian eigendecomposition, trace norm and trace distance, Kronecker
products, partial traces and Helstrom state discrimination.  All operators
are plain complex numpy arrays; density matrices are validated explicitly
rather than wrapped in a class.

Vectorization convention used throughout the package: column stacking,
``vec(A B C) = (C^T (x) A) vec(B)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimMismatch,
    InvalidState,
    NonSquare,
    NotHermitian,
)

HERMITICITY_TOL = 1e-8
STATE_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)   # |1><0|
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|


@dataclass
class EigenDecomposition:
    """Spectral data of a Hermitian matrix: A = V diag(w) V^dagger.

    ``eigenvalues`` are real and sorted ascending; the columns of
    ``eigenvectors`` are the matching orthonormal eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise NonSquare(f"expected a matrix, got array of shape {a.shape}")
    return a


def hermiticity_defect(a) -> float:
    """Largest entrywise deviation of ``a`` from its conjugate transpose."""
    a = np.asarray(a, dtype=complex)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def herm_eig(a) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrized as (A + A^dagger)/2 before decomposition;
    inputs whose Hermiticity defect exceeds ``HERMITICITY_TOL`` are
    rejected rather than silently fixed.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"matrix is {a.shape[0]}x{a.shape[1]}")
    if hermiticity_defect(a) > HERMITICITY_TOL:
        raise NotHermitian(
            f"Hermiticity defect {hermiticity_defect(a):.3e} exceeds {HERMITICITY_TOL:.0e}"
        )
    h = 0.5 * (a + a.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise ConvergenceFailure(str(exc)) from exc
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def trace_norm(a) -> float:
    """Trace norm of a Hermitian operator: the sum of |eigenvalue|."""
    dec = herm_eig(a)
    return float(np.sum(np.abs(dec.eigenvalues)))


def trace_distance(r1, r2) -> float:
    """Trace distance D = (1/2) ||r1 - r2||_1 between two states."""
    r1 = _as_matrix(r1)
    r2 = _as_matrix(r2)
    if r1.shape != r2.shape:
        raise DimMismatch(f"state shapes differ: {r1.shape} vs {r2.shape}")
    return 0.5 * trace_norm(r1 - r2)


def qubit_trace_distance(a: float, b: complex) -> float:
    """Closed-form qubit trace distance from the population difference ``a``
    and coherence difference ``b``: sqrt(a^2 + |b|^2)."""
    return float(np.sqrt(a * a + abs(b) ** 2))


def kron(a, b) -> np.ndarray:
    """Kronecker (tensor) product of two operators."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(rho, dim_s: int, dim_e: int, keep: str = "system") -> np.ndarray:
    """Partial trace of a bipartite operator on H_S (x) H_E.

    ``keep`` selects the retained factor: "system" traces out the
    environment, "environment" traces out the system.
    """
    rho = _as_matrix(rho)
    if rho.shape != (dim_s * dim_e, dim_s * dim_e):
        raise DimMismatch(
            f"operator of shape {rho.shape} does not factor as {dim_s}x{dim_e}"
        )
    t = rho.reshape(dim_s, dim_e, dim_s, dim_e)
    if keep == "system":
        return np.einsum("iaja->ij", t)
    if keep == "environment":
        return np.einsum("aiaj->ij", t)
    raise DimMismatch(f"keep must be 'system' or 'environment', got {keep!r}")


def helstrom(r1, r2):
    """Optimal single-shot discrimination of two equiprobable states.

    Returns ``(projector, p_max)``: the orthogonal projector onto the
    nonnegative eigenspace of r1 - r2, and the maximal success probability
    p_max = (1 + D(r1, r2)) / 2.  The projector attains
    tr{P (r1 - r2)} = D(r1, r2).
    """
    r1 = _as_matrix(r1)
    r2 = _as_matrix(r2)
    if r1.shape != r2.shape:
        raise DimMismatch(f"state shapes differ: {r1.shape} vs {r2.shape}")
    dec = herm_eig(r1 - r2)
    pos = dec.eigenvectors[:, dec.eigenvalues >= 0.0]
    projector = pos @ pos.conj().T
    distance = 0.5 * float(np.sum(np.abs(dec.eigenvalues)))
    return projector, 0.5 * (1.0 + distance)


def validate_density_matrix(rho, tol: float = STATE_TOL) -> np.ndarray:
    """Check the density-matrix invariants and return the input unchanged.

    Raises ``InvalidState`` if ``rho`` is not Hermitian within ``tol``, not
    unit trace within ``tol``, or has an eigenvalue below ``-tol``.
    """
    rho = _as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise InvalidState(f"state must be square, got {rho.shape}")
    defect = hermiticity_defect(rho)
    if defect > tol:
        raise InvalidState(f"Hermiticity defect {defect:.3e} exceeds {tol:.0e}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > tol:
        raise InvalidState(f"trace {tr} deviates from 1 beyond {tol:.0e}")
    wmin = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if wmin < -tol:
        raise InvalidState(f"smallest eigenvalue {wmin:.3e} below -{tol:.0e}")
    return rho


def pure_state(amplitudes) -> np.ndarray:
    """Density matrix |psi><psi| of the (normalized) amplitude vector."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def bloch_state(r) -> np.ndarray:
    """Qubit state (I + r . sigma)/2 for a Bloch vector with |r| <= 1."""
    x, y, z = (float(c) for c in r)
    norm = np.sqrt(x * x + y * y + z * z)
    if norm > 1.0 + 1e-9:
        raise InvalidState(f"Bloch vector has norm {norm:.6f} > 1")
    return 0.5 * (I2 + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


def bloch_vector(rho) -> np.ndarray:
    """Bloch vector (x, y, z) of a qubit state."""
    rho = _as_matrix(rho)
    if rho.shape != (2, 2):
        raise DimMismatch(f"Bloch vector requires a qubit state, got {rho.shape}")
    return np.real(
        np.array(
            [
                np.trace(rho @ SIGMA_X),
                np.trace(rho @ SIGMA_Y),
                np.trace(rho @ SIGMA_Z),
            ]
        )
    )
