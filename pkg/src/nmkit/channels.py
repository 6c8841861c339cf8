"""Quantum channels as superoperators, Kraus sets and Choi matrices.

A superoperator is an N^2 x N^2 complex matrix acting on column-stacked
operators, vec(A B C) = (C^T (x) A) vec(B).  The Choi matrix orders the
output factor first: C = sum_kl Phi(E_kl) (x) E_kl, so a trace-preserving
map has tr_out C = I.  Complete positivity is certified by the Choi
spectrum; divisibility of a map family is audited step by step through the
intermediate maps Phi(t_{k+1}) Phi(t_k)^{-1}.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import DimMismatch, Singular, ValidationError
from .qmat import herm_eig, kron
from .serialize import cmatrix_from_pairs, cmatrix_to_pairs

# Default tolerance on the minimum Choi eigenvalue for audit verdicts.
# Numerically propagated maps are noisier than analytic ones; the raw
# eigenvalue is always reported so callers can re-threshold.
CP_AUDIT_TOL = 1e-7

PIVOT_TOL = 1e-12


def vec(m) -> np.ndarray:
    """Column-stacking vectorization of a matrix."""
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v) -> np.ndarray:
    """Inverse of :func:`vec` for a square matrix."""
    v = np.asarray(v, dtype=complex).ravel()
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise DimMismatch(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(n, n, order="F")


def super_dim(s) -> int:
    """Hilbert-space dimension N of an N^2 x N^2 superoperator."""
    s = np.asarray(s)
    n = int(round(np.sqrt(s.shape[0])))
    if s.ndim != 2 or s.shape[0] != s.shape[1] or n * n != s.shape[0]:
        raise DimMismatch(f"superoperator shape {s.shape} is not N^2 x N^2")
    return n


def identity_super(n: int) -> np.ndarray:
    return np.eye(n * n, dtype=complex)


def apply_super(s, op) -> np.ndarray:
    """Apply a superoperator to an operator: unvec(S vec(op))."""
    n = super_dim(s)
    op = np.asarray(op, dtype=complex)
    if op.shape != (n, n):
        raise DimMismatch(f"operator shape {op.shape} does not match dimension {n}")
    return unvec(np.asarray(s, dtype=complex) @ vec(op))


def kraus_to_super(operators) -> np.ndarray:
    """Superoperator of the Kraus map A -> sum_i K_i A K_i^dagger."""
    ops = [np.asarray(k, dtype=complex) for k in operators]
    if not ops:
        raise ValidationError("Kraus set must be nonempty")
    n = ops[0].shape[0]
    for k in ops:
        if k.shape != (n, n):
            raise DimMismatch(f"Kraus operators must all be {n}x{n}, got {k.shape}")
    s = np.zeros((n * n, n * n), dtype=complex)
    for k in ops:
        s += kron(k.conj(), k)
    return s


def kraus_defect(operators) -> float:
    """Deviation of sum_i K_i^dagger K_i from the identity (max norm)."""
    ops = [np.asarray(k, dtype=complex) for k in operators]
    acc = sum(k.conj().T @ k for k in ops)
    return float(np.max(np.abs(acc - np.eye(ops[0].shape[0]))))


def super_to_choi(s) -> np.ndarray:
    """Choi matrix C = sum_kl Phi(E_kl) (x) E_kl via index reshuffle."""
    n = super_dim(s)
    st = np.asarray(s, dtype=complex).reshape(n, n, n, n)
    # S[i + n j, k + n l] = st[j, i, l, k]; C[i n + k, j n + l] = S[i + n j, k + n l]
    return st.transpose(1, 3, 0, 2).reshape(n * n, n * n)


def choi_to_kraus(choi, tol: float = 1e-10) -> list:
    """Kraus operators of a CP map from the spectral decomposition of its Choi."""
    n = super_dim(choi)
    dec = herm_eig(choi)
    ops = []
    for w, v in zip(dec.eigenvalues, dec.eigenvectors.T):
        if w > tol:
            ops.append(np.sqrt(w) * v.reshape(n, n, order="C"))
    return ops


def is_trace_preserving(s, tol: float = 1e-9) -> bool:
    """True when (vec I)^dagger S = (vec I)^dagger within ``tol``."""
    n = super_dim(s)
    vi = vec(np.eye(n, dtype=complex))
    return float(np.max(np.abs(vi.conj() @ np.asarray(s, dtype=complex) - vi.conj()))) <= tol


def is_hermiticity_preserving(s, tol: float = 1e-9) -> bool:
    """True when S maps Hermitian operators to Hermitian operators within ``tol``."""
    choi = super_to_choi(s)
    return float(np.max(np.abs(choi - choi.conj().T))) <= tol


def choi_min_eigenvalue(s) -> float:
    """Smallest eigenvalue of the (symmetrized) Choi matrix of ``s``."""
    choi = super_to_choi(s)
    return float(np.linalg.eigvalsh(0.5 * (choi + choi.conj().T)).min())


def is_completely_positive(s, tol: float = CP_AUDIT_TOL):
    """CP test via the Choi spectrum.

    Returns ``(verdict, min_choi_eigenvalue)``; the verdict is true when
    the smallest Choi eigenvalue is >= -tol.
    """
    if tol < 0:
        raise ValidationError(f"tolerance must be nonnegative, got {tol}")
    wmin = choi_min_eigenvalue(s)
    return wmin >= -tol, wmin


def invert(s) -> np.ndarray:
    """Inverse superoperator by partial-pivot LU elimination.

    Raises ``Singular`` when any pivot falls below ``PIVOT_TOL``, which for
    a dynamical map signals a point where the inverse does not exist.
    """
    s = np.asarray(s, dtype=complex)
    n2 = s.shape[0]
    try:
        with warnings.catch_warnings():
            # zero pivots are detected below and raised as Singular
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(s)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise Singular(str(exc)) from exc
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL:
        raise Singular(f"pivot magnitude {pivots.min():.3e} below {PIVOT_TOL:.0e}")
    return lu_solve((lu, piv), np.eye(n2, dtype=complex))


@dataclass
class MapFamily:
    """A one-parameter family of dynamical maps on a uniform time grid.

    ``maps[k]`` propagates initial states to time ``times[k]``; the first
    map is the identity.
    """

    times: np.ndarray
    maps: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.maps = np.asarray(self.maps, dtype=complex)
        if self.times.ndim != 1 or len(self.times) != len(self.maps):
            raise ValidationError("times and maps must have equal length")
        if len(self.times) < 1:
            raise ValidationError("family must contain at least one map")
        steps = np.diff(self.times)
        if len(steps) and steps.min() <= 0:
            raise ValidationError("times must be strictly increasing")
        if len(steps) and np.max(np.abs(steps - steps[0])) > 1e-9 * max(steps[0], 1e-300):
            raise ValidationError("time grid must be uniform")
        n2 = self.maps.shape[1]
        if self.maps.shape[1:] != (n2, n2):
            raise ValidationError(f"maps must be square, got shape {self.maps.shape}")
        if np.max(np.abs(self.maps[0] - np.eye(n2))) > 1e-12:
            raise ValidationError("first map of a family must be the identity")

    @property
    def dim(self) -> int:
        return super_dim(self.maps[0])

    def __len__(self) -> int:
        return len(self.times)


def intermediate_map(family: MapFamily, i1: int, i2: int) -> np.ndarray:
    """The map carrying states from grid time t_{i1} to t_{i2}.

    Computed as maps[i2] maps[i1]^{-1}; raises ``Singular`` where the
    earlier map is not invertible.
    """
    if i2 < i1:
        raise ValidationError(f"need i2 >= i1, got {i1} > {i2}")
    return family.maps[i2] @ invert(family.maps[i1])


@dataclass
class AuditInterval:
    """A maximal run of grid steps on which the divisibility test fails.

    ``kind`` is "cp_violation" when the one-step intermediate maps exist
    but are not completely positive, "singular" when the map could not be
    inverted on the run.  For CP violations ``min_choi_eigenvalue`` is the
    most negative Choi eigenvalue seen on the run; for singular runs it is
    NaN.
    """

    t_start: float
    t_end: float
    min_choi_eigenvalue: float
    kind: str


def audit_divisibility(family: MapFamily, tol: float = CP_AUDIT_TOL) -> list:
    """Audit a map family for divisibility step by step.

    Tests complete positivity of every adjacent-step intermediate map
    (one-step CP at every step implies CP of all compositions) and merges
    failing steps into maximal intervals.  An empty result means the
    family is divisible at grid resolution.
    """
    results = []
    for k in range(len(family) - 1):
        try:
            step = family.maps[k + 1] @ invert(family.maps[k])
        except Singular:
            results.append(("singular", np.nan))
            continue
        ok, wmin = is_completely_positive(step, tol)
        results.append((None, wmin) if ok else ("cp_violation", wmin))

    intervals = []
    run = None
    for k, (kind, wmin) in enumerate(results):
        if kind is None:
            run = None
            continue
        if run is not None and run.kind == kind and run.t_end == family.times[k]:
            run.t_end = float(family.times[k + 1])
            if kind == "cp_violation":
                run.min_choi_eigenvalue = min(run.min_choi_eigenvalue, wmin)
        else:
            run = AuditInterval(
                t_start=float(family.times[k]),
                t_end=float(family.times[k + 1]),
                min_choi_eigenvalue=wmin,
                kind=kind,
            )
            intervals.append(run)
    return intervals


def map_family_to_obj(family: MapFamily) -> dict:
    """JSON-ready document: {"dim": N, "times": [...], "maps": [[[re, im], ...], ...]}."""
    return {
        "dim": family.dim,
        "times": [float(t) for t in family.times],
        "maps": [cmatrix_to_pairs(m) for m in family.maps],
    }


def map_family_from_obj(obj) -> MapFamily:
    try:
        dim = int(obj["dim"])
        times = np.asarray(obj["times"], dtype=float)
        maps = np.stack(
            [cmatrix_from_pairs(entry, dim * dim, dim * dim) for entry in obj["maps"]]
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed map-family document: {exc}") from exc
    return MapFamily(times=times, maps=maps)
