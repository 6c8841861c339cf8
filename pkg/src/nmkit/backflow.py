"""Trace-distance information flow and the backflow measure of a map family.

The evolved trace distance of a state pair, its rate of change, the maximal
growth intervals, and the measure obtained by summing the total distance
gain over all growth intervals and maximizing over initial pairs.  The
maximization is a coarse Bloch-ball grid followed by coordinate-descent
refinement and therefore yields a lower bound on the true supremum.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .channels import MapFamily, vec
from .errors import DimMismatch, ValidationError
from .qmat import bloch_state, bloch_vector, validate_density_matrix
from .serialize import cmatrix_to_pairs

# Per-step growth below this is treated as integrator noise, not backflow.
GROWTH_THRESHOLD = 1e-12

NONMARKOVIAN_THRESHOLD = 1e-6


@dataclass
class DistanceTrajectory:
    """Trace distance between two evolved states on the family's time grid."""

    times: np.ndarray
    d: np.ndarray
    pair: tuple

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        if self.times.shape != self.d.shape:
            raise ValidationError("times and d must be equal-length vectors")
        if self.d.min() < -1e-10 or self.d.max() > 1 + 1e-10:
            raise ValidationError("trace distances must lie in [0, 1]")


@dataclass
class PairSearchConfig:
    """Settings for the initial-pair maximization.

    Phase 1 scans all pairs of Bloch vectors on a ball grid of
    ``n_radii`` radii times the 26 lattice directions, always including
    the antipodal surface pairs.  Phase 2 runs coordinate descent over the
    six Bloch coordinates from the best ``seeds`` grid pairs, halving the
    step after every sweep without improvement until it drops below
    ``min_step`` or ``max_sweeps`` sweeps have run.  For families of
    dimension other than 2, supply explicit candidate state pairs.
    """

    n_radii: int = 6
    seeds: int = 5
    initial_step: float = 0.25
    min_step: float = 1e-3
    max_sweeps: int = 200
    growth_threshold: float = GROWTH_THRESHOLD
    candidates: list = None
    threads: int = 1


@dataclass
class MeasureReport:
    """Result of the pair maximization.

    ``n_value`` is the summed trace-distance gain of the best pair found
    (a lower bound on the supremum over all pairs), ``intervals`` the
    growth intervals (start, end, gain) of that pair, and ``evaluations``
    the number of pairs scored during the search.
    """

    n_value: float
    optimal_pair: tuple
    intervals: list
    evaluations: int


def _difference_series(family: MapFamily, delta_vec: np.ndarray) -> np.ndarray:
    """Evolved difference operators, shape (T, N, N)."""
    n = family.dim
    evolved = family.maps @ delta_vec
    return evolved.reshape(len(family), n, n).transpose(0, 2, 1)  # unvec per step


def _distance_series(family: MapFamily, r1, r2) -> np.ndarray:
    """Trace distance per grid point via the evolved difference operator."""
    delta = np.asarray(r1, dtype=complex) - np.asarray(r2, dtype=complex)
    diff = _difference_series(family, vec(delta))
    diff = 0.5 * (diff + diff.conj().transpose(0, 2, 1))
    eigs = np.linalg.eigvalsh(diff)
    return 0.5 * np.sum(np.abs(eigs), axis=1)


def distance_trajectory(family: MapFamily, r1, r2) -> DistanceTrajectory:
    """Evolve a state pair under the family and record the trace distance."""
    n = family.dim
    r1 = validate_density_matrix(r1)
    r2 = validate_density_matrix(r2)
    if r1.shape != (n, n) or r2.shape != (n, n):
        raise DimMismatch(f"states must be {n}x{n} for this family")
    d = _distance_series(family, r1, r2)
    return DistanceTrajectory(times=family.times, d=np.clip(d, 0.0, None), pair=(r1, r2))


def sigma(traj: DistanceTrajectory) -> np.ndarray:
    """Rate of change of the trace distance (central differences)."""
    if len(traj.times) < 3:
        raise ValidationError("rate computation needs at least three grid points")
    dt = float(traj.times[1] - traj.times[0])
    return np.gradient(traj.d, dt, edge_order=2)


def growth_intervals(traj: DistanceTrajectory, threshold: float = GROWTH_THRESHOLD) -> list:
    """Maximal runs of grid steps on which the trace distance grows.

    Returns (start_time, end_time, gain) tuples with gain = d(end) - d(start);
    interval endpoints are snapped to grid times.
    """
    increments = np.diff(traj.d)
    rising = increments > threshold
    intervals = []
    k = 0
    while k < len(rising):
        if rising[k]:
            start = k
            while k < len(rising) and rising[k]:
                k += 1
            intervals.append(
                (
                    float(traj.times[start]),
                    float(traj.times[k]),
                    float(traj.d[k] - traj.d[start]),
                )
            )
        else:
            k += 1
    return intervals


def measure_for_pair(family: MapFamily, r1, r2):
    """Total trace-distance gain over all growth intervals for one pair."""
    traj = distance_trajectory(family, r1, r2)
    intervals = growth_intervals(traj)
    return float(sum(gain for _, _, gain in intervals)), intervals


def _ball_grid(n_radii: int) -> np.ndarray:
    """Bloch-ball grid: n_radii radii times the 26 lattice directions."""
    directions = []
    for ijk in product((-1, 0, 1), repeat=3):
        if ijk == (0, 0, 0):
            continue
        v = np.array(ijk, dtype=float)
        directions.append(v / np.linalg.norm(v))
    radii = np.arange(1, n_radii + 1) / n_radii
    return np.array([r * d for r in radii for d in directions])


def _qubit_scores(family: MapFamily, deltas: np.ndarray, threshold: float) -> np.ndarray:
    """Backflow score for many qubit pairs at once.

    ``deltas`` holds Bloch-vector differences r1 - r2 (one row per pair).
    The evolved difference operator of a qubit pair is traceless Hermitian,
    so its trace distance is sqrt(a^2 + |b|^2) with a the population
    difference and b the coherence difference.
    """
    # vec(Delta) for Delta = (d . sigma)/2 in column stacking: [dz/2, (dx+i dy)/2,
    # (dx-i dy)/2, -dz/2].
    dvecs = np.empty((deltas.shape[0], 4), dtype=complex)
    dvecs[:, 0] = 0.5 * deltas[:, 2]
    dvecs[:, 1] = 0.5 * (deltas[:, 0] + 1j * deltas[:, 1])
    dvecs[:, 2] = 0.5 * (deltas[:, 0] - 1j * deltas[:, 1])
    dvecs[:, 3] = -0.5 * deltas[:, 2]
    # Only the population and coherence components of the evolved difference
    # enter the distance, so evolve just those two rows.
    pop = np.ascontiguousarray(family.maps[:, 3, :]) @ dvecs.T
    coh = np.ascontiguousarray(family.maps[:, 1, :]) @ dvecs.T
    d = np.sqrt(
        pop.real**2 + pop.imag**2 + coh.real**2 + coh.imag**2
    )
    increments = np.diff(d, axis=0)
    return np.sum(np.where(increments > threshold, increments, 0.0), axis=0)


def _qubit_score_one(family: MapFamily, b1, b2, threshold: float) -> float:
    return float(_qubit_scores(family, np.array([b1]) - np.array([b2]), threshold)[0])


def _project_ball(r: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(r)
    return r / norm if norm > 1.0 else r


def _pair_key(b1, b2) -> tuple:
    return tuple(float(x) for x in np.concatenate([b1, b2]))


def _refine(family: MapFamily, b1, b2, config: PairSearchConfig):
    """Coordinate descent over the six Bloch coordinates of a pair."""
    coords = np.concatenate([np.asarray(b1, dtype=float), np.asarray(b2, dtype=float)])
    value = _qubit_score_one(family, coords[:3], coords[3:], config.growth_threshold)
    evaluations = 1
    step = config.initial_step
    for _ in range(config.max_sweeps):
        improved = False
        for c in range(6):
            for direction in (1.0, -1.0):
                trial = coords.copy()
                trial[c] += direction * step
                trial[:3] = _project_ball(trial[:3])
                trial[3:] = _project_ball(trial[3:])
                trial_value = _qubit_score_one(
                    family, trial[:3], trial[3:], config.growth_threshold
                )
                evaluations += 1
                if trial_value > value:
                    coords, value = trial, trial_value
                    improved = True
        if not improved:
            step *= 0.5
            if step < config.min_step:
                break
    return value, coords[:3], coords[3:], evaluations


def _canonical_deltas(deltas: np.ndarray):
    """Unique difference vectors up to sign, with the inverse index map.

    The evolved distance of a pair depends only on the difference of its
    states, and is invariant under negating it, so score-equivalent pairs
    are computed once.
    """
    canon = deltas.copy()
    sign = np.sign(canon[:, 0])
    sign = np.where(sign == 0, np.sign(canon[:, 1]), sign)
    sign = np.where(sign == 0, np.sign(canon[:, 2]), sign)
    sign = np.where(sign == 0, 1.0, sign)
    canon *= sign[:, None]
    _, first, inverse = np.unique(
        np.round(canon, 12), axis=0, return_index=True, return_inverse=True
    )
    return canon[first], inverse


def _maximize_qubit(family: MapFamily, config: PairSearchConfig) -> MeasureReport:
    points = _ball_grid(config.n_radii)
    pair_indices = list(combinations(range(len(points)), 2))
    # The antipodal surface pairs are a subset of all grid pairs by
    # construction of the direction set; no extra candidates are needed.
    deltas = points[[i for i, _ in pair_indices]] - points[[j for _, j in pair_indices]]
    unique_deltas, inverse = _canonical_deltas(deltas)

    chunk = 512
    unique_scores = np.empty(len(unique_deltas))
    for lo in range(0, len(unique_deltas), chunk):
        unique_scores[lo : lo + chunk] = _qubit_scores(
            family, unique_deltas[lo : lo + chunk], config.growth_threshold
        )
    scores = unique_scores[inverse]
    evaluations = len(pair_indices)

    order = sorted(
        range(len(pair_indices)),
        key=lambda k: (-scores[k], _pair_key(points[pair_indices[k][0]], points[pair_indices[k][1]])),
    )
    seeds = [
        (points[pair_indices[k][0]], points[pair_indices[k][1]])
        for k in order[: config.seeds]
    ]

    def refine_seed(seed):
        return _refine(family, seed[0], seed[1], config)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            refined = list(pool.map(refine_seed, seeds))
    else:
        refined = [refine_seed(seed) for seed in seeds]

    best = None
    for value, b1, b2, used in refined:
        evaluations += used
        key = (-value, _pair_key(b1, b2))
        if best is None or key < best[0]:
            best = (key, value, b1, b2)

    _, value, b1, b2 = best
    r1, r2 = bloch_state(b1), bloch_state(b2)
    n_value, intervals = measure_for_pair(family, r1, r2)
    return MeasureReport(
        n_value=n_value,
        optimal_pair=(r1, r2),
        intervals=intervals,
        evaluations=evaluations,
    )


def _maximize_candidates(family: MapFamily, config: PairSearchConfig) -> MeasureReport:
    best = None
    for r1, r2 in config.candidates:
        value, intervals = measure_for_pair(family, r1, r2)
        key = (-value,)
        if best is None or key < best[0]:
            best = (key, value, (r1, r2), intervals)
    _, value, pair, intervals = best
    return MeasureReport(
        n_value=value,
        optimal_pair=pair,
        intervals=intervals,
        evaluations=len(config.candidates),
    )


def maximize(family: MapFamily, config: PairSearchConfig = None) -> MeasureReport:
    """Measure of the family: maximal summed distance gain over initial pairs.

    Qubit families are searched over the Bloch ball (grid plus coordinate
    descent); other dimensions require an explicit candidate list in the
    config.  The reported value is a lower bound on the supremum.
    """
    config = config or PairSearchConfig()
    if config.candidates:
        return _maximize_candidates(family, config)
    if family.dim != 2:
        raise ValidationError(
            "built-in pair search is specific to qubit families; "
            "supply candidate pairs for other dimensions"
        )
    return _maximize_qubit(family, config)


def is_nonmarkovian(family: MapFamily, config: PairSearchConfig = None) -> bool:
    """True when some initial pair shows trace-distance backflow."""
    return maximize(family, config).n_value > NONMARKOVIAN_THRESHOLD


def report_to_obj(report: MeasureReport) -> dict:
    """JSON-ready measure report; qubit pairs are encoded as Bloch vectors."""
    r1, r2 = report.optimal_pair
    if r1.shape == (2, 2):
        pair = [[float(x) for x in bloch_vector(r)] for r in (r1, r2)]
    else:
        pair = [cmatrix_to_pairs(r1), cmatrix_to_pairs(r2)]
    return {
        "n": report.n_value,
        "pair": pair,
        "intervals": [[a, b, gain] for a, b, gain in report.intervals],
        "evaluations": report.evaluations,
    }
