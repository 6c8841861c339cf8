"""Open-system information-flow toolkit.

Exact and numerical dynamics of the two-level decay model, divisibility
auditing of dynamical-map families, the trace-distance backflow measure,
and the local witness for initial system-environment correlations.
"""

from . import backflow, channels, decay, qmat, timelocal, witness
from .backflow import (
    DistanceTrajectory,
    MeasureReport,
    PairSearchConfig,
    distance_trajectory,
    growth_intervals,
    is_nonmarkovian,
    maximize,
    measure_for_pair,
    sigma,
)
from .channels import (
    AuditInterval,
    MapFamily,
    audit_divisibility,
    intermediate_map,
    is_completely_positive,
    kraus_to_super,
    super_to_choi,
)
from .decay import (
    ExponentialKernel,
    GTrajectory,
    TabulatedKernel,
    family,
    g_analytic,
    g_numeric,
    map_at,
    markov_g,
    rates,
)
from .qmat import (
    helstrom,
    kron,
    partial_trace,
    qubit_trace_distance,
    trace_distance,
    trace_norm,
)
from .timelocal import (
    GeneratorTrajectory,
    KossakowskiForm,
    LindbladGenerator,
    canonical_form,
    evolve_state,
    expm_propagator,
    generator_to_super,
    ordered_propagator,
)
from .witness import TotalModel, WitnessRecord, correlation_distance, run_witness

__version__ = "0.1.0"
