"""Two-level system decaying into a bosonic reservoir at zero temperature.

The model is fully characterized by the amplitude G(t), the solution of the
memory-kernel equation

    dG/dt = - integral_0^t f(t - t1) G(t1) dt1,    G(0) = 1,

where f is the environmental two-point correlation function.  For a
Lorentzian (exponential-kernel) environment G has a closed form, which
serves as the oracle for the numerical Volterra solver.  The exact dynamical
map, the time-dependent decay rate and frequency shift, and the intermediate
maps between two times are all simple functions of G.

Basis convention: index 0 is the ground state, index 1 the excited state,
so the excited population is ``rho[1, 1]`` and the coherence ``rho[1, 0]``.
"""

from dataclasses import dataclass

import numpy as np

from .channels import MapFamily
from .errors import (
    GridTooCoarse,
    NegativeTime,
    Singular,
    UnphysicalG,
    ValidationError,
)

# |G| at or below this is treated as a zero of G: rates are emitted as NaN
# gap markers there and intermediate maps refuse to divide by G.
G_ZERO_TOL = 1e-10
_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class ExponentialKernel:
    """Exponential correlation function f(tau) = (gamma0 lam / 2) e^{-lam |tau|}.

    ``gamma0`` is the system-environment coupling strength and ``lam`` the
    spectral width; the environmental correlation time is 1/lam and the
    system relaxation time 1/gamma0.
    """

    gamma0: float
    lam: float

    def __post_init__(self):
        if self.gamma0 <= 0 or self.lam <= 0:
            raise ValidationError(
                f"kernel parameters must be positive, got gamma0={self.gamma0}, lam={self.lam}"
            )

    @property
    def correlation_time(self) -> float:
        return 1.0 / self.lam

    @property
    def relaxation_time(self) -> float:
        return 1.0 / self.gamma0

    @property
    def alpha(self) -> float:
        """Time-scale ratio correlation_time / relaxation_time = gamma0 / lam."""
        return self.gamma0 / self.lam

    def __call__(self, tau):
        return 0.5 * self.gamma0 * self.lam * np.exp(-self.lam * np.abs(tau)) + 0j


@dataclass(frozen=True)
class TabulatedKernel:
    """Correlation function given as complex samples on a uniform grid from 0."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValidationError("kernel times and values must be equal-length vectors")
        if len(times) < 2:
            raise ValidationError("kernel table needs at least two samples")
        if abs(times[0]) > 1e-15:
            raise ValidationError("kernel table must start at tau = 0")
        steps = np.diff(times)
        if steps.min() <= 0 or np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
            raise ValidationError("kernel table grid must be uniform and increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, tau):
        tau = np.abs(np.asarray(tau, dtype=float))
        if np.any(tau > self.times[-1] * (1 + 1e-12)):
            raise ValidationError(
                f"kernel table covers tau <= {self.times[-1]}, requested {tau.max()}"
            )
        return np.interp(tau, self.times, self.values)


@dataclass
class GTrajectory:
    """Samples of the decay amplitude G on a uniform time grid, G(0) = 1."""

    times: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.g = np.asarray(self.g, dtype=complex)
        if self.times.shape != self.g.shape or self.times.ndim != 1:
            raise ValidationError("times and g must be equal-length vectors")
        if abs(self.g[0] - 1.0) > 1e-12:
            raise ValidationError("G(0) must equal 1")
        gmax = float(np.max(np.abs(self.g)))
        if gmax > 1 + 1e-8:
            raise UnphysicalG(f"|G| reaches {gmax}, above 1 + 1e-8")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def g_analytic(kernel: ExponentialKernel, t):
    """Closed-form decay amplitude for the exponential kernel.

    Evaluates e^{-lam t/2}[cosh(d t/2) + (lam/d) sinh(d t/2)] with
    d = sqrt(lam^2 - 2 gamma0 lam), using the trigonometric branch when
    d^2 < 0 and the series limit at d -> 0.  Accepts scalars or arrays;
    the result is complex (real-valued for this kernel).
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise NegativeTime("G(t) is defined for t >= 0")
    lam, gamma0 = kernel.lam, kernel.gamma0
    disc = lam * lam - 2.0 * gamma0 * lam
    if abs(disc) < (1e-9 * lam) ** 2:
        out = np.exp(-0.5 * lam * t_arr) * (1.0 + 0.5 * lam * t_arr)
    elif disc > 0:
        d = np.sqrt(disc)
        # Stable exponential form: both exponents are negative for d < lam.
        out = 0.5 * (
            (1.0 + lam / d) * np.exp(0.5 * (d - lam) * t_arr)
            + (1.0 - lam / d) * np.exp(-0.5 * (d + lam) * t_arr)
        )
    else:
        nu = np.sqrt(-disc)
        out = np.exp(-0.5 * lam * t_arr) * (
            np.cos(0.5 * nu * t_arr) + (lam / nu) * np.sin(0.5 * nu * t_arr)
        )
    out = np.asarray(out, dtype=complex)
    return out[()] if np.isscalar(t) or t_arr.ndim == 0 else out


def markov_g(gamma0: float, t):
    """Memoryless-limit amplitude e^{-gamma0 t / 2}."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise NegativeTime("G(t) is defined for t >= 0")
    out = np.asarray(np.exp(-0.5 * gamma0 * t_arr), dtype=complex)
    return out[()] if np.isscalar(t) or t_arr.ndim == 0 else out


def g_numeric(kernel, t_max: float, dt: float) -> GTrajectory:
    """Solve the memory-kernel equation for G on a uniform grid.

    Second-order product-trapezoidal scheme: the memory integral is
    evaluated by the trapezoidal rule and the newest point is handled
    explicitly by a single predictor-corrector pass.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if t_max < dt:
        raise ValidationError(f"t_max must be at least dt, got t_max={t_max}, dt={dt}")
    if isinstance(kernel, ExponentialKernel) and dt > kernel.correlation_time / 10:
        raise GridTooCoarse(
            f"dt={dt} exceeds a tenth of the kernel correlation time {kernel.correlation_time}"
        )
    n = int(round(t_max / dt))
    times = dt * np.arange(n + 1)
    fvals = np.asarray(kernel(times), dtype=complex)

    g = np.empty(n + 1, dtype=complex)
    g[0] = 1.0
    f0 = fvals[0]
    # F_k = -trapezoid_{[0, t_k]} f(t_k - s) G(s) ds, maintained incrementally.
    f_curr = 0.0 + 0.0j
    for k in range(n):
        # Interior part of the integral at t_{k+1} (half weights at both ends).
        interior = np.dot(fvals[k:0:-1], g[1 : k + 1]) if k >= 1 else 0.0
        base = 0.5 * fvals[k + 1] * g[0] + interior
        g_pred = g[k] + dt * f_curr
        f_pred = -dt * (base + 0.5 * f0 * g_pred)
        g[k + 1] = g[k] + 0.5 * dt * (f_curr + f_pred)
        f_curr = f_pred - 0.5 * dt * f0 * (g[k + 1] - g_pred)
    return GTrajectory(times=times, g=g)


def _decay_super(g: complex) -> np.ndarray:
    """Superoperator of the decay map with amplitude ratio g (no CP check)."""
    g = complex(g)
    p = abs(g) ** 2
    s = np.zeros((4, 4), dtype=complex)
    s[0, 0] = 1.0
    s[0, 3] = 1.0 - p
    s[1, 1] = g
    s[2, 2] = np.conj(g)
    s[3, 3] = p
    return s


def map_at(g: complex) -> np.ndarray:
    """The exact dynamical map of the model at amplitude G(t) = g.

    Populations transform as rho11 -> |g|^2 rho11 (the loss feeding rho00)
    and coherences as rho10 -> g rho10.  Completely positive iff |g| <= 1.
    """
    if abs(g) > 1 + 1e-8:
        raise UnphysicalG(f"|G| = {abs(g)} exceeds 1 + 1e-8")
    return _decay_super(g)


def intermediate_map_closed_form(g1: complex, g2: complex) -> np.ndarray:
    """Map carrying states from time t1 to t2, in terms of g1 = G(t1), g2 = G(t2).

    Equals the decay map with ratio g2/g1; completely positive iff
    |g2| <= |g1|.  Raises ``Singular`` at zeros of G(t1).
    """
    if abs(g1) <= _SINGULAR_TOL:
        raise Singular(f"|G(t1)| = {abs(g1)} is numerically zero; no intermediate map")
    return _decay_super(complex(g2) / complex(g1))


def rates(traj: GTrajectory):
    """Decay rate and frequency shift series of the time-local generator.

    gamma(t) = -2 Re(G'/G) and shift(t) = -2 Im(G'/G), with the derivative
    from central differences (second-order one-sided at the ends).  Points
    where |G| <= G_ZERO_TOL are emitted as NaN gap markers: the rate
    diverges at zeros of G.
    """
    if len(traj.times) < 3:
        raise ValidationError("rate extraction needs at least three grid points")
    gdot = np.gradient(traj.g, traj.dt, edge_order=2)
    gap = np.abs(traj.g) <= G_ZERO_TOL
    safe_g = np.where(gap, 1.0, traj.g)
    ratio = gdot / safe_g
    gamma = -2.0 * np.real(ratio)
    shift = -2.0 * np.imag(ratio)
    gamma[gap] = np.nan
    shift[gap] = np.nan
    return gamma, shift


def family(kernel, t_max: float, dt: float) -> MapFamily:
    """Assemble the one-parameter map family of the model on a uniform grid."""
    traj = g_numeric(kernel, t_max, dt)
    maps = np.stack([map_at(gk) for gk in traj.g])
    return MapFamily(times=traj.times, maps=maps)


def family_from_trajectory(traj: GTrajectory) -> MapFamily:
    """Map family evaluated on an existing amplitude trajectory."""
    maps = np.stack([map_at(gk) for gk in traj.g])
    return MapFamily(times=traj.times, maps=maps)


def kernel_to_obj(kernel) -> dict:
    """JSON-ready kernel spec."""
    if isinstance(kernel, ExponentialKernel):
        return {"type": "exponential", "gamma0": kernel.gamma0, "lambda": kernel.lam}
    if isinstance(kernel, TabulatedKernel):
        dt = float(kernel.times[1] - kernel.times[0])
        return {
            "type": "tabulated",
            "dt": dt,
            "values": [[float(v.real), float(v.imag)] for v in kernel.values],
        }
    raise ValidationError(f"unknown kernel type {type(kernel).__name__}")


def kernel_from_obj(obj):
    """Parse a kernel spec document."""
    try:
        kind = obj["type"]
    except (TypeError, KeyError) as exc:
        raise ValidationError("kernel spec must carry a 'type' field") from exc
    if kind == "exponential":
        try:
            return ExponentialKernel(gamma0=float(obj["gamma0"]), lam=float(obj["lambda"]))
        except KeyError as exc:
            raise ValidationError(f"exponential kernel spec missing {exc}") from exc
    if kind == "tabulated":
        try:
            dt = float(obj["dt"])
            values = np.array([complex(p[0], p[1]) for p in obj["values"]])
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"malformed tabulated kernel spec: {exc}") from exc
        return TabulatedKernel(times=dt * np.arange(len(values)), values=values)
    raise ValidationError(f"unknown kernel type {kind!r}")
