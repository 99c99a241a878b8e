"""Memory kernels and decoherence functions for the random-coupling bath.

Everything is dimensionless: times are measured in units of the bath
modulation period (the modulated kernel oscillates at unit frequency), and
the detuning ``delta_bar`` and inverse memory time ``kappa_bar`` are scaled
accordingly.  Three ensemble kernels are supported:

* delta      -- K(s) = kappa_bar * delta(s), memoryless limit
* exponential-- K(s) = kappa_bar * exp(-kappa_bar * s)
* modulated  -- K(s) = kappa_bar * exp(-kappa_bar * s) * cos(s)

The reduced dynamics is controlled by the complex response
``alpha(z) = integral_0^z K(s) exp(i delta_bar s) ds`` and by its running
integral, whose real and imaginary parts are the decay exponent ``gamma(tau)``
and phase ``phi(tau)``.  ``decoherence_numeric`` is the canonical oracle for
both; the closed forms are transcriptions of the known analytic results and
are checked against the oracle by ``compare_trajectories``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DeltaKernelNotPointwise, DomainError
from .quadrature import integrate_interval, integrate_segments


class KernelKind(str, Enum):
    DELTA = "delta"
    EXPONENTIAL = "exponential"
    MODULATED = "modulated"


class TrajectorySource(str, Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class KernelSpec:
    """Which ensemble kernel, and its inverse memory time ``kappa_bar``."""

    kind: KernelKind
    kappa_bar: float

    def __post_init__(self):
        if not np.isfinite(self.kappa_bar) or self.kappa_bar <= 0:
            raise DomainError(f"kappa_bar must be finite and > 0, got {self.kappa_bar}")


@dataclass(frozen=True)
class ModelParams:
    """Kernel plus the rotating-frame detuning ``delta_bar``."""

    kernel: KernelSpec
    delta_bar: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.delta_bar):
            raise DomainError(f"delta_bar must be finite, got {self.delta_bar}")


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.max_subdivisions < 2:
            raise DomainError("quadrature tolerances must be positive")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass
class DecoherenceTrajectory:
    """Decay exponent, phase and instantaneous rate on a time grid.

    ``gamma_rate`` is d(gamma)/d(tau): the real part of alpha(tau) on the
    quadrature path, or the analytic derivative of the closed form.
    """

    tau: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray
    gamma_rate: np.ndarray
    source: TrajectorySource

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.gamma_rate = np.asarray(self.gamma_rate, dtype=float)
        n = self.tau.size
        if self.gamma.size != n or self.phi.size != n or self.gamma_rate.size != n:
            raise DomainError("trajectory arrays must share one length")
        if n and (self.tau[0] != 0.0 or np.any(np.diff(self.tau) <= 0)):
            raise DomainError("tau grid must start at 0 and increase strictly")

    def __len__(self):
        return self.tau.size


def default_tau_grid(tau_max: float = 50.0, n_points: int = 2001) -> np.ndarray:
    if tau_max <= 0 or n_points < 2:
        raise DomainError("need tau_max > 0 and at least two grid points")
    return np.linspace(0.0, tau_max, n_points)


def recommended_spacing(params: ModelParams) -> float:
    """Grid spacing that resolves both kernel decay and phase oscillation."""
    scale = max(1.0, abs(params.delta_bar), params.kernel.kappa_bar)
    return min(0.05, 0.1 / scale)


def dense_tau_grid(tau_max: float, params: ModelParams,
                   min_points: int = 2) -> np.ndarray:
    """Uniform grid on [0, tau_max] honoring the recommended spacing."""
    n = max(min_points, int(np.ceil(tau_max / recommended_spacing(params))) + 1)
    return default_tau_grid(tau_max, n)


def correlation_value(kernel: KernelSpec, s):
    """Ensemble correlation K(s) at lag s >= 0 (vectorized over s)."""
    if kernel.kind is KernelKind.DELTA:
        raise DeltaKernelNotPointwise(
            "the delta kernel is a distribution; use decoherence_markovian")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("correlation lag must be >= 0")
    kb = kernel.kappa_bar
    out = kb * np.exp(-kb * s)
    if kernel.kind is KernelKind.MODULATED:
        out = out * np.cos(s)
    return out if out.ndim else float(out)


def _phase_integrand(params: ModelParams):
    """Vectorized integrand K(s) * exp(i delta_bar s) for the quadrature."""
    kb = params.kernel.kappa_bar
    db = params.delta_bar
    if params.kernel.kind is KernelKind.EXPONENTIAL:
        return lambda s: kb * np.exp((1j * db - kb) * s)
    if params.kernel.kind is KernelKind.MODULATED:
        return lambda s: kb * np.exp((1j * db - kb) * s) * np.cos(s)
    raise DeltaKernelNotPointwise(
        "the delta kernel has no pointwise integrand; use decoherence_markovian")


def alpha_numeric(params: ModelParams, z: float,
                  config: QuadratureConfig = DEFAULT_QUADRATURE) -> complex:
    """Complex response alpha(z) by adaptive quadrature."""
    if z < 0:
        raise DomainError("alpha is defined for z >= 0")
    f = _phase_integrand(params)
    if z == 0:
        return 0j
    return integrate_interval(f, 0.0, z, abs_tol=config.abs_tol,
                              rel_tol=config.rel_tol,
                              max_subdivisions=config.max_subdivisions)


def decoherence_numeric(params: ModelParams, tau_grid,
                        config: QuadratureConfig = DEFAULT_QUADRATURE
                        ) -> DecoherenceTrajectory:
    """Canonical oracle: gamma, phi and gamma_rate on a grid by quadrature.

    Parameters
    ----------
    params : ModelParams
        Exponential or modulated kernel with its detuning.
    tau_grid : array_like
        Strictly increasing grid starting at 0.  Accuracy does not depend on
        the spacing -- each cell is integrated adaptively -- but downstream
        sign analysis (backflow detection) wants `recommended_spacing`.
    config : QuadratureConfig

    Notes
    -----
    Per grid cell the engine accumulates both ``A_i = integral of f over the
    cell`` and the first moment ``M_i = integral of (tau_{i+1} - s) f(s) ds``;
    then ``alpha(tau_i)`` is the running sum of the A's and the running
    integral of alpha advances by ``alpha(tau_i) * h_i + M_i`` (Fubini),
    so the cumulative double integral is assembled without nested loops.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size < 1:
        raise DomainError("tau_grid must be a 1-D array")
    if tau[0] != 0.0 or np.any(np.diff(tau) <= 0):
        raise DomainError("tau grid must start at 0 and increase strictly")
    f = _phase_integrand(params)
    if tau.size == 1:
        zeros = np.zeros(1)
        return DecoherenceTrajectory(tau, zeros, zeros, zeros,
                                     TrajectorySource.QUADRATURE)
    lo, hi = tau[:-1], tau[1:]
    h = hi - lo
    span = tau[-1] - tau[0]
    seg_tol = np.maximum(config.abs_tol * h / span, 1e-16)
    delta_alpha, moment = integrate_segments(
        f, lo, hi, anchor=hi, abs_tol=seg_tol, rel_tol=config.rel_tol,
        max_subdivisions=config.max_subdivisions)
    alpha = np.concatenate([[0j], np.cumsum(delta_alpha)])
    running = np.concatenate([[0j], np.cumsum(alpha[:-1] * h + moment)])
    return DecoherenceTrajectory(tau, running.real, running.imag, alpha.real,
                                 TrajectorySource.QUADRATURE)


def decoherence_markovian(kappa_bar: float, tau_grid) -> DecoherenceTrajectory:
    """Memoryless limit: gamma = kappa_bar * tau, phi = 0, constant rate."""
    if not np.isfinite(kappa_bar) or kappa_bar <= 0:
        raise DomainError(f"kappa_bar must be finite and > 0, got {kappa_bar}")
    tau = np.asarray(tau_grid, dtype=float)
    return DecoherenceTrajectory(
        tau, kappa_bar * tau, np.zeros_like(tau),
        np.full_like(tau, kappa_bar), TrajectorySource.CLOSED_FORM)


def decoherence_closed_exponential(params: ModelParams,
                                   tau_grid) -> DecoherenceTrajectory:
    """Transcribed closed forms for the exponential kernel.

    The rate is the analytic tau-derivative of the transcribed gamma.  These
    expressions are kept exactly as published; `compare_trajectories` measures
    them against the quadrature oracle rather than patching them here.
    """
    if params.kernel.kind is not KernelKind.EXPONENTIAL:
        raise DomainError("exponential closed form needs an exponential kernel")
    kb, db = params.kernel.kappa_bar, params.delta_bar
    q = kb * kb + db * db
    if q == 0:
        raise DomainError("kappa_bar^2 + delta_bar^2 must be nonzero")
    tau = np.asarray(tau_grid, dtype=float)
    decay = np.exp(-kb * tau)
    cos_d, sin_d = np.cos(db * tau), np.sin(db * tau)
    gamma = kb**2 * tau / q - (kb**3 - kb * db**2) / q**2 * (1.0 - decay * cos_d)
    phi = (kb * db * tau / q
           - kb**2 / q**2 * (2.0 * db - decay * ((kb**2 - db**2) / kb * sin_d
                                                 + 2.0 * db * cos_d)))
    rate = kb**2 / q - (kb**3 - kb * db**2) / q**2 * decay * (kb * cos_d + db * sin_d)
    return DecoherenceTrajectory(tau, gamma, phi, rate,
                                 TrajectorySource.CLOSED_FORM)


def decoherence_closed_modulated(params: ModelParams,
                                 tau_grid) -> DecoherenceTrajectory:
    """Transcribed closed forms for the modulated kernel.

    Structurally the half-sum of exponential-kernel expressions at the two
    sideband detunings delta_bar +- 1.
    """
    if params.kernel.kind is not KernelKind.MODULATED:
        raise DomainError("modulated closed form needs a modulated kernel")
    kb, db = params.kernel.kappa_bar, params.delta_bar
    d_p, d_m = db + 1.0, db - 1.0
    q_p, q_m = kb * kb + d_p * d_p, kb * kb + d_m * d_m
    if q_p == 0 or q_m == 0:
        raise DomainError("kappa_bar^2 + (delta_bar +- 1)^2 must be nonzero")
    tau = np.asarray(tau_grid, dtype=float)
    decay = np.exp(-kb * tau)
    cos_p, sin_p = np.cos(d_p * tau), np.sin(d_p * tau)
    cos_m, sin_m = np.cos(d_m * tau), np.sin(d_m * tau)
    even_p, odd_p = (kb**2 - d_p**2) / q_p**2, 2.0 * kb * d_p / q_p**2
    even_m, odd_m = (kb**2 - d_m**2) / q_m**2, 2.0 * kb * d_m / q_m**2

    gamma = 0.5 * kb * (
        -even_p - even_m + (1.0 / q_p + 1.0 / q_m) * kb * tau
        + decay * (even_p * cos_p - odd_p * sin_p
                   + even_m * cos_m - odd_m * sin_m))
    phi = 0.5 * kb * (
        (d_p / q_p + d_m / q_m) * tau
        + decay * (odd_p * cos_p + even_p * sin_p
                   + even_m * sin_m + odd_m * cos_m)
        - odd_p - odd_m)
    rate = 0.5 * kb * (
        (kb - decay * (kb * cos_p - d_p * sin_p)) / q_p
        + (kb - decay * (kb * cos_m - d_m * sin_m)) / q_m)
    return DecoherenceTrajectory(tau, gamma, phi, rate,
                                 TrajectorySource.CLOSED_FORM)


def closed_form_trajectory(params: ModelParams, tau_grid) -> DecoherenceTrajectory:
    """Dispatch to the closed form matching the kernel kind."""
    kind = params.kernel.kind
    if kind is KernelKind.DELTA:
        return decoherence_markovian(params.kernel.kappa_bar, tau_grid)
    if kind is KernelKind.EXPONENTIAL:
        return decoherence_closed_exponential(params, tau_grid)
    return decoherence_closed_modulated(params, tau_grid)


@dataclass(frozen=True)
class TrajectoryDeviation:
    """Closed-form vs oracle agreement at one parameter point."""

    kernel: KernelKind
    kappa_bar: float
    delta_bar: float
    max_gamma_dev: float
    tau_at_max_gamma: float
    max_phi_dev: float
    tau_at_max_phi: float
    tol: float = 1e-6
    within_tol: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "within_tol",
            bool(max(self.max_gamma_dev, self.max_phi_dev) <= self.tol))

    def as_dict(self) -> dict:
        return {
            "kernel": self.kernel.value,
            "kappa_bar": self.kappa_bar,
            "delta_bar": self.delta_bar,
            "max_gamma_dev": self.max_gamma_dev,
            "tau_at_max_gamma": self.tau_at_max_gamma,
            "max_phi_dev": self.max_phi_dev,
            "tau_at_max_phi": self.tau_at_max_phi,
            "tol": self.tol,
            "within_tol": self.within_tol,
        }


def compare_trajectories(closed: DecoherenceTrajectory,
                         reference: DecoherenceTrajectory,
                         params: ModelParams,
                         tol: float = 1e-6) -> TrajectoryDeviation:
    """Max absolute gamma/phi deviation between two trajectories on one grid."""
    if closed.tau.size != reference.tau.size or np.any(closed.tau != reference.tau):
        raise DomainError("trajectories must share the same tau grid")
    dg = np.abs(closed.gamma - reference.gamma)
    dp = np.abs(closed.phi - reference.phi)
    ig, ip = int(np.argmax(dg)), int(np.argmax(dp))
    return TrajectoryDeviation(
        kernel=params.kernel.kind, kappa_bar=params.kernel.kappa_bar,
        delta_bar=params.delta_bar,
        max_gamma_dev=float(dg[ig]), tau_at_max_gamma=float(closed.tau[ig]),
        max_phi_dev=float(dp[ip]), tau_at_max_phi=float(closed.tau[ip]),
        tol=tol)
