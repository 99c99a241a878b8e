"""Amplitude-damping-with-phase channel induced by the bath ensemble average.

Basis convention: index 0 is spin-up, index 1 is spin-down.  A pure
preparation ``a|up> + b|down>`` with ``a = cos(theta/2)``,
``b = sin(theta/2) e^{i nu}`` evolves under the ensemble-averaged reduced
dynamics as

    rho_uu(tau) = |a|^2 F0,   rho_ud(tau) = a b* F1,   rho_dd = 1 - rho_uu

with ``F1 = exp(-(gamma + i phi))`` and ``F0 = |F1|^2 = exp(-2 gamma)``.
The same map admits the Kraus pair K0 = [[F1, 0], [0, 1]],
K1 = [[0, 0], [sqrt(1 - F0), 0]] whenever gamma >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, NotCompletelyPositive
from .kernels import DecoherenceTrajectory


@dataclass(frozen=True)
class PureStatePrep:
    """Bloch angles of the initial pure state."""

    theta: float
    nu: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi):
            raise DomainError(f"theta must lie in [0, pi], got {self.theta}")
        if not (0.0 <= self.nu < 2.0 * np.pi):
            raise DomainError(f"nu must lie in [0, 2*pi), got {self.nu}")

    @property
    def amplitude_up(self) -> complex:
        return complex(np.cos(0.5 * self.theta))

    @property
    def amplitude_down(self) -> complex:
        return complex(np.sin(0.5 * self.theta) * np.exp(1j * self.nu))


@dataclass(frozen=True)
class DensityMatrix:
    """Validated 2x2 density matrix (Hermitian, unit trace).

    Positivity is deliberately NOT enforced at construction: trajectories
    with gamma < 0 produce formally valid but non-positive states, and
    `validate_channel` reports that instead of crashing.
    """

    rho_uu: complex
    rho_ud: complex
    rho_du: complex
    rho_dd: complex

    def __post_init__(self):
        if abs(self.rho_du - np.conj(self.rho_ud)) > 1e-12:
            raise DomainError("density matrix must be Hermitian")
        if abs(self.rho_uu.imag) > 1e-12 or abs(self.rho_dd.imag) > 1e-12:
            raise DomainError("diagonal entries must be real")
        if abs(self.rho_uu + self.rho_dd - 1.0) > 1e-12:
            raise DomainError("trace must equal 1")

    @classmethod
    def from_matrix(cls, m) -> "DensityMatrix":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise DomainError("expected a 2x2 matrix")
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def to_matrix(self) -> np.ndarray:
        return np.array([[self.rho_uu, self.rho_ud],
                         [self.rho_du, self.rho_dd]], dtype=complex)

    def min_eigenvalue(self) -> float:
        gap = np.sqrt((self.rho_uu.real - self.rho_dd.real) ** 2
                      + 4.0 * abs(self.rho_ud) ** 2)
        return float(0.5 * (1.0 - gap))

    def is_positive(self, tol: float = 1e-12) -> bool:
        return self.min_eigenvalue() >= -tol


@dataclass(frozen=True)
class KrausPair:
    """The two Kraus operators of the damping channel at one instant."""

    k0: np.ndarray
    k1: np.ndarray

    def completeness_deviation(self) -> float:
        ident = self.k0.conj().T @ self.k0 + self.k1.conj().T @ self.k1
        return float(np.max(np.abs(ident - np.eye(2))))


class SignConvention(str, Enum):
    UP_MINUS_DOWN = "up-down"
    DOWN_MINUS_UP = "down-up"


def initial_state(prep: PureStatePrep) -> DensityMatrix:
    a, b = prep.amplitude_up, prep.amplitude_down
    return DensityMatrix(abs(a) ** 2, a * np.conj(b), np.conj(a) * b,
                         abs(b) ** 2)


def evolve_state(prep: PureStatePrep, gamma: float, phi: float) -> DensityMatrix:
    """Evolved state of a pure preparation at decay exponent/phase (gamma, phi)."""
    f1 = np.exp(-(gamma + 1j * phi))
    f0 = np.exp(-2.0 * gamma)
    a, b = prep.amplitude_up, prep.amplitude_down
    uu = abs(a) ** 2 * f0
    ud = a * np.conj(b) * f1
    return DensityMatrix(uu, ud, np.conj(ud), 1.0 - uu)


def evolve_series(prep: PureStatePrep, gamma, phi):
    """Vectorized populations/coherences along a trajectory.

    Returns (rho_uu, rho_ud) arrays; rho_dd is 1 - rho_uu and
    rho_du the conjugate of rho_ud.
    """
    gamma = np.asarray(gamma, dtype=float)
    phi = np.asarray(phi, dtype=float)
    a, b = prep.amplitude_up, prep.amplitude_down
    uu = abs(a) ** 2 * np.exp(-2.0 * gamma)
    ud = a * np.conj(b) * np.exp(-(gamma + 1j * phi))
    return uu, ud


def kraus_pair(gamma: float, phi: float) -> KrausPair:
    """Kraus operators at (gamma, phi); requires a CP instant (gamma >= 0)."""
    if gamma < 0:
        raise NotCompletelyPositive(
            f"gamma = {gamma} < 0: the instantaneous map is not CP")
    f1 = np.exp(-(gamma + 1j * phi))
    f0 = np.exp(-2.0 * gamma)
    k0 = np.array([[f1, 0.0], [0.0, 1.0]], dtype=complex)
    k1 = np.array([[0.0, 0.0], [np.sqrt(1.0 - f0), 0.0]], dtype=complex)
    return KrausPair(k0, k1)


def apply_kraus(pair: KrausPair, rho: DensityMatrix) -> DensityMatrix:
    """Apply the channel in operator-sum form: sum_m K_m rho K_m^dagger."""
    m = rho.to_matrix()
    out = (pair.k0 @ m @ pair.k0.conj().T
           + pair.k1 @ m @ pair.k1.conj().T)
    return DensityMatrix.from_matrix(out)


def coherence_l1(rho: DensityMatrix) -> float:
    """l1 coherence of a qubit state: twice the off-diagonal magnitude."""
    return float(2.0 * abs(rho.rho_ud))


def coherence_series(prep: PureStatePrep, gamma) -> np.ndarray:
    """l1 coherence along a trajectory: 2|a b*| exp(-gamma)."""
    a, b = prep.amplitude_up, prep.amplitude_down
    return 2.0 * abs(a * np.conj(b)) * np.exp(-np.asarray(gamma, dtype=float))


def population_difference(rho: DensityMatrix,
                          convention: SignConvention = SignConvention.DOWN_MINUS_UP
                          ) -> float:
    """Signed population difference under the chosen convention."""
    diff = rho.rho_dd.real - rho.rho_uu.real
    if convention is SignConvention.UP_MINUS_DOWN:
        diff = -diff
    return float(diff)


def population_series(prep: PureStatePrep, gamma,
                      convention: SignConvention = SignConvention.DOWN_MINUS_UP
                      ) -> np.ndarray:
    """Population difference along a trajectory (vectorized)."""
    uu = abs(prep.amplitude_up) ** 2 * np.exp(-2.0 * np.asarray(gamma, dtype=float))
    diff = 1.0 - 2.0 * uu
    if convention is SignConvention.UP_MINUS_DOWN:
        diff = -diff
    return diff


@dataclass(frozen=True)
class ChannelValidationReport:
    """Per-instant health of the channel along a trajectory.

    All checks are reported, never raised: non-CP stretches (gamma < 0) show
    up as False entries with NaN completeness.
    """

    tau: np.ndarray
    trace_deviation: np.ndarray
    min_eigenvalue: np.ndarray
    completeness_deviation: np.ndarray
    positive: np.ndarray
    cp_ok: np.ndarray

    @property
    def all_ok(self) -> bool:
        return bool(np.all(self.positive) and np.all(self.cp_ok))

    @property
    def first_violation_tau(self) -> float | None:
        bad = ~(self.positive & self.cp_ok)
        if not bad.any():
            return None
        return float(self.tau[int(np.argmax(bad))])

    def as_dict(self) -> dict:
        return {
            "all_ok": self.all_ok,
            "first_violation_tau": self.first_violation_tau,
            "max_trace_deviation": float(np.max(self.trace_deviation)),
            "min_eigenvalue": float(np.min(self.min_eigenvalue)),
            "max_completeness_deviation":
                float(np.nanmax(self.completeness_deviation))
                if np.any(self.cp_ok) else None,
        }


def validate_channel(traj: DecoherenceTrajectory,
                     prep: PureStatePrep | None = None,
                     eig_tol: float = 1e-12,
                     completeness_tol: float = 1e-12) -> ChannelValidationReport:
    """Check trace preservation, positivity and Kraus completeness pointwise.

    Positivity of the evolved state is equivalent to gamma >= 0: the evolved
    determinant is |a|^4 F0 (1 - F0), negative exactly when F0 > 1.
    """
    if prep is None:
        prep = PureStatePrep(theta=0.5 * np.pi, nu=0.0)
    uu, ud = evolve_series(prep, traj.gamma, traj.phi)
    dd = 1.0 - uu
    trace_dev = np.abs(uu + dd - 1.0)
    gap = np.sqrt((uu - dd) ** 2 + 4.0 * np.abs(ud) ** 2)
    min_eig = 0.5 * (1.0 - gap)
    f0 = np.exp(-2.0 * traj.gamma)
    cp_ok = traj.gamma >= 0.0
    completeness = np.where(
        cp_ok, np.abs(np.exp(-traj.gamma) ** 2 + (1.0 - f0) - 1.0), np.nan)
    return ChannelValidationReport(
        tau=traj.tau, trace_deviation=trace_dev, min_eigenvalue=min_eig,
        completeness_deviation=completeness,
        positive=min_eig >= -eig_tol,
        cp_ok=cp_ok & ~(completeness > completeness_tol))
