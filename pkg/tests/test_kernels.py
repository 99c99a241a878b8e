"""Memory kernels, the quadrature oracle, and the closed decay formulas.

Reference numbers in this file were computed independently with 40-digit
arithmetic (mpmath) from the defining integrals, not with the package.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinbath import (DomainError, DeltaKernelNotPointwise, KernelKind,
                      KernelSpec, ModelParams, TrajectorySource,
                      alpha_numeric, closed_form_trajectory,
                      compare_trajectories, correlation_value,
                      decoherence_markovian, decoherence_numeric,
                      default_tau_grid, dense_tau_grid, recommended_spacing)
from spinbath.kernels import DecoherenceTrajectory


def _params(kind, kb, db):
    return ModelParams(KernelSpec(kind, kb), db)


# ---------------------------------------------------------------- kernels

def test_exponential_correlation_value():
    assert abs(correlation_value(KernelSpec(KernelKind.EXPONENTIAL, 1.0), 1.0)
               - 0.36787944117144233) < 1e-16


def test_modulated_correlation_value():
    val = correlation_value(KernelSpec(KernelKind.MODULATED, 2.0), 0.5)
    assert abs(val - 2.0 * np.exp(-1.0) * np.cos(0.5)) < 1e-15


def test_delta_correlation_is_not_pointwise():
    with pytest.raises(DeltaKernelNotPointwise):
        correlation_value(KernelSpec(KernelKind.DELTA, 1.0), 0.5)


def test_negative_lag_rejected():
    with pytest.raises(DomainError):
        correlation_value(KernelSpec(KernelKind.EXPONENTIAL, 1.0), -0.1)


def test_kernel_spec_validates_kappa():
    with pytest.raises(DomainError):
        KernelSpec(KernelKind.EXPONENTIAL, 0.0)
    with pytest.raises(DomainError):
        KernelSpec(KernelKind.EXPONENTIAL, -1.0)


# ------------------------------------------------------------------ alpha

def test_alpha_exponential_frozen():
    val = alpha_numeric(_params(KernelKind.EXPONENTIAL, 1.0, 1.0), 2.0)
    assert abs(val.real - 0.58968968739895231) < 1e-12
    assert abs(val.imag - 0.46662966259317557) < 1e-12


def test_alpha_modulated_frozen():
    val = alpha_numeric(_params(KernelKind.MODULATED, 1.0, 1.0), 2.0)
    assert abs(val.real - 0.52069404682689711) < 1e-12
    assert abs(val.imag - 0.22793441691874377) < 1e-12


def test_alpha_at_zero_is_zero():
    assert alpha_numeric(_params(KernelKind.EXPONENTIAL, 0.3, 2.0), 0.0) == 0j


def test_alpha_negative_z_rejected():
    with pytest.raises(DomainError):
        alpha_numeric(_params(KernelKind.EXPONENTIAL, 0.3, 2.0), -1.0)


# ----------------------------------------------------------------- oracle

def test_oracle_exponential_frozen_point():
    traj = decoherence_numeric(_params(KernelKind.EXPONENTIAL, 1.0, 1.0),
                               np.linspace(0.0, 1.5, 16))
    assert abs(traj.gamma[-1] - 0.63871439194589073) < 1e-12
    assert abs(traj.phi[-1] - 0.25789180156828316) < 1e-12


def test_oracle_modulated_frozen_point():
    traj = decoherence_numeric(_params(KernelKind.MODULATED, 0.3, 2.0),
                               np.linspace(0.0, 2.5, 26))
    assert abs(traj.gamma[-1] - 0.26461839269408840) < 1e-12
    assert abs(traj.phi[-1] - 0.32100270371297826) < 1e-12


def test_oracle_small_kappa_large_detuning():
    traj = decoherence_numeric(_params(KernelKind.EXPONENTIAL, 0.1, 5.0),
                               np.linspace(0.0, 10.0, 101))
    assert abs(traj.gamma[-1] - 0.0065907732298385784) < 1e-13
    assert abs(traj.phi[-1] - 0.20020253934477654) < 1e-12


def test_oracle_result_independent_of_grid_density():
    params = _params(KernelKind.MODULATED, 1.0, 3.0)
    coarse = decoherence_numeric(params, np.linspace(0.0, 4.0, 9))
    fine = decoherence_numeric(params, np.linspace(0.0, 4.0, 257))
    assert abs(coarse.gamma[-1] - fine.gamma[-1]) < 1e-11
    assert abs(coarse.phi[-1] - fine.phi[-1]) < 1e-11


def test_oracle_rate_is_alpha_real_part():
    params = _params(KernelKind.EXPONENTIAL, 0.7, 2.0)
    traj = decoherence_numeric(params, np.linspace(0.0, 3.0, 31))
    assert abs(traj.gamma_rate[-1] - alpha_numeric(params, 3.0).real) < 1e-12


def test_oracle_rejects_bad_grids():
    params = _params(KernelKind.EXPONENTIAL, 1.0, 0.0)
    with pytest.raises(DomainError):
        decoherence_numeric(params, [0.5, 1.0])        # must start at 0
    with pytest.raises(DomainError):
        decoherence_numeric(params, [0.0, 1.0, 1.0])   # strictly increasing


def test_delta_kernel_has_no_oracle():
    with pytest.raises(DeltaKernelNotPointwise):
        decoherence_numeric(_params(KernelKind.DELTA, 1.0, 0.0), [0.0, 1.0])


# ------------------------------------------------------------ closed forms

def test_markovian_is_linear():
    tau = default_tau_grid(10.0, 101)
    traj = decoherence_markovian(0.5, tau)
    assert np.allclose(traj.gamma, 0.5 * tau, rtol=0, atol=0)
    assert np.all(traj.phi == 0.0)
    assert np.all(traj.gamma_rate == 0.5)
    assert traj.source is TrajectorySource.CLOSED_FORM


def test_closed_exponential_zero_detuning_matches_oracle():
    # With no detuning the printed exponential formulas are complete.
    params = _params(KernelKind.EXPONENTIAL, 0.8, 0.0)
    tau = default_tau_grid(20.0, 201)
    dev = compare_trajectories(closed_form_trajectory(params, tau),
                               decoherence_numeric(params, tau), params)
    assert dev.within_tol
    assert dev.max_gamma_dev < 1e-9


def test_closed_modulated_matches_oracle():
    params = _params(KernelKind.MODULATED, 1.0, 5.0)
    tau = default_tau_grid(20.0, 401)
    dev = compare_trajectories(closed_form_trajectory(params, tau),
                               decoherence_numeric(params, tau), params)
    assert dev.within_tol
    assert dev.max_gamma_dev < 1e-8
    assert dev.max_phi_dev < 1e-8


def test_closed_exponential_detuned_deviates_in_gamma_only():
    """At finite detuning the closed exponential decay misses an oscillatory
    term; the comparison must flag it, locate it, and leave phi clean."""
    params = _params(KernelKind.EXPONENTIAL, 1.0, 1.0)
    tau = default_tau_grid(20.0, 401)
    dev = compare_trajectories(closed_form_trajectory(params, tau),
                               decoherence_numeric(params, tau), params)
    assert not dev.within_tol
    assert dev.max_gamma_dev > 0.05
    assert dev.max_phi_dev < 1e-8
    assert dev.tau_at_max_gamma > 0.0
    d = dev.as_dict()
    assert d["within_tol"] is False and d["kernel"] == "exponential"


def test_cosine_decomposition_spot_check():
    # modulated response = half-sum of two detuning-shifted exponential ones
    tau = default_tau_grid(15.0, 151)
    mod = decoherence_numeric(_params(KernelKind.MODULATED, 0.4, 2.0), tau)
    up = decoherence_numeric(_params(KernelKind.EXPONENTIAL, 0.4, 3.0), tau)
    dn = decoherence_numeric(_params(KernelKind.EXPONENTIAL, 0.4, 1.0), tau)
    assert np.max(np.abs(mod.gamma - 0.5 * (up.gamma + dn.gamma))) < 1e-10


def test_closed_exponential_rate_limit():
    # rate(tau -> inf) = Re[kb / (kb - i db)] = kb^2 / (kb^2 + db^2)
    kb, db = 0.6, 2.0
    params = _params(KernelKind.EXPONENTIAL, kb, db)
    traj = closed_form_trajectory(params, np.linspace(0.0, 60.0, 601))
    assert abs(traj.gamma_rate[-1] - kb * kb / (kb * kb + db * db)) < 1e-12


# ------------------------------------------------------------------ grids

def test_default_tau_grid_shape():
    tau = default_tau_grid()
    assert tau.size == 2001 and tau[0] == 0.0 and tau[-1] == 50.0


def test_recommended_spacing_tightens_with_oscillation():
    slow = recommended_spacing(_params(KernelKind.EXPONENTIAL, 0.1, 0.0))
    fast = recommended_spacing(_params(KernelKind.EXPONENTIAL, 0.1, 6.0))
    assert fast < slow <= 0.05


def test_dense_tau_grid_honours_both_constraints():
    params = _params(KernelKind.EXPONENTIAL, 0.1, 6.0)
    tau = dense_tau_grid(50.0, params, min_points=2001)
    assert tau.size >= 2001
    assert tau[0] == 0.0 and tau[-1] == 50.0
    assert np.max(np.diff(tau)) <= recommended_spacing(params) * (1 + 1e-12)


def test_trajectory_shape_validation():
    tau = np.linspace(0.0, 1.0, 5)
    with pytest.raises(DomainError):
        DecoherenceTrajectory(tau, np.zeros(4), np.zeros(5), np.zeros(5),
                              TrajectorySource.CLOSED_FORM)


@settings(max_examples=25, deadline=None)
@given(kb=st.floats(0.05, 3.0), db=st.floats(0.0, 6.0),
       kind=st.sampled_from([KernelKind.EXPONENTIAL, KernelKind.MODULATED]))
def test_decay_starts_from_zero(kb, db, kind):
    traj = decoherence_numeric(_params(kind, kb, db),
                               np.linspace(0.0, 2.0, 9))
    assert traj.gamma[0] == 0.0 and traj.phi[0] == 0.0
    assert traj.gamma_rate[0] == 0.0
    # gamma is a cumulative average of a positive-definite process early on
    assert traj.gamma[1] > 0.0
