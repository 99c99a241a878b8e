import numpy as np
import pytest

from spinbath import (KernelKind, KernelSpec, ModelParams,
                      decoherence_numeric, default_tau_grid)


@pytest.fixture(scope="session")
def backflow_traj():
    """Exponential kernel deep in the backflow regime, coarse-ish grid."""
    params = ModelParams(KernelSpec(KernelKind.EXPONENTIAL, 0.01), 5.0)
    return decoherence_numeric(params, default_tau_grid(30.0, 1501))


@pytest.fixture(scope="session")
def plain_traj():
    """Exponential kernel, moderate detuning, no surprises."""
    params = ModelParams(KernelSpec(KernelKind.EXPONENTIAL, 0.5), 1.0)
    return decoherence_numeric(params, default_tau_grid(10.0, 401))


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
