"""Reduced qubit dynamics in a randomly coupled spin bath.

Decoherence functions for delta/exponential/modulated memory kernels, the
induced damping channel, QFI and trace-distance non-Markovianity witnesses,
and sweep/plot drivers with a CLI front end.
"""

__version__ = "0.1.0"

from .channel import (ChannelValidationReport, DensityMatrix, KrausPair,
                      PureStatePrep, SignConvention, apply_kraus,
                      coherence_l1, coherence_series, evolve_series,
                      evolve_state, initial_state, kraus_pair,
                      population_difference, population_series,
                      validate_channel)
from .errors import (ConfigError, DegenerateDenominator,
                     DeltaKernelNotPointwise, DomainError, NoDataError,
                     NotCompletelyPositive, QuadratureDidNotConverge,
                     SingularState)
from .kernels import (DecoherenceTrajectory, KernelKind, KernelSpec,
                      ModelParams, QuadratureConfig, TrajectoryDeviation,
                      TrajectorySource, alpha_numeric, closed_form_trajectory,
                      compare_trajectories, correlation_value,
                      decoherence_closed_exponential,
                      decoherence_closed_modulated, decoherence_markovian,
                      decoherence_numeric, default_tau_grid, dense_tau_grid,
                      recommended_spacing)
from .witnesses import (BlochVector, BlpConfig, BlpResult, QfiRecord,
                        QfiRouteReport, SigmaSeries, backflow_intervals,
                        blp_measure, bloch_derivative_nu,
                        bloch_derivative_theta, bloch_trajectory,
                        compare_qfi_routes, pair_backflow_value, qfi_bloch,
                        qfi_flow, qfi_series, qfi_theta_nu, sigma_series,
                        trace_distance, trace_distance_series)
from .harness import (HeatmapResult, RunConfig, SweepGrid, TimeseriesResult,
                      default_heatmap_delta, default_heatmap_kappa,
                      export_dataset, run_heatmap, run_timeseries)
from .plots import render_plots

__all__ = [name for name in dir() if not name.startswith("_")]
