"""Sweep drivers and dataset export.

`run_timeseries` evaluates requested observables on a tau grid for every
(kappa_bar, delta_bar) combination; `run_heatmap` evaluates the backflow
measure over a parameter plane.  Both are deterministic: combinations/cells
are laid out row-major with kappa_bar outer, work is farmed out with an
order-preserving map, and exported numbers are serialized with 17 significant
digits, so identical configs give byte-identical files at any parallelism
degree.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from . import __version__
from .channel import (PureStatePrep, SignConvention, coherence_series,
                      population_series)
from .errors import ConfigError
from .kernels import (DEFAULT_QUADRATURE, DecoherenceTrajectory, KernelKind,
                      KernelSpec, ModelParams, QuadratureConfig,
                      closed_form_trajectory, compare_trajectories,
                      decoherence_numeric, default_tau_grid, dense_tau_grid)
from .witnesses import (BlpConfig, BlpResult, blp_measure, compare_qfi_routes,
                        qfi_series, sigma_series)

SCHEMA_VERSION = 1
CLOSED_FORM_GATE = 1e-6

OBSERVABLES = ("coherence", "population", "qfi_flow", "trace_distance", "blp")
# Canonical column order for exported tables.
_COLUMN_ORDER = ("tau", "gamma", "phi", "gamma_rate", "coherence",
                 "population", "f_theta", "f_nu", "flow_theta", "flow_nu",
                 "trace_distance", "sigma")
_OBSERVABLE_COLUMNS = {
    "coherence": ("coherence",),
    "population": ("population",),
    "qfi_flow": ("f_theta", "f_nu", "flow_theta", "flow_nu"),
    "trace_distance": ("trace_distance", "sigma"),
    "blp": (),
}


def default_heatmap_kappa(n: int = 50) -> tuple[float, ...]:
    return tuple(np.geomspace(0.01, 1.0, n))


def default_heatmap_delta(n: int = 50) -> tuple[float, ...]:
    return tuple(np.linspace(0.0, 6.0, n))


@dataclass(frozen=True)
class RunConfig:
    """Everything a sweep needs; mirrors the CLI flags one-to-one."""

    kernel: KernelKind = KernelKind.EXPONENTIAL
    kappa_bars: tuple[float, ...] = (0.01, 0.1, 1.0)
    delta_bars: tuple[float, ...] = (0.0,)
    tau_max: float = 50.0
    tau_points: int = 2001
    theta: float = 0.5 * math.pi
    nu: float = 0.0
    observables: tuple[str, ...] = ("coherence",)
    sign_convention: SignConvention = SignConvention.DOWN_MINUS_UP
    use_closed_form: bool = False
    output_format: str = "csv"
    out_dir: str = "out"
    make_plots: bool = False
    jobs: int = 1
    blp: BlpConfig = field(default_factory=BlpConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def validate(self) -> "RunConfig":
        if not isinstance(self.kernel, KernelKind):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if not self.kappa_bars or any(
                not np.isfinite(k) or k <= 0 for k in self.kappa_bars):
            raise ConfigError("kappa_bar values must be finite and > 0")
        if not self.delta_bars or any(not np.isfinite(d) for d in self.delta_bars):
            raise ConfigError("delta_bar values must be finite")
        if not np.isfinite(self.tau_max) or self.tau_max <= 0:
            raise ConfigError("tau_max must be finite and > 0")
        if self.tau_points < 2:
            raise ConfigError("tau_points must be >= 2")
        if not (0.0 <= self.theta <= math.pi):
            raise ConfigError("theta must lie in [0, pi]")
        if not (0.0 <= self.nu < 2.0 * math.pi):
            raise ConfigError("nu must lie in [0, 2*pi)")
        unknown = set(self.observables) - set(OBSERVABLES)
        if unknown:
            raise ConfigError(f"unknown observables: {sorted(unknown)}")
        if len(set(self.observables)) != len(self.observables):
            raise ConfigError("duplicate observables requested")
        needs_slope = {"trace_distance", "blp"} & set(self.observables)
        if needs_slope and self.tau_points < 3:
            raise ConfigError(
                f"{sorted(needs_slope)} need tau_points >= 3")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self

    def prep(self) -> PureStatePrep:
        return PureStatePrep(self.theta, self.nu)

    def columns(self) -> list[str]:
        requested = set()
        for obs in self.observables:
            requested.update(_OBSERVABLE_COLUMNS[obs])
        base = ["tau", "gamma", "phi", "gamma_rate"]
        return base + [c for c in _COLUMN_ORDER[4:] if c in requested]

    def public_dict(self) -> dict:
        """Config echo for manifests: execution details (jobs, paths) excluded
        so outputs stay byte-identical across parallelism degrees."""
        return {
            "kernel": self.kernel.value,
            "kappa_bars": list(self.kappa_bars),
            "delta_bars": list(self.delta_bars),
            "tau_max": self.tau_max,
            "tau_points": self.tau_points,
            "theta": self.theta,
            "nu": self.nu,
            "observables": list(self.observables),
            "sign_convention": self.sign_convention.value,
            "use_closed_form": self.use_closed_form,
            "output_format": self.output_format,
            "blp": {
                "pair_grid_theta": self.blp.pair_grid_theta,
                "pair_grid_nu": self.blp.pair_grid_nu,
                "refine_iterations": self.blp.refine_iterations,
                "include_canonical_pair": self.blp.include_canonical_pair,
            },
            "quadrature": {
                "abs_tol": self.quadrature.abs_tol,
                "rel_tol": self.quadrature.rel_tol,
                "max_subdivisions": self.quadrature.max_subdivisions,
            },
        }


def _antipode(prep: PureStatePrep) -> PureStatePrep:
    return PureStatePrep(math.pi - prep.theta,
                         math.fmod(prep.nu + math.pi, 2.0 * math.pi))


def _trajectory(cfg: RunConfig, params: ModelParams,
                tau_grid: np.ndarray) -> DecoherenceTrajectory:
    if cfg.use_closed_form:
        return closed_form_trajectory(params, tau_grid)
    if params.kernel.kind is KernelKind.DELTA:
        return closed_form_trajectory(params, tau_grid)
    return decoherence_numeric(params, tau_grid, cfg.quadrature)


@dataclass
class CombinationResult:
    kappa_bar: float
    delta_bar: float
    columns: dict[str, np.ndarray]
    blp: BlpResult | None = None
    deviation: dict | None = None
    qfi_routes: dict | None = None


def _run_combination(cfg: RunConfig, kappa_bar: float,
                     delta_bar: float) -> CombinationResult:
    params = ModelParams(KernelSpec(cfg.kernel, kappa_bar), delta_bar)
    tau = default_tau_grid(cfg.tau_max, cfg.tau_points)
    traj = _trajectory(cfg, params, tau)

    cols: dict[str, np.ndarray] = {
        "tau": traj.tau, "gamma": traj.gamma, "phi": traj.phi,
        "gamma_rate": traj.gamma_rate,
    }
    prep = cfg.prep()
    if "coherence" in cfg.observables:
        cols["coherence"] = coherence_series(prep, traj.gamma)
    if "population" in cfg.observables:
        cols["population"] = population_series(prep, traj.gamma,
                                               cfg.sign_convention)
    out = CombinationResult(kappa_bar, delta_bar, cols)
    if "qfi_flow" in cfg.observables:
        rec = qfi_series(cfg.theta, traj)
        cols.update(f_theta=rec.f_theta, f_nu=rec.f_nu,
                    flow_theta=rec.flow_theta, flow_nu=rec.flow_nu)
        out.qfi_routes = compare_qfi_routes(cfg.theta, cfg.nu, traj).as_dict()
    if "trace_distance" in cfg.observables:
        series = sigma_series(prep, _antipode(prep), traj)
        cols.update(trace_distance=series.trace_distance, sigma=series.sigma)
    if "blp" in cfg.observables:
        out.blp = blp_measure(traj, cfg.blp)
    if cfg.use_closed_form and cfg.kernel is not KernelKind.DELTA:
        oracle = decoherence_numeric(params, tau, cfg.quadrature)
        out.deviation = compare_trajectories(
            traj, oracle, params, CLOSED_FORM_GATE).as_dict()
    return out


@dataclass
class TimeseriesResult:
    config: RunConfig
    combinations: list[CombinationResult]

    def manifest(self) -> dict:
        entries, deviations = [], []
        for combo in self.combinations:
            entry = {
                "kappa_bar": combo.kappa_bar,
                "delta_bar": combo.delta_bar,
                "file": _series_filename(self.config, combo),
                "n_rows": int(combo.columns["tau"].size),
            }
            if combo.blp is not None:
                entry["blp"] = combo.blp.as_dict()
            if combo.qfi_routes is not None:
                entry["qfi_route_report"] = combo.qfi_routes
            entries.append(entry)
            if combo.deviation is not None:
                deviations.append(combo.deviation)
        manifest = _manifest_skeleton(self.config, "timeseries")
        manifest["columns"] = self.config.columns()
        manifest["combinations"] = entries
        if self.config.use_closed_form:
            manifest["discrepancy_reports"] = deviations
        return manifest


def run_timeseries(config: RunConfig) -> TimeseriesResult:
    """Observable tables for every (kappa_bar, delta_bar) combination."""
    cfg = config.validate()
    combos = list(product(cfg.kappa_bars, cfg.delta_bars))
    if cfg.jobs == 1 or len(combos) == 1:
        results = [_run_combination(cfg, kb, db) for kb, db in combos]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_combination, [cfg] * len(combos),
                                    [kb for kb, _ in combos],
                                    [db for _, db in combos]))
    return TimeseriesResult(cfg, results)


@dataclass
class SweepGrid:
    kappa_bars: np.ndarray
    delta_bars: np.ndarray
    n_values: np.ndarray
    cells: list[dict]
    failures: list[dict]


def _heatmap_cell(cfg: RunConfig, kappa_bar: float, delta_bar: float) -> dict:
    params = ModelParams(KernelSpec(cfg.kernel, kappa_bar), delta_bar)
    tau = dense_tau_grid(cfg.tau_max, params, min_points=cfg.tau_points)
    cell = {"kappa_bar": kappa_bar, "delta_bar": delta_bar}
    try:
        traj = _trajectory(cfg, params, tau)
        result = blp_measure(traj, cfg.blp)
    except Exception as exc:  # recorded per cell, run keeps going
        cell.update(n_value=math.nan, error=f"{type(exc).__name__}: {exc}")
        return cell
    cell.update(result.as_dict())
    if cfg.use_closed_form and cfg.kernel is not KernelKind.DELTA:
        oracle = decoherence_numeric(params, tau, cfg.quadrature)
        cell["discrepancy"] = compare_trajectories(
            traj, oracle, params, CLOSED_FORM_GATE).as_dict()
    return cell


@dataclass
class HeatmapResult:
    config: RunConfig
    grid: SweepGrid

    def manifest(self) -> dict:
        manifest = _manifest_skeleton(self.config, "heatmap")
        manifest["axes"] = {
            "kappa_bars": [float(k) for k in self.grid.kappa_bars],
            "delta_bars": [float(d) for d in self.grid.delta_bars],
        }
        manifest["layout"] = "rows indexed by kappa_bar, columns by delta_bar"
        manifest["cells"] = self.grid.cells
        manifest["failures"] = self.grid.failures
        if self.config.use_closed_form:
            manifest["discrepancy_reports"] = [
                c["discrepancy"] for c in self.grid.cells if "discrepancy" in c]
        return manifest


def run_heatmap(config: RunConfig) -> HeatmapResult:
    """Backflow measure over the (kappa_bar, delta_bar) plane.

    Cells are computed independently (parallel when jobs > 1), collected in
    row-major order with kappa_bar outer; per-cell failures are recorded in
    the result instead of aborting the sweep.
    """
    cfg = config.validate()
    if cfg.tau_points < 3:
        raise ConfigError("heatmap needs tau_points >= 3")
    kappas = np.asarray(cfg.kappa_bars, dtype=float)
    deltas = np.asarray(cfg.delta_bars, dtype=float)
    pairs = list(product(kappas, deltas))
    if cfg.jobs == 1:
        cells = [_heatmap_cell(cfg, kb, db) for kb, db in pairs]
    else:
        chunk = max(1, len(pairs) // (cfg.jobs * 8))
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            cells = list(pool.map(_heatmap_cell, [cfg] * len(pairs),
                                  [kb for kb, _ in pairs],
                                  [db for _, db in pairs], chunksize=chunk))
    n_values = np.array([c["n_value"] for c in cells]).reshape(
        kappas.size, deltas.size)
    failures = [
        {"row": i // deltas.size, "col": i % deltas.size, "error": c["error"]}
        for i, c in enumerate(cells) if "error" in c]
    grid = SweepGrid(kappas, deltas, n_values, cells, failures)
    return HeatmapResult(cfg, grid)


# ---------------------------------------------------------------------------
# Export


def _format_number(x: float) -> str:
    return format(float(x), ".17g")


def _compact_number(x: float) -> str:
    return format(float(x), ".10g").replace("-", "m")


def _series_filename(cfg: RunConfig, combo: CombinationResult) -> str:
    ext = "csv" if cfg.output_format == "csv" else "json"
    return (f"timeseries_{cfg.kernel.value}"
            f"_kbar{_compact_number(combo.kappa_bar)}"
            f"_dbar{_compact_number(combo.delta_bar)}.{ext}")


def _manifest_skeleton(cfg: RunConfig, mode: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "spinbath", "version": __version__},
        "mode": mode,
        "config": cfg.public_dict(),
        "tolerances": {
            "quadrature_abs_tol": cfg.quadrature.abs_tol,
            "quadrature_rel_tol": cfg.quadrature.rel_tol,
            "closed_form_gate": CLOSED_FORM_GATE,
        },
    }


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _series_table(columns: list[str], data: dict[str, np.ndarray],
                  fmt: str) -> str:
    if fmt == "csv":
        lines = [",".join(columns)]
        stacked = [np.asarray(data[c], dtype=float) for c in columns]
        for row in zip(*stacked):
            lines.append(",".join(_format_number(v) for v in row))
        return "\n".join(lines) + "\n"
    payload = {"columns": columns,
               "data": {c: [float(v) for v in data[c]] for c in columns}}
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def export_dataset(result: TimeseriesResult | HeatmapResult,
                   out_dir: str | None = None) -> dict:
    """Write tables plus `manifest.json`; returns the manifest dict.

    CSV numbers carry 17 significant digits and JSON uses shortest
    round-trip floats, so re-parsing reproduces the computed values bit for
    bit.
    """
    cfg = result.config
    out = out_dir if out_dir is not None else cfg.out_dir
    os.makedirs(out, exist_ok=True)
    manifest = result.manifest()
    files: list[str] = []

    if isinstance(result, TimeseriesResult):
        columns = cfg.columns()
        for combo in result.combinations:
            name = _series_filename(cfg, combo)
            _write_text(os.path.join(out, name),
                        _series_table(columns, combo.columns,
                                      cfg.output_format))
            files.append(name)
    else:
        grid = result.grid
        if cfg.output_format == "csv":
            name = f"heatmap_{cfg.kernel.value}.csv"
            rows = [",".join(_format_number(v) for v in row)
                    for row in grid.n_values]
            _write_text(os.path.join(out, name), "\n".join(rows) + "\n")
            for axis, values in (("kappa", grid.kappa_bars),
                                 ("delta", grid.delta_bars)):
                axis_name = f"heatmap_{cfg.kernel.value}_{axis}_axis.csv"
                _write_text(os.path.join(out, axis_name),
                            "\n".join(_format_number(v) for v in values) + "\n")
                files.append(axis_name)
            files.insert(0, name)
        else:
            name = f"heatmap_{cfg.kernel.value}.json"
            payload = {
                "kappa_bars": [float(v) for v in grid.kappa_bars],
                "delta_bars": [float(v) for v in grid.delta_bars],
                "n_values": [[float(v) for v in row] for row in grid.n_values],
            }
            _write_text(os.path.join(out, name),
                        json.dumps(payload, indent=1, sort_keys=True) + "\n")
            files.append(name)

    manifest["files"] = files
    _write_text(os.path.join(out, "manifest.json"),
                json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest
