"""Figure rendering from exported datasets.

Plots are drawn strictly from the files `export_dataset` wrote (never by
recomputing), so a rendered figure always reflects data on disk.
"""

from __future__ import annotations

import json
import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import NoDataError

_AXIS_LABELS = {
    "coherence": "coherence",
    "population": "population difference",
    "f_theta": "QFI (polar angle)",
    "f_nu": "QFI (azimuth)",
    "flow_theta": "QFI flow (polar angle)",
    "flow_nu": "QFI flow (azimuth)",
    "trace_distance": "trace distance",
    "sigma": "trace-distance slope",
    "gamma": "decay exponent",
    "phi": "phase",
    "gamma_rate": "decay rate",
}


def _load_manifest(data_dir: str) -> dict:
    path = os.path.join(data_dir, "manifest.json")
    if not os.path.exists(path):
        raise NoDataError(f"no manifest.json in {data_dir}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _read_series(path: str) -> dict[str, np.ndarray]:
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return {c: np.asarray(payload["data"][c], dtype=float)
                for c in payload["columns"]}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if body.size == 0:
        raise NoDataError(f"{path} has no data rows")
    return {name: body[:, i] for i, name in enumerate(header)}


def _render_timeseries(manifest: dict, data_dir: str, out_dir: str) -> list[str]:
    combos = manifest.get("combinations", [])
    if not combos:
        raise NoDataError("manifest lists no combinations")
    series = []
    for combo in combos:
        data = _read_series(os.path.join(data_dir, combo["file"]))
        if data["tau"].size == 0:
            raise NoDataError(f"{combo['file']} is empty")
        series.append((combo, data))

    written = []
    observable_cols = [c for c in manifest["columns"] if c != "tau"]
    for col in observable_cols:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for combo, data in series:
            label = (f"kbar={combo['kappa_bar']:g}, "
                     f"dbar={combo['delta_bar']:g}")
            ax.plot(data["tau"], data[col], label=label, lw=1.2)
        ax.set_xlabel("tau")
        ax.set_ylabel(_AXIS_LABELS.get(col, col))
        ax.legend(fontsize=7)
        fig.tight_layout()
        name = f"plot_{col}.png"
        fig.savefig(os.path.join(out_dir, name), dpi=150)
        plt.close(fig)
        written.append(name)
    return written


def _render_heatmap(manifest: dict, data_dir: str, out_dir: str) -> list[str]:
    kernel = manifest["config"]["kernel"]
    axes = manifest.get("axes")
    if not axes:
        raise NoDataError("heatmap manifest has no axes")
    kappa = np.asarray(axes["kappa_bars"], dtype=float)
    delta = np.asarray(axes["delta_bars"], dtype=float)

    csv_path = os.path.join(data_dir, f"heatmap_{kernel}.csv")
    json_path = os.path.join(data_dir, f"heatmap_{kernel}.json")
    if os.path.exists(csv_path):
        values = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    elif os.path.exists(json_path):
        with open(json_path, encoding="utf-8") as fh:
            values = np.asarray(json.load(fh)["n_values"], dtype=float)
    else:
        raise NoDataError(f"no heatmap table for kernel {kernel} in {data_dir}")
    if values.size == 0:
        raise NoDataError("heatmap table is empty")

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    masked = np.ma.masked_invalid(values)
    mesh = ax.pcolormesh(kappa, delta, masked.T, shading="nearest",
                         cmap="viridis")
    if kappa.min() > 0 and kappa.max() / kappa.min() >= 10:
        ax.set_xscale("log")
    ax.set_xlabel("kbar")
    ax.set_ylabel("dbar")
    fig.colorbar(mesh, ax=ax, label="backflow measure")
    fig.tight_layout()
    name = f"plot_heatmap_{kernel}.png"
    fig.savefig(os.path.join(out_dir, name), dpi=150)
    plt.close(fig)
    return [name]


def render_plots(data_dir: str, out_dir: str | None = None) -> list[str]:
    """Render figures for an exported dataset directory.

    Returns the written file names; raises NoDataError when the directory
    holds no plottable data.
    """
    manifest = _load_manifest(data_dir)
    out = out_dir if out_dir is not None else data_dir
    os.makedirs(out, exist_ok=True)
    if manifest.get("mode") == "heatmap":
        return _render_heatmap(manifest, data_dir, out)
    return _render_timeseries(manifest, data_dir, out)
