"""Figure rendering from exported datasets (headless backend)."""

import pytest

from spinbath import (KernelKind, NoDataError, RunConfig, export_dataset,
                      render_plots, run_heatmap, run_timeseries)


def test_timeseries_figures(tmp_path):
    cfg = RunConfig(kernel=KernelKind.DELTA, kappa_bars=(0.3, 1.0),
                    delta_bars=(0.0,), tau_max=5.0, tau_points=21,
                    observables=("coherence", "population"),
                    out_dir=str(tmp_path))
    export_dataset(run_timeseries(cfg))
    written = render_plots(str(tmp_path))
    names = {p.rsplit("/", 1)[-1] for p in written}
    # one figure per data column, none for the tau axis itself
    assert any("coherence" in n for n in names)
    assert any("gamma" in n for n in names)
    assert all(n.endswith(".png") for n in names)


def test_heatmap_figure(tmp_path):
    cfg = RunConfig(kernel=KernelKind.EXPONENTIAL, kappa_bars=(0.3, 1.0),
                    delta_bars=(0.0, 1.0), tau_max=4.0, tau_points=9,
                    observables=("blp",), out_dir=str(tmp_path))
    export_dataset(run_heatmap(cfg))
    written = render_plots(str(tmp_path), out_dir=str(tmp_path / "figs"))
    assert len(written) == 1
    assert written[0].endswith(".png")
    assert (tmp_path / "figs").exists()


def test_missing_manifest_raises(tmp_path):
    with pytest.raises(NoDataError):
        render_plots(str(tmp_path))
