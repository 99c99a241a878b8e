"""Command-line front end: `spinbath timeseries` and `spinbath heatmap`.

Values resolve in precedence order: built-in defaults, then the --config
JSON file (keys mirror the long flag names with underscores), then explicit
flags.  Exit codes: 0 success, 1 configuration error, 2 numeric or I/O
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import (ConfigError, DegenerateDenominator, DomainError,
                     NoDataError, QuadratureDidNotConverge, SingularState)
from .harness import (OBSERVABLES, RunConfig, default_heatmap_delta,
                      default_heatmap_kappa, export_dataset, run_heatmap,
                      run_timeseries)
from .kernels import KernelKind
from .channel import SignConvention
from .plots import render_plots


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def parse_values(text: str) -> tuple[float, ...]:
    """Parse '0.1,0.5,1' lists or 'start:stop:count[:log]' ranges."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) == 4 and parts[3] == "log":
            spaced = np.geomspace
        elif len(parts) == 3:
            spaced = np.linspace
        else:
            raise ConfigError(f"bad range {text!r}; want start:stop:count[:log]")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad range {text!r}: {exc}") from None
        if count < 1:
            raise ConfigError("range count must be >= 1")
        return tuple(float(v) for v in spaced(start, stop, count))
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value list {text!r}: {exc}") from None
    if not values:
        raise ConfigError("empty value list")
    return values


def _parse_observables(text) -> tuple[str, ...]:
    if isinstance(text, (list, tuple)):
        names = tuple(str(v) for v in text)
    else:
        names = tuple(v.strip() for v in str(text).split(",") if v.strip())
    return names


def _build_parser() -> _Parser:
    parser = _Parser(prog="spinbath",
                     description="Ensemble-averaged qubit dynamics in a "
                                 "randomly coupled spin bath")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("timeseries", "observables on a tau grid per parameter combination"),
            ("heatmap", "backflow measure over the (kbar, dbar) plane")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--kernel",
                         choices=[k.value for k in KernelKind])
        cmd.add_argument("--kbar", metavar="LIST|RANGE",
                         help="comma list or start:stop:count[:log]")
        cmd.add_argument("--dbar", metavar="LIST|RANGE",
                         help="comma list or start:stop:count[:log]")
        cmd.add_argument("--tau-max", type=float, dest="tau_max")
        cmd.add_argument("--tau-points", type=int, dest="tau_points")
        cmd.add_argument("--theta", type=float)
        cmd.add_argument("--nu", type=float)
        cmd.add_argument("--observables", metavar="LIST",
                         help=f"subset of {','.join(OBSERVABLES)} "
                              "(timeseries only; heatmap always computes blp)")
        cmd.add_argument("--sign-convention", dest="sign_convention",
                         choices=[c.value for c in SignConvention])
        cmd.add_argument("--closed-form", dest="closed_form",
                         action="store_true", default=None)
        cmd.add_argument("--out", metavar="DIR")
        cmd.add_argument("--format", dest="output_format",
                         choices=["csv", "json"])
        cmd.add_argument("--plot", action="store_true", default=None)
        cmd.add_argument("--jobs", type=int)
        cmd.add_argument("--config", metavar="FILE",
                         help="JSON file whose keys mirror the flags; "
                              "explicit flags win")
    return parser


_CONFIG_KEYS = {"kernel", "kbar", "dbar", "tau_max", "tau_points", "theta",
                "nu", "observables", "sign_convention", "closed_form", "out",
                "format", "plot", "jobs"}


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(payload) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config file keys: {sorted(unknown)}")
    return payload


def _coerce_values(raw) -> tuple[float, ...]:
    if isinstance(raw, str):
        return parse_values(raw)
    if isinstance(raw, (list, tuple)):
        return tuple(float(v) for v in raw)
    return (float(raw),)


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and flags into a validated RunConfig."""
    file_values = _load_config_file(args.config) if args.config else {}

    def pick(flag_name: str, file_key: str, fallback):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return flag
        if file_key in file_values:
            return file_values[file_key]
        return fallback

    heatmap = args.command == "heatmap"
    kernel = KernelKind(pick("kernel", "kernel", KernelKind.EXPONENTIAL.value))
    kbar = pick("kbar", "kbar",
                default_heatmap_kappa() if heatmap else (0.01, 0.1, 1.0))
    dbar = pick("dbar", "dbar",
                default_heatmap_delta() if heatmap else (0.0,))
    observables = pick("observables", "observables",
                       ("blp",) if heatmap else ("coherence",))
    try:
        cfg = RunConfig(
            kernel=kernel,
            kappa_bars=_coerce_values(kbar),
            delta_bars=_coerce_values(dbar),
            tau_max=float(pick("tau_max", "tau_max", 50.0)),
            tau_points=int(pick("tau_points", "tau_points", 2001)),
            theta=float(pick("theta", "theta", 0.5 * np.pi)),
            nu=float(pick("nu", "nu", 0.0)),
            observables=_parse_observables(observables),
            sign_convention=SignConvention(
                pick("sign_convention", "sign_convention",
                     SignConvention.DOWN_MINUS_UP.value)),
            use_closed_form=bool(pick("closed_form", "closed_form", False)),
            output_format=str(pick("output_format", "format", "csv")),
            out_dir=str(pick("out", "out", "out")),
            make_plots=bool(pick("plot", "plot", False)),
            jobs=int(pick("jobs", "jobs", 1)),
        )
        return cfg.validate()
    except (ValueError, TypeError) as exc:
        # covers enum coercion, float(), and RunConfig/ConfigError validation
        raise ConfigError(str(exc)) from None


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = build_run_config(args)
    except ConfigError as exc:
        print(f"spinbath: configuration error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "heatmap":
            result = run_heatmap(cfg)
        else:
            result = run_timeseries(cfg)
        export_dataset(result)
        if cfg.make_plots:
            render_plots(cfg.out_dir)
    except (QuadratureDidNotConverge, DegenerateDenominator, SingularState,
            DomainError, NoDataError, FloatingPointError, OSError) as exc:
        print(f"spinbath: run failed: {exc}", file=sys.stderr)
        return 2

    failures = getattr(getattr(result, "grid", None), "failures", [])
    if failures:
        print(f"spinbath: {len(failures)} cell(s) failed; see manifest.json",
              file=sys.stderr)
        return 2
    print(f"spinbath: wrote {cfg.out_dir}/manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
