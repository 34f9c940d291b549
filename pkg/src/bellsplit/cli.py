"""Command-line front end.

Subcommands:

    bellsplit run <config.toml> [--out DIR]
    bellsplit validate <config.toml>
    bellsplit presets list

Exit codes: 0 success, 2 config parse/validation error, 3 numerical
failure, 4 I/O failure.  Errors are emitted to stderr as one JSON object.
The BELLSPLIT_WORKERS environment variable caps the number of worker
threads used to evaluate scan points (default 1); outputs are byte-wise
independent of the parallelism degree.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import birefringence as bire
from . import interference as engine
from .config import ExperimentConfig, parse_config, validate
from .elements import CouplerSpec
from .errors import ConvergenceError, FitError, ValidationError
from .source import PRESET_DESCRIPTIONS, SourcePreset, prepare
from .tomography import records_to_csv, singlet_filter_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _workers() -> int:
    raw = os.environ.get("BELLSPLIT_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _source_preset(cfg: ExperimentConfig) -> SourcePreset:
    src = cfg.source
    amplitudes = src.get("amplitudes")
    if amplitudes is not None:
        amplitudes = tuple(complex(a[0], a[1]) for a in amplitudes)
    return SourcePreset(
        base_state=src.get("preset", "psi_plus"),
        mu=float(src.get("mu", 1.0)),
        waveplate_error=float(src.get("waveplate_error", 0.0)),
        amplitudes=amplitudes,
    )


def _coupler(cfg: ExperimentConfig) -> CouplerSpec:
    return CouplerSpec(float(cfg.coupler["r_h"]), float(cfg.coupler["r_v"]))


def _attach_fit(result: engine.ScanResult, model: str) -> None:
    n0, v, stderr = engine.fit_visibility(result, model)
    result.fit = {"model": model, "n0": n0, "v": v, "stderr": stderr}


def run_experiment(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Execute a parsed config; returns the written artifact paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = _workers()
    written: list[Path] = []

    if cfg.kind in ("hom_scan", "hwp_fringe", "qwp_fringe"):
        coupler = _coupler(cfg)
        preset = _source_preset(cfg)
        grid = cfg.grid()
        if cfg.kind == "hom_scan":
            pair = prepare(preset, cfg.waveplate_chain())
            delay = engine.DelayModel(float(cfg.delay["coherence_length_um"]))
            result = engine.hom_scan(pair, coupler, delay, grid, max_workers=workers)
        elif cfg.kind == "hwp_fringe":
            result = engine.hwp_fringe(coupler, grid, mu=preset.mu, max_workers=workers)
        else:
            result = engine.qwp_fringe(coupler, grid, mu=preset.mu, max_workers=workers)
        _attach_fit(result, cfg.fit_model())
        csv_path = out_dir / f"{cfg.name}.csv"
        json_path = out_dir / f"{cfg.name}.json"
        result.to_csv(csv_path)
        result.to_json(json_path)
        written += [csv_path, json_path]

    elif cfg.kind == "singlet_filter":
        coupler = _coupler(cfg)
        preset = _source_preset(cfg)
        pair = prepare(preset, cfg.waveplate_chain())
        tomo = cfg.tomography
        result = singlet_filter_experiment(
            pair.state,
            coupler,
            mu=preset.mu,
            counts_per_setting=float(tomo.get("counts_per_setting", 50_000)),
            noise=tomo.get("noise", "poisson"),
            seed=tomo.get("seed", 7),
            bootstrap_resamples=int(tomo.get("bootstrap_resamples", 100)),
            bootstrap_seed=tomo.get("bootstrap_seed"),
        )
        counts_path = out_dir / f"{cfg.name}_counts.csv"
        records_to_csv(result.records, counts_path)
        json_path = out_dir / f"{cfg.name}_tomography.json"
        result.to_json(json_path)
        written += [counts_path, json_path]

    elif cfg.kind == "birefringence_fit":
        b = cfg.birefringence
        lengths = [float(x) for x in b.get("lengths_mm", [])]
        fits = []
        for length, path in zip(lengths, cfg.data_files()):
            table = bire.measurements_from_csv(path)
            fits.append((length, bire.fit_retarder(table)))
        series = [(length, fit.params.delta) for length, fit in fits]
        result = bire.fit_birefringence(
            series,
            wavelength_nm=float(b["wavelength_nm"]),
            max_order=int(b.get("max_order", 64)),
        )
        report_path = out_dir / f"{cfg.name}_report.json"
        bire.retarder_report_json(fits, result, report_path)
        written.append(report_path)

    else:  # pragma: no cover - kinds are validated upstream
        raise ValidationError(f"unknown experiment kind {cfg.kind!r}")

    return written


def _error_record(exc: Exception, exit_code: int) -> str:
    return json.dumps(
        {
            "error": {
                "type": type(exc).__name__,
                "message": str(exc),
                "exit_code": exit_code,
            }
        },
        sort_keys=True,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bellsplit",
        description="Simulate two-photon interference experiments on a "
        "polarization-dependent integrated beam splitter.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=Path("out"), help="output directory")

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config", type=Path)

    p_presets = sub.add_parser("presets", help="source preset utilities")
    p_presets.add_argument("action", choices=["list"])

    args = parser.parse_args(argv)

    if args.command == "presets":
        for name in sorted(PRESET_DESCRIPTIONS):
            print(f"{name:14s} {PRESET_DESCRIPTIONS[name]}")
        return EXIT_OK

    if args.command == "validate":
        try:
            cfg = parse_config(args.config)
        except ValidationError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_CONFIG
        problems = validate(cfg)
        for problem in problems:
            print(problem)
        if not problems:
            print("ok")
        return EXIT_OK if not problems else EXIT_CONFIG

    # run
    try:
        cfg = parse_config(args.config)
    except ValidationError as exc:
        print(_error_record(exc, EXIT_CONFIG), file=sys.stderr)
        return EXIT_CONFIG
    try:
        written = run_experiment(cfg, args.out)
    except (ValidationError, FitError, ConvergenceError, FloatingPointError) as exc:
        print(_error_record(exc, EXIT_NUMERICAL), file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(_error_record(exc, EXIT_IO), file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
