"""Experiment configuration files (TOML) and their validation.

A config describes one experiment run:

    [experiment]
    kind = "hom_scan"      # hom_scan | hwp_fringe | qwp_fringe |
    name = "hom_dip_hh"    #   singlet_filter | birefringence_fit

    [coupler]
    r_h = 0.492
    r_v = 0.581

    [source]
    preset = "hh"          # see bellsplit.source.PRESET_DESCRIPTIONS
    mu = 1.0
    waveplate_error = 0.0

    [[waveplates]]         # optional element chain applied to the source
    kind = "half"          # state (hom_scan / singlet_filter kinds only;
    mode = "A"             # the fringe kinds scan their own plate)
    theta = 0.0

    [scan]                 # scans only: either start/stop/num or values
    start = -120.0
    stop = 120.0
    num = 121

    [delay]                # hom_scan only
    coherence_length_um = 34.464

    [fit]                  # optional; default model depends on the kind
    model = "dip"

    [tomography]           # singlet_filter only
    counts_per_setting = 50000
    noise = "poisson"
    seed = 7
    bootstrap_resamples = 100
    bootstrap_seed = 8

    [birefringence]        # birefringence_fit only
    wavelength_nm = 806.0
    lengths_mm = [6.0, 12.0, 18.0, 24.0]
    files = ["data/bire_L06mm.csv", ...]   # relative to the config file

``validate`` returns a list of human-readable diagnostics instead of
raising, so configs can be linted without running anything.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError
from .source import PRESET_DESCRIPTIONS

EXPERIMENT_KINDS = (
    "hom_scan",
    "hwp_fringe",
    "qwp_fringe",
    "singlet_filter",
    "birefringence_fit",
)

_SCAN_KINDS = ("hom_scan", "hwp_fringe", "qwp_fringe")
_DEFAULT_FIT_MODEL = {"hom_scan": "dip", "hwp_fringe": "cos4", "qwp_fringe": "cos4_power"}


@dataclass
class ExperimentConfig:
    kind: str
    name: str
    coupler: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)
    waveplates: list = field(default_factory=list)
    scan: dict = field(default_factory=dict)
    delay: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    tomography: dict = field(default_factory=dict)
    birefringence: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path)

    def waveplate_chain(self) -> list[tuple[str, str, float]]:
        return [(w["kind"], w["mode"], float(w.get("theta", 0.0))) for w in self.waveplates]

    def grid(self) -> np.ndarray:
        if "values" in self.scan:
            return np.asarray(self.scan["values"], dtype=float)
        return np.linspace(
            float(self.scan["start"]), float(self.scan["stop"]), int(self.scan["num"])
        )

    def fit_model(self) -> str:
        return self.fit.get("model", _DEFAULT_FIT_MODEL.get(self.kind, "dip"))

    def data_files(self) -> list[Path]:
        return [self.base_dir / f for f in self.birefringence.get("files", [])]


def parse_config(path) -> ExperimentConfig:
    """Parse a TOML experiment config; raises ValidationError on bad input."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid TOML: {exc}") from exc

    experiment = raw.get("experiment", {})
    kind = experiment.get("kind")
    if kind is None:
        raise ValidationError("missing [experiment] kind")
    cfg = ExperimentConfig(
        kind=kind,
        name=experiment.get("name", path.stem),
        coupler=raw.get("coupler", {}),
        source=raw.get("source", {}),
        waveplates=raw.get("waveplates", []),
        scan=raw.get("scan", {}),
        delay=raw.get("delay", {}),
        fit=raw.get("fit", {}),
        tomography=raw.get("tomography", {}),
        birefringence=raw.get("birefringence", {}),
        base_dir=path.parent,
    )
    problems = validate(cfg)
    if problems:
        raise ValidationError("invalid config: " + "; ".join(problems))
    return cfg


def validate(cfg: ExperimentConfig) -> list[str]:
    """Schema and invariant checks without execution; empty list means valid."""
    problems: list[str] = []
    if cfg.kind not in EXPERIMENT_KINDS:
        problems.append(
            f"experiment.kind {cfg.kind!r} not one of {list(EXPERIMENT_KINDS)}"
        )
        return problems

    needs_coupler = cfg.kind != "birefringence_fit"
    if needs_coupler:
        for key in ("r_h", "r_v"):
            if key not in cfg.coupler:
                problems.append(f"coupler.{key} is required for {cfg.kind}")
            else:
                value = cfg.coupler[key]
                if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                    problems.append(f"coupler.{key}={value!r} must lie in [0, 1]")

        mu = cfg.source.get("mu", 1.0)
        if not isinstance(mu, (int, float)) or not 0.0 <= mu <= 1.0:
            problems.append(f"source.mu={mu!r} must lie in [0, 1]")
        preset = cfg.source.get("preset", "psi_plus")
        if preset not in PRESET_DESCRIPTIONS:
            problems.append(
                f"source.preset {preset!r} not one of {sorted(PRESET_DESCRIPTIONS)}"
            )
        elif preset == "custom" and "amplitudes" not in cfg.source:
            problems.append("source.amplitudes is required for the custom preset")

        for i, plate in enumerate(cfg.waveplates):
            if plate.get("kind") not in ("half", "quarter"):
                problems.append(f"waveplates[{i}].kind must be 'half' or 'quarter'")
            if str(plate.get("mode", "")).upper() not in ("A", "B"):
                problems.append(f"waveplates[{i}].mode must be 'A' or 'B'")
        if cfg.waveplates and cfg.kind in ("hwp_fringe", "qwp_fringe"):
            problems.append(f"waveplates are not supported for {cfg.kind}: the scanned plate is built in")

    if cfg.kind in _SCAN_KINDS:
        if "values" in cfg.scan:
            if len(cfg.scan["values"]) == 0:
                problems.append("scan.values must be non-empty")
        elif not {"start", "stop", "num"} <= set(cfg.scan):
            problems.append("scan grid missing: provide scan.values or scan.start/stop/num")
        elif int(cfg.scan["num"]) < 1:
            problems.append(f"scan.num={cfg.scan['num']!r} must be >= 1")
        model = cfg.fit.get("model")
        if model is not None and model not in ("dip", "cos4", "cos4_power"):
            problems.append(f"fit.model {model!r} not one of ['dip', 'cos4', 'cos4_power']")

    if cfg.kind == "hom_scan":
        lc = cfg.delay.get("coherence_length_um")
        if lc is None:
            problems.append("delay.coherence_length_um is required for hom_scan")
        elif not isinstance(lc, (int, float)) or lc <= 0:
            problems.append(f"delay.coherence_length_um={lc!r} must be > 0")

    if cfg.kind == "singlet_filter":
        counts = cfg.tomography.get("counts_per_setting", 50_000)
        if not isinstance(counts, (int, float)) or counts <= 0:
            problems.append(f"tomography.counts_per_setting={counts!r} must be > 0")
        noise = cfg.tomography.get("noise", "poisson")
        if noise not in ("none", "poisson"):
            problems.append(f"tomography.noise {noise!r} not one of ['none', 'poisson']")
        resamples = cfg.tomography.get("bootstrap_resamples", 100)
        if resamples and resamples < 100:
            problems.append(
                f"tomography.bootstrap_resamples={resamples!r} must be 0 or >= 100"
            )

    if cfg.kind == "birefringence_fit":
        wavelength = cfg.birefringence.get("wavelength_nm")
        if wavelength is None or not isinstance(wavelength, (int, float)) or wavelength <= 0:
            problems.append("birefringence.wavelength_nm must be a positive number")
        lengths = cfg.birefringence.get("lengths_mm", [])
        files = cfg.birefringence.get("files", [])
        if len(lengths) < 2:
            problems.append("birefringence.lengths_mm needs at least two lengths")
        if len(files) != len(lengths):
            problems.append(
                f"birefringence.files has {len(files)} entries for {len(lengths)} lengths"
            )
        for f in cfg.data_files():
            if not f.exists():
                problems.append(f"referenced data file {f} does not exist")

    return problems
