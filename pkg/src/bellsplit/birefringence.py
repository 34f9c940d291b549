"""Classical polarimetry of the waveguide: retarder Mueller model and fits.

The waveguide is modeled as a uniaxial linear retarder with retardance
``delta`` and axis angle ``theta``; its normalized Mueller matrix has
first row/column (1, 0, 0, 0) and an orthogonal lower 3x3 block.  The
model is degenerate under (delta, theta) -> (2 pi - delta, theta + pi/2),
so fitted parameters are canonicalized to delta in [0, 2 pi) and theta in
[0, pi/2).

Stokes conventions: s1 = I_H - I_V, s2 = I_P - I_M (P/M = +-45 deg),
s3 = I_R - I_L with R = (|H> - i|V>)/sqrt(2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, ValidationError

INPUT_LABELS = ("H", "V", "P", "M", "L", "R")

#: Normalized Stokes vectors of the six launch/analysis eigenstates.
STOKES = {
    "H": np.array([1.0, 1.0, 0.0, 0.0]),
    "V": np.array([1.0, -1.0, 0.0, 0.0]),
    "P": np.array([1.0, 0.0, 1.0, 0.0]),
    "M": np.array([1.0, 0.0, -1.0, 0.0]),
    "R": np.array([1.0, 0.0, 0.0, 1.0]),
    "L": np.array([1.0, 0.0, 0.0, -1.0]),
}


@dataclass(frozen=True)
class RetarderParams:
    """Retardance and optical-axis angle, radians."""

    delta: float
    theta: float

    def canonical(self) -> "RetarderParams":
        """Map onto the fundamental domain delta in [0, 2pi), theta in [0, pi/2).

        Uses the model symmetries theta -> theta + pi (trivial) and
        (delta, theta) -> (2 pi - delta, theta + pi/2).  Axis angles within
        1e-9 of the 0 / pi/2 boundary (where the two branches describe the
        same matrix) are snapped so that axis-aligned devices always land on
        the same representative.
        """
        delta = self.delta % (2.0 * math.pi)
        theta = self.theta % math.pi
        if abs(theta - math.pi / 2.0) < 1e-9:
            theta = math.pi / 2.0
        elif theta < 1e-9 or math.pi - theta < 1e-9:
            theta = 0.0
        if theta >= math.pi / 2.0:
            theta -= math.pi / 2.0
            delta = (-delta) % (2.0 * math.pi)
        return RetarderParams(delta, theta)


@dataclass
class RetarderFit:
    params: RetarderParams
    rms_residual: float
    theta_undetermined: bool
    model_ok: bool


@dataclass
class BirefringenceFit:
    b: float
    orders: list[int]
    rms_residual: float

    def to_jsonable(self) -> dict:
        return {"B": self.b, "orders": self.orders, "rms_residual": self.rms_residual}


def retarder_mueller(params: RetarderParams) -> np.ndarray:
    """Normalized Mueller matrix of a linear retarder (pure retarder class)."""
    c2, s2 = math.cos(2.0 * params.theta), math.sin(2.0 * params.theta)
    cd, sd = math.cos(params.delta), math.sin(params.delta)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c2 * c2 + s2 * s2 * cd, s2 * c2 * (1.0 - cd), -s2 * sd],
            [0.0, s2 * c2 * (1.0 - cd), s2 * s2 + c2 * c2 * cd, c2 * sd],
            [0.0, s2 * sd, -c2 * sd, cd],
        ]
    )


def validate_stokes(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (4,):
        raise ValidationError(f"Stokes vector must have 4 components, got {s.shape}")
    if s[1] ** 2 + s[2] ** 2 + s[3] ** 2 > s[0] ** 2 + 1e-9:
        raise ValidationError("Stokes vector has polarized power above total power")
    return s


def propagate_stokes(m: np.ndarray, s_in: np.ndarray) -> np.ndarray:
    """Output Stokes vector m @ s_in."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise ValidationError(f"Mueller matrix must be 4x4, got {m.shape}")
    return m @ validate_stokes(s_in)


def degree_of_polarization(s: np.ndarray) -> float:
    """sqrt(s1^2 + s2^2 + s3^2) / s0."""
    s = validate_stokes(s)
    if s[0] <= 0.0:
        raise ValidationError("total intensity s0 must be positive")
    return float(math.sqrt(s[1] ** 2 + s[2] ** 2 + s[3] ** 2) / s[0])


def output_stokes_from_intensities(projections: dict[str, float]) -> np.ndarray:
    """Normalized output Stokes vector from the six projection intensities."""
    missing = [k for k in INPUT_LABELS if k not in projections]
    if missing:
        raise ValidationError(f"missing projection intensities for {missing}")
    i = {k: float(projections[k]) for k in INPUT_LABELS}
    tot_hv = i["H"] + i["V"]
    tot_pm = i["P"] + i["M"]
    tot_rl = i["R"] + i["L"]
    if min(tot_hv, tot_pm, tot_rl) <= 0.0:
        raise ValidationError("projection intensity pairs must have positive sums")
    return np.array(
        [
            1.0,
            (i["H"] - i["V"]) / tot_hv,
            (i["P"] - i["M"]) / tot_pm,
            (i["R"] - i["L"]) / tot_rl,
        ]
    )


def fit_retarder(
    measurements: dict[str, np.ndarray | dict],
    grid: int = 16,
    residual_threshold: float = 0.05,
    theta_resolvable_delta: float = 1e-3,
) -> RetarderFit:
    """Fit (delta, theta) to output Stokes data for the six launch states.

    ``measurements`` maps each input label in {H, V, P, M, L, R} to either a
    measured output Stokes 4-vector or a dict of the six projection
    intensities.  Multi-start local least squares over a ``grid`` x ``grid``
    lattice of initial (delta, theta) keeps the lowest residual.
    ``model_ok`` is False when the best RMS residual exceeds
    ``residual_threshold`` (data outside the pure-retarder class);
    ``theta_undetermined`` flags delta below ``theta_resolvable_delta``.
    """
    missing = [k for k in INPUT_LABELS if k not in measurements]
    if missing:
        raise ValidationError(f"missing input eigenstates {missing}")
    s_out = {}
    for label in INPUT_LABELS:
        value = measurements[label]
        if isinstance(value, dict):
            s_out[label] = output_stokes_from_intensities(value)
        else:
            s_out[label] = validate_stokes(np.asarray(value, dtype=float))

    s_in = np.stack([STOKES[k] for k in INPUT_LABELS])
    target = np.stack([s_out[k] for k in INPUT_LABELS])

    def residuals(x):
        m = retarder_mueller(RetarderParams(x[0], x[1]))
        pred = s_in @ m.T
        return (pred[:, 1:] - target[:, 1:]).ravel()

    best = None
    deltas = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    thetas = np.linspace(0.0, math.pi / 2.0, grid, endpoint=False)
    for d0 in deltas:
        for t0 in thetas:
            sol = least_squares(residuals, x0=[d0, t0], method="lm", max_nfev=400)
            if best is None or sol.cost < best.cost:
                best = sol
    params = RetarderParams(float(best.x[0]), float(best.x[1])).canonical()
    rms = float(math.sqrt(2.0 * best.cost / (len(INPUT_LABELS) * 3)))
    return RetarderFit(
        params=params,
        rms_residual=rms,
        theta_undetermined=bool(
            params.delta < theta_resolvable_delta
            or (2.0 * math.pi - params.delta) < theta_resolvable_delta
        ),
        model_ok=bool(rms <= residual_threshold),
    )


def total_retardance(b: float, length_mm: float, wavelength_nm: float) -> float:
    """Unwrapped retardance 2 pi B L / lambda accumulated over a length."""
    return 2.0 * math.pi * b * (length_mm * 1e-3) / (wavelength_nm * 1e-9)


def fit_birefringence(
    series: list[tuple[float, float]] | list[tuple[float, float, float]],
    wavelength_nm: float,
    max_order: int = 64,
    residual_tol: float = 0.05,
) -> BirefringenceFit:
    """Recover the birefringence B from wrapped retardances at several lengths.

    ``series`` holds (length_mm, delta_rad[, theta_rad]) tuples with delta the
    fitted retardance wrapped to [0, 2 pi).  The integer fringe orders m_i in
    [0, max_order] and B minimize sum_i (delta_i + 2 pi m_i - 2 pi B L_i /
    lambda)^2; candidates are enumerated exhaustively from the order window of
    the shortest length, and exact aliases (possible when lengths share a
    common divisor) resolve to the smallest consistent B.  Raises FitError
    when no assignment reaches ``residual_tol`` (inconsistent series) and
    ValidationError on fewer than two distinct lengths.
    """
    entries = sorted((float(e[0]), float(e[1])) for e in series)
    lengths = np.array([e[0] for e in entries])
    deltas = np.array([e[1] for e in entries])
    if len(entries) < 2 or len(set(lengths.tolist())) < 2:
        raise ValidationError(
            "at least two distinct lengths are required to resolve the fringe order"
        )
    if np.any(lengths <= 0):
        raise ValidationError("lengths must be positive")

    lam_factor = 2.0 * math.pi * 1e-3 / (wavelength_nm * 1e-9)  # rad per (B * mm)
    phase_scale = lengths * lam_factor  # total = B * phase_scale

    best = None
    for m0 in range(max_order + 1):
        b_cand = (deltas[0] + 2.0 * math.pi * m0) / phase_scale[0]
        orders = np.round((b_cand * phase_scale - deltas) / (2.0 * math.pi)).astype(int)
        if orders.min() < 0 or orders.max() > max_order:
            continue
        unwrapped = deltas + 2.0 * math.pi * orders
        # least-squares B for this order assignment
        b_fit = float(unwrapped @ phase_scale / (phase_scale @ phase_scale))
        resid = unwrapped - b_fit * phase_scale
        rms = float(np.sqrt(np.mean(resid**2)))
        # commensurate lengths alias exactly (identical rms at shifted
        # orders); candidates are scanned in increasing B, so require a
        # strict improvement to keep the smallest consistent B on ties
        if best is None or rms < best[0] - 1e-12:
            best = (rms, b_fit, orders.tolist())
    if best is None or best[0] > residual_tol:
        raise FitError(
            "no fringe-order assignment is consistent with a single birefringence"
        )
    rms, b_fit, orders = best
    return BirefringenceFit(b=b_fit, orders=orders, rms_residual=rms)


# ---------------------------------------------------------------------------
# CSV interface: input_state,projection,intensity
# ---------------------------------------------------------------------------


def measurements_from_csv(path) -> dict[str, dict[str, float]]:
    """Load a six-eigenstate measurement table into {input: {projection: I}}."""
    table: dict[str, dict[str, float]] = {}
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "input_state,projection,intensity":
            raise ValidationError(f"unexpected measurement header {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValidationError(f"line {line_no}: expected 3 fields, got {len(parts)}")
            state, projection, intensity = parts
            for label in (state, projection):
                if label not in INPUT_LABELS:
                    raise ValidationError(f"line {line_no}: unknown state {label!r}")
            table.setdefault(state, {})[projection] = float(intensity)
    return table


def measurements_to_csv(table: dict[str, dict[str, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("input_state,projection,intensity\n")
        for state in INPUT_LABELS:
            for projection in INPUT_LABELS:
                fh.write(f"{state},{projection},{table[state][projection]:.9g}\n")


def retarder_report_json(
    fits: list[tuple[float, RetarderFit]],
    bire: BirefringenceFit,
    path,
) -> None:
    """Write the combined fit report {delta, theta, residual, B, orders}."""
    payload = {
        "per_length": [
            {
                "length_mm": length,
                "delta_rad": fit.params.delta,
                "theta_rad": fit.params.theta,
                "rms_residual": fit.rms_residual,
                "theta_undetermined": fit.theta_undetermined,
                "model_ok": fit.model_ok,
            }
            for length, fit in fits
        ],
        "B": bire.b,
        "orders": bire.orders,
        "rms_residual": bire.rms_residual,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
