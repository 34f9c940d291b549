"""Two-photon interference through the coupler.

The quantum route works on the symmetric coefficient matrix S of the
two-photon state, sum_{jk} S[j,k] a_j a_k |0> over the four input modes;
a mode transform U maps S -> U S U^T.  Outcome probabilities follow from
the symmetrized Fock amplitudes.  The classical (fully distinguishable)
route uses squared-modulus routing probabilities only.  Partial
distinguishability mixes the two affinely: P(mu) = mu P_q + (1 - mu) P_c
for every outcome, which is exact for a two-photon overlap model with
|<aux_A|aux_B>|^2 = mu.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .elements import CouplerSpec, coupler_transform, validate_mode_transform, waveplate_jones, WaveplateSpec, apply_local
from .errors import FitError, ValidationError
from .states import bell_state, normalize

_C_MODES = (0, 1)  # C_H, C_V
_D_MODES = (2, 3)  # D_H, D_V


@dataclass(frozen=True)
class TwoPhotonInput:
    """Polarization state of a photon pair (one photon per input mode) plus
    an indistinguishability parameter mu in [0, 1]."""

    state: np.ndarray
    mu: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValidationError(f"mu={self.mu} outside [0, 1]")
        object.__setattr__(self, "state", normalize(self.state))


@dataclass(frozen=True)
class DelayModel:
    """Gaussian overlap decay vs relative delay, exp(-(dx / L_c)^2)."""

    coherence_length_um: float
    shape: str = "gaussian"

    def __post_init__(self):
        if self.coherence_length_um <= 0.0:
            raise ValidationError("coherence length must be positive")
        if self.shape != "gaussian":
            raise ValidationError(f"unsupported delay shape {self.shape!r}")

    @classmethod
    def from_bandwidth(cls, wavelength_nm: float, bandwidth_nm: float) -> "DelayModel":
        """Coherence length lambda^2 / (pi * d_lambda), in micrometers."""
        lc_nm = wavelength_nm**2 / (math.pi * bandwidth_nm)
        return cls(coherence_length_um=lc_nm * 1e-3)

    def mu_factor(self, delay_um: float) -> float:
        x = delay_um / self.coherence_length_um
        return math.exp(-x * x)


@dataclass(frozen=True)
class CoincidenceOutcome:
    """Probabilities of the three lossless outcomes (they sum to 1)."""

    p_coincidence: float
    p_bunch_c: float
    p_bunch_d: float


def _symmetric_matrix(state: np.ndarray) -> np.ndarray:
    """S[j,k] with state = sum_pq psi_pq a_{A,p} a_{B,q} |0>, symmetrized."""
    psi = np.asarray(state, dtype=complex).reshape(2, 2)
    s = np.zeros((4, 4), dtype=complex)
    for p in range(2):
        for q in range(2):
            s[p, 2 + q] += 0.5 * psi[p, q]
            s[2 + q, p] += 0.5 * psi[p, q]
    return s


def _pair_probability(s: np.ndarray, m: int, n: int) -> float:
    """Probability of finding the photon pair in modes (m, n)."""
    if m == n:
        return 2.0 * abs(s[m, m]) ** 2
    return abs(2.0 * s[m, n]) ** 2


def _quantum_outcome(state: np.ndarray, u: np.ndarray) -> CoincidenceOutcome:
    s_out = u @ _symmetric_matrix(state) @ u.T
    p_cc = sum(
        _pair_probability(s_out, m, n) for m in _C_MODES for n in _C_MODES if m <= n
    )
    p_dd = sum(
        _pair_probability(s_out, m, n) for m in _D_MODES for n in _D_MODES if m <= n
    )
    p_cd = sum(_pair_probability(s_out, m, n) for m in _C_MODES for n in _D_MODES)
    return CoincidenceOutcome(p_cd, p_cc, p_dd)


def _classical_outcome(state: np.ndarray, u: np.ndarray) -> CoincidenceOutcome:
    """Fully distinguishable photons: independent routing, no cross terms."""
    psi = np.asarray(state, dtype=complex).reshape(2, 2)
    weights = np.abs(psi) ** 2
    prob = np.abs(u) ** 2
    p_cd = p_cc = p_dd = 0.0
    for p in range(2):
        for q in range(2):
            w = weights[p, q]
            if w == 0.0:
                continue
            a_col = prob[:, p]  # photon entering A with polarization p
            b_col = prob[:, 2 + q]  # photon entering B with polarization q
            a_c, a_d = a_col[0] + a_col[1], a_col[2] + a_col[3]
            b_c, b_d = b_col[0] + b_col[1], b_col[2] + b_col[3]
            p_cd += w * (a_c * b_d + a_d * b_c)
            p_cc += w * a_c * b_c
            p_dd += w * a_d * b_d
    return CoincidenceOutcome(p_cd, p_cc, p_dd)


def coincidence_probability(
    photon_pair: TwoPhotonInput,
    coupler: CouplerSpec | np.ndarray,
    convention: str = "symmetric",
) -> CoincidenceOutcome:
    """Outcome probabilities for a photon pair through the coupler.

    ``coupler`` may be a CouplerSpec or an explicit 4x4 unitary.  The result
    is the affine mixture mu * quantum + (1 - mu) * classical per outcome.
    """
    if isinstance(coupler, CouplerSpec):
        u = coupler_transform(coupler, convention)
    else:
        u = validate_mode_transform(coupler)
    mu = photon_pair.mu
    q = _quantum_outcome(photon_pair.state, u)
    c = _classical_outcome(photon_pair.state, u)
    return CoincidenceOutcome(
        p_coincidence=mu * q.p_coincidence + (1.0 - mu) * c.p_coincidence,
        p_bunch_c=mu * q.p_bunch_c + (1.0 - mu) * c.p_bunch_c,
        p_bunch_d=mu * q.p_bunch_d + (1.0 - mu) * c.p_bunch_d,
    )


def _coincidence_branches(state: np.ndarray, coupler: CouplerSpec):
    """C/D-coincidence polarization amplitudes of the two routing branches.

    Returns (u, v): 4-vectors over (HH, HV, VH, VV) on C x D for the
    both-transmitted and both-reflected branch (symmetric convention).
    The coherent sum u + v is the indistinguishable-case amplitude.
    """
    psi = np.asarray(state, dtype=complex).reshape(2, 2)
    trans = np.array([math.sqrt(coupler.t_h), math.sqrt(coupler.t_v)])
    refl = np.array([math.sqrt(coupler.r_h), math.sqrt(coupler.r_v)])
    u = np.zeros((2, 2), dtype=complex)
    v = np.zeros((2, 2), dtype=complex)
    for p in range(2):
        for q in range(2):
            # A photon transmitted to C, B photon transmitted to D
            u[p, q] += psi[p, q] * trans[p] * trans[q]
            # both reflected: (i)^2 = -1, polarization slots swap
            v[q, p] += -psi[p, q] * refl[p] * refl[q]
    return u.reshape(4), v.reshape(4)


def post_selected_cd_state(
    photon_pair: TwoPhotonInput, coupler: CouplerSpec
) -> tuple[np.ndarray, float]:
    """Polarization state on (C, D) conditioned on a C/D coincidence.

    Returns (rho, p_coincidence).  For mu < 1 the conditional state is the
    corresponding mixture of the coherent branch sum and the incoherent
    branch mixture.  Raises if the coincidence probability is below 1e-12.
    """
    u, v = _coincidence_branches(photon_pair.state, coupler)
    mu = photon_pair.mu
    w = u + v
    rho = mu * np.outer(w, w.conj()) + (1.0 - mu) * (
        np.outer(u, u.conj()) + np.outer(v, v.conj())
    )
    p = float(np.real(np.trace(rho)))
    if p < 1e-12:
        raise ValidationError("post-selection probability vanishes for this input")
    return rho / p, p


# ---------------------------------------------------------------------------
# Closed-form visibilities
# ---------------------------------------------------------------------------


def visibility_psi(coupler: CouplerSpec) -> float:
    """Maximum |psi+-> interference visibility,
    2 sqrt(T_H T_V R_H R_V) / (T_H T_V + R_H R_V)."""
    th, tv, rh, rv = coupler.t_h, coupler.t_v, coupler.r_h, coupler.r_v
    return 2.0 * math.sqrt(th * tv * rh * rv) / (th * tv + rh * rv)


def visibility_phi(coupler: CouplerSpec) -> float:
    """Maximum |phi+-> interference visibility,
    2 (T_H R_H + T_V R_V) / (T_H^2 + R_H^2 + T_V^2 + R_V^2)."""
    th, tv, rh, rv = coupler.t_h, coupler.t_v, coupler.r_h, coupler.r_v
    return 2.0 * (th * rh + tv * rv) / (th**2 + rh**2 + tv**2 + rv**2)


def hwp_fringe_visibility(coupler: CouplerSpec) -> float:
    """Closed-form contrast of the psi+ / half-waveplate coincidence fringe.

    The fringe interpolates between the singlet coincidence probability
    a = (sqrt(T_H T_V) + sqrt(R_H R_V))^2 and the phi+ probability
    b = ((T_H - R_H)^2 + (T_V - R_V)^2) / 2; the contrast of
    N0 [1 + V cos 4 theta] is (a - b) / (a + b).
    """
    a, b = _hwp_fringe_extrema(coupler)
    return (a - b) / (a + b)


def _hwp_fringe_extrema(coupler: CouplerSpec) -> tuple[float, float]:
    th, tv, rh, rv = coupler.t_h, coupler.t_v, coupler.r_h, coupler.r_v
    a = (math.sqrt(th * tv) + math.sqrt(rh * rv)) ** 2
    b = 0.5 * ((th - rh) ** 2 + (tv - rv) ** 2)
    return a, b


def qwp_closed_form_visibility(r_mean: float) -> float:
    """V = 2 (1 - R) R / (2 R^2 - 2 R + 1) for a polarization-independent
    splitter of reflectivity R."""
    if not 0.0 <= r_mean <= 1.0:
        raise ValidationError(f"reflectivity {r_mean} outside [0, 1]")
    return 2.0 * (1.0 - r_mean) * r_mean / (2.0 * r_mean**2 - 2.0 * r_mean + 1.0)


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------


@dataclass
class ScanResult:
    """A sampled curve plus its closed-form counterpart and fit metadata."""

    kind: str
    param_name: str
    params: np.ndarray
    rate: np.ndarray
    rate_closed_form: np.ndarray
    meta: dict = field(default_factory=dict)
    fit: dict | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("param,rate,rate_closed_form\n")
            for x, y, z in zip(self.params, self.rate, self.rate_closed_form):
                fh.write(f"{x:.9g},{y:.9g},{z:.9g}\n")

    def to_jsonable(self) -> dict:
        return {
            "kind": self.kind,
            "param_name": self.param_name,
            "params": [float(x) for x in self.params],
            "rate": [float(x) for x in self.rate],
            "rate_closed_form": [float(x) for x in self.rate_closed_form],
            "meta": self.meta,
            "fit": self.fit,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_jsonable(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _map_points(fn: Callable[[float], float], xs: Sequence[float], max_workers: int = 1):
    """Evaluate a pure per-point function, optionally in a thread pool.

    Results are ordered by input index regardless of completion order.
    """
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(fn, xs))
    return [fn(x) for x in xs]


def hom_rate_ratio(
    photon_pair: TwoPhotonInput,
    coupler: CouplerSpec,
    delay_model: DelayModel,
    delay_um: float,
) -> float:
    """Coincidence rate at delay dx relative to the rate far outside
    interference (pure per-point function)."""
    mu_eff = photon_pair.mu * delay_model.mu_factor(delay_um)
    scanned = TwoPhotonInput(photon_pair.state, mu_eff)
    out = coincidence_probability(scanned, coupler)
    base = _classical_outcome(scanned.state, coupler_transform(coupler))
    return out.p_coincidence / base.p_coincidence


def hom_scan(
    photon_pair: TwoPhotonInput,
    coupler: CouplerSpec,
    delay_model: DelayModel,
    delays_um: Sequence[float],
    max_workers: int = 1,
) -> ScanResult:
    """Relative coincidence rate vs delay: a dip for symmetric states, a
    peak for the singlet.

    The closed-form column is the Gaussian law 1 + (rate0 - 1) exp(-(dx/Lc)^2)
    anchored at the zero-delay engine value rate0.
    """
    delays = np.asarray(list(delays_um), dtype=float)
    if not np.all(np.isfinite(delays)):
        raise ValidationError("delays must be finite")
    rate = np.array(
        _map_points(
            lambda dx: hom_rate_ratio(photon_pair, coupler, delay_model, dx),
            delays,
            max_workers,
        )
    )
    rate0 = hom_rate_ratio(photon_pair, coupler, delay_model, 0.0)
    closed = 1.0 + (rate0 - 1.0) * np.exp(-((delays / delay_model.coherence_length_um) ** 2))
    meta = {
        "coherence_length_um": delay_model.coherence_length_um,
        "mu": photon_pair.mu,
        "rate_at_zero_delay": rate0,
    }
    return ScanResult("hom_scan", "delay_um", delays, rate, closed, meta)


def hwp_fringe(
    coupler: CouplerSpec,
    thetas: Sequence[float],
    mu: float = 1.0,
    max_workers: int = 1,
) -> ScanResult:
    """Coincidence probability vs half-waveplate angle for a psi+ source with
    the waveplate on input mode B.

    ``rate`` is the first-principles engine value; ``rate_closed_form`` is
    N0 [1 + V cos 4 theta] with the closed-form contrast V.
    """
    thetas = np.asarray(list(thetas), dtype=float)
    src = bell_state("psi_plus")

    def rate_at(theta: float) -> float:
        jones = waveplate_jones(WaveplateSpec("half", theta))
        state = apply_local(jones, "B", src)
        return coincidence_probability(TwoPhotonInput(state, mu), coupler).p_coincidence

    rate = np.array(_map_points(rate_at, thetas, max_workers))
    a, b = _hwp_fringe_extrema(coupler)
    v = hwp_fringe_visibility(coupler)
    n0 = 0.5 * (a + b)
    closed_q = n0 * (1.0 + v * np.cos(4.0 * thetas))
    # mu < 1 damps only the interference part of each branch; for the fringe
    # the classical baseline of both branches is theta-independent only in
    # the balanced case, so serialize the mu = 1 closed form and leave the
    # engine column exact.
    meta = {"visibility_closed_form": v, "n0_closed_form": n0, "mu": mu}
    return ScanResult("hwp_fringe", "theta_rad", thetas, rate, closed_q, meta)


def qwp_fringe(
    coupler: CouplerSpec,
    thetas: Sequence[float],
    mu: float = 1.0,
    max_workers: int = 1,
) -> ScanResult:
    """Coincidence probability vs quarter-waveplate angle for a psi_i source
    with the waveplate on input mode A.

    ``rate`` is the exact engine curve with the full polarization-dependent
    coupler; ``rate_closed_form`` is the mean-reflectivity model
    N0 [1 - V + 2 V cos^4 theta] with R = (R_H + R_V)/2.
    """
    thetas = np.asarray(list(thetas), dtype=float)
    src = bell_state("psi_i")

    def rate_at(theta: float) -> float:
        jones = waveplate_jones(WaveplateSpec("quarter", theta))
        state = apply_local(jones, "A", src)
        return coincidence_probability(TwoPhotonInput(state, mu), coupler).p_coincidence

    rate = np.array(_map_points(rate_at, thetas, max_workers))
    r_mean = 0.5 * (coupler.r_h + coupler.r_v)
    v = qwp_closed_form_visibility(r_mean)
    n0 = r_mean**2 + (1.0 - r_mean) ** 2
    closed = n0 * (1.0 - v + 2.0 * v * np.cos(thetas) ** 4)
    meta = {
        "visibility_closed_form": v,
        "r_mean": r_mean,
        "n0_closed_form": n0,
        "mu": mu,
        "max_closed_form_deviation": float(np.max(np.abs(rate - closed))) if len(thetas) else 0.0,
    }
    return ScanResult("qwp_fringe", "theta_rad", thetas, rate, closed, meta)


# ---------------------------------------------------------------------------
# Visibility fitting
# ---------------------------------------------------------------------------

FRINGE_MODELS = ("dip", "cos4", "cos4_power")


def _model_dip(x, n0, amp, x0, w):
    return n0 * (1.0 + amp * np.exp(-(((x - x0) / w) ** 2)))


def _model_cos4(x, n0, v):
    return n0 * (1.0 + v * np.cos(4.0 * x))


def _model_cos4_power(x, n0, v):
    return n0 * (1.0 - v + 2.0 * v * np.cos(x) ** 4)


def fit_visibility(samples: ScanResult | tuple, model: str):
    """Least-squares fit of a fringe model; returns (n0, v, v_stderr).

    ``samples`` is a ScanResult or an (x, y) pair.  Models: "dip" (Gaussian
    dip/peak; v is the absolute contrast |amplitude|), "cos4"
    (N0 [1 + V cos 4x]) and "cos4_power" (N0 [1 - V + 2 V cos^4 x]).
    """
    if isinstance(samples, ScanResult):
        x, y = np.asarray(samples.params, float), np.asarray(samples.rate, float)
    else:
        x, y = (np.asarray(a, dtype=float) for a in samples)
    if x.size < 5:
        raise ValidationError(f"need at least 5 samples to fit, got {x.size}")
    if model not in FRINGE_MODELS:
        raise ValidationError(f"unknown fringe model {model!r}")
    spread = y.max() - y.min()
    if spread <= 1e-12 * max(1.0, abs(y.max())):
        raise FitError("samples are constant; visibility fit is degenerate")

    if model == "dip":
        n0_guess = y[np.argmax(np.abs(x))]
        amp_guess = (y[np.argmin(np.abs(x))] - n0_guess) / n0_guess
        w_guess = max((x.max() - x.min()) / 6.0, 1e-6)
        p0 = [n0_guess, amp_guess, 0.0, w_guess]
        fn = _model_dip
        v_index = 1
    elif model == "cos4":
        p0 = [y.mean(), spread / max(2.0 * y.mean(), 1e-12)]
        fn = _model_cos4
        v_index = 1
    else:
        p0 = [y.mean(), min(spread / max(2.0 * y.mean(), 1e-12), 1.0)]
        fn = _model_cos4_power
        v_index = 1

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(fn, x, y, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"visibility fit did not converge: {exc}") from exc
    v = abs(float(popt[v_index]))
    with np.errstate(invalid="ignore"):
        stderr = float(np.sqrt(np.abs(pcov[v_index, v_index])))
    if not math.isfinite(stderr):
        # singular covariance happens on noiseless data where the fit is
        # exact; report zero sampling error instead of a non-finite value
        rms = float(np.sqrt(np.mean((fn(x, *popt) - y) ** 2)))
        stderr = 0.0 if rms < 1e-9 * max(1.0, float(np.abs(y).max())) else float("nan")
        if math.isnan(stderr):
            raise FitError("visibility fit covariance is singular on noisy data")
    return float(popt[0]), v, stderr


def fit_mu_to_visibility(
    state: np.ndarray, coupler: CouplerSpec, v_measured: float
) -> float:
    """Indistinguishability mu reproducing a measured visibility for a state.

    The visibility |C0 - Cint| / C0 is affine in mu, so mu = V_meas / V_max
    with V_max the mu = 1 visibility.  Raises if V_meas exceeds V_max.
    """
    p_q = _quantum_outcome(normalize(state), coupler_transform(coupler)).p_coincidence
    p_c = _classical_outcome(normalize(state), coupler_transform(coupler)).p_coincidence
    v_max = abs(p_q - p_c) / p_c
    if v_measured < 0.0 or v_measured > v_max + 1e-12:
        raise ValidationError(
            f"visibility {v_measured} not reachable (maximum {v_max:.6f} at mu = 1)"
        )
    return min(v_measured / v_max, 1.0)
