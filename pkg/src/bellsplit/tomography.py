"""Projective two-qubit tomography: forward model and reconstruction.

Reconstruction is done twice: plain linear inversion (fast, may leave the
physical set) and Poissonian maximum likelihood over the Cholesky-style
parametrization rho = T^dag T / Tr(T^dag T) with T lower triangular
(16 real parameters), which is physical by construction.  The likelihood
is maximized by gradient ascent with Barzilai-Borwein step initialization
and a backtracking (Armijo) line search; the unknown flux is profiled out
analytically at every iterate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .elements import CouplerSpec
from .errors import ConvergenceError, ValidationError
from .interference import TwoPhotonInput, post_selected_cd_state
from .states import (
    bell_state,
    concurrence,
    density_matrix_to_jsonable,
    fidelity_pure,
    ket,
    linear_entropy,
    normalize,
    validate_density_matrix,
)

_P_FLOOR = 1e-15
_LOWER_IDX = ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2))


@dataclass(eq=False)
class MeasurementSetting:
    """Analyzer directions on output modes C and D (unit-norm kets)."""

    analyzer_c: np.ndarray
    analyzer_d: np.ndarray
    label_c: str | None = None
    label_d: str | None = None

    def __post_init__(self):
        self.analyzer_c = normalize(self.analyzer_c)
        self.analyzer_d = normalize(self.analyzer_d)

    @classmethod
    def from_labels(cls, label_c: str, label_d: str) -> "MeasurementSetting":
        return cls(ket(label_c), ket(label_d), label_c, label_d)

    def projector_ket(self) -> np.ndarray:
        return np.kron(self.analyzer_c, self.analyzer_d)


@dataclass
class CountRecord:
    """Coincidence counts for one analyzer setting.

    ``counts`` is integer-valued for Poisson data but kept as float so that
    noiseless expected counts can be carried exactly.
    """

    setting: MeasurementSetting
    counts: float
    integration_time: float = 1.0

    def __post_init__(self):
        if self.counts < 0:
            raise ValidationError("counts must be nonnegative")
        if self.integration_time <= 0:
            raise ValidationError("integration time must be positive")


@dataclass
class MetricEstimate:
    value: float
    stderr: float | None = None


@dataclass
class TomographyResult:
    rho_linear: np.ndarray
    rho_mle: np.ndarray
    metrics: dict[str, MetricEstimate]
    meta: dict = field(default_factory=dict)
    records: list[CountRecord] | None = None  # raw input, not serialized

    def to_jsonable(self) -> dict:
        return {
            "rho_linear": density_matrix_to_jsonable(self.rho_linear),
            "rho_mle": density_matrix_to_jsonable(self.rho_mle),
            "metrics": {
                name: {"value": est.value, "stderr": est.stderr}
                for name, est in self.metrics.items()
            },
            "meta": self.meta,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_jsonable(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def standard_settings() -> list[MeasurementSetting]:
    """The 16 product settings over {H, V, D, L} on each output."""
    labels = ("H", "V", "D", "L")
    return [MeasurementSetting.from_labels(a, b) for a in labels for b in labels]


def simulate_counts(
    rho: np.ndarray,
    settings: list[MeasurementSetting],
    n_total: float,
    noise: str = "none",
    seed: int | None = None,
    integration_time: float = 1.0,
) -> list[CountRecord]:
    """Forward model: expected counts n_total * <proj|rho|proj> per setting.

    ``noise="poisson"`` draws from a generator seeded with ``seed`` and is
    bit-exactly reproducible; ``noise="none"`` returns exact expectations.
    """
    rho = validate_density_matrix(rho)
    if n_total <= 0:
        raise ValidationError("n_total must be positive")
    if noise not in ("none", "poisson"):
        raise ValidationError(f"unknown noise model {noise!r}")
    kets = np.array([s.projector_ket() for s in settings])
    probs = np.einsum("ij,jk,ik->i", kets.conj(), rho, kets).real
    expected = n_total * np.clip(probs, 0.0, None)
    if noise == "poisson":
        rng = np.random.default_rng(seed)
        values = rng.poisson(expected).astype(float)
    else:
        values = expected
    return [
        CountRecord(s, float(v), integration_time) for s, v in zip(settings, values)
    ]


# ---------------------------------------------------------------------------
# CSV interface: setting_c,setting_d,counts,seconds
# ---------------------------------------------------------------------------


def records_to_csv(records: list[CountRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("setting_c,setting_d,counts,seconds\n")
        for rec in records:
            if rec.setting.label_c is None or rec.setting.label_d is None:
                raise ValidationError(
                    "only settings built from polarization labels can be "
                    "serialized to CSV"
                )
            fh.write(
                f"{rec.setting.label_c},{rec.setting.label_d},"
                f"{rec.counts:.9g},{rec.integration_time:.9g}\n"
            )


def records_from_csv(path) -> list[CountRecord]:
    records = []
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "setting_c,setting_d,counts,seconds":
            raise ValidationError(f"unexpected count-record header {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValidationError(f"line {line_no}: expected 4 fields, got {len(parts)}")
            sc, sd, counts, seconds = parts
            records.append(
                CountRecord(
                    MeasurementSetting.from_labels(sc, sd),
                    float(counts),
                    float(seconds),
                )
            )
    return records


# ---------------------------------------------------------------------------
# Linear inversion
# ---------------------------------------------------------------------------

_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
# Orthonormal Hermitian operator basis under the Frobenius inner product.
_OP_BASIS = [0.5 * np.kron(a, b) for a in _PAULI for b in _PAULI]


def reconstruct_linear(records: list[CountRecord]) -> np.ndarray:
    """Linear-inversion estimate: Hermitian, unit trace, positivity NOT
    guaranteed.  Requires settings spanning the operator space."""
    if len(records) < 16:
        raise ValidationError(f"need at least 16 records, got {len(records)}")
    kets = np.array([r.setting.projector_ket() for r in records])
    rates = np.array([r.counts / r.integration_time for r in records])
    design = np.empty((len(records), 16))
    for j, op in enumerate(_OP_BASIS):
        design[:, j] = np.einsum("ij,jk,ik->i", kets.conj(), op, kets).real
    if np.linalg.matrix_rank(design, tol=1e-10) < 16:
        raise ValidationError("singular design matrix: settings do not span the operator space")
    coeff, *_ = np.linalg.lstsq(design, rates, rcond=None)
    x = sum(c * op for c, op in zip(coeff, _OP_BASIS))
    x = 0.5 * (x + x.conj().T)
    tr = float(np.real(np.trace(x)))
    if tr <= 0:
        raise ValidationError("linear inversion produced a non-positive trace")
    return x / tr


# ---------------------------------------------------------------------------
# Maximum likelihood
# ---------------------------------------------------------------------------


def _t_from_params(t: np.ndarray) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[np.diag_indices(4)] = t[:4]
    for i, (r, c) in enumerate(_LOWER_IDX):
        m[r, c] = t[4 + 2 * i] + 1j * t[5 + 2 * i]
    return m


def _params_from_t(m: np.ndarray) -> np.ndarray:
    t = np.zeros(16)
    t[:4] = np.real(np.diag(m))
    for i, (r, c) in enumerate(_LOWER_IDX):
        t[4 + 2 * i] = m[r, c].real
        t[5 + 2 * i] = m[r, c].imag
    return t


def _pack_gradient(w: np.ndarray) -> np.ndarray:
    g = np.zeros(16)
    g[:4] = 2.0 * np.real(np.diag(w))
    for i, (r, c) in enumerate(_LOWER_IDX):
        g[4 + 2 * i] = 2.0 * w[r, c].real
        g[5 + 2 * i] = 2.0 * w[r, c].imag
    return g


def rho_from_cholesky_params(t: np.ndarray) -> np.ndarray:
    m = _t_from_params(np.asarray(t, dtype=float))
    rho = m.conj().T @ m
    tr = np.real(np.trace(rho))
    if tr < 1e-300:
        raise ValidationError("degenerate Cholesky parameters (zero trace)")
    return rho / tr


def _cholesky_params_from_rho(rho: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Parameters of a physical state close to rho (eigenvalues floored)."""
    vals, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    vals = np.clip(vals.real, floor, None)
    rho_pos = (vecs * vals) @ vecs.conj().T
    rho_pos /= np.real(np.trace(rho_pos))
    # Want lower-triangular T with T^dag T = rho; Cholesky in reversed index
    # order provides it: T = flip(L^dag) where P rho P = L L^dag.
    flipped = rho_pos[::-1, ::-1]
    lower = np.linalg.cholesky(flipped)
    t = lower.conj().T[::-1, ::-1]
    return _params_from_t(t)


class _Likelihood:
    """Mean Poisson log-likelihood with the flux profiled out analytically."""

    def __init__(self, records: list[CountRecord]):
        self.kets = np.array([r.setting.projector_ket() for r in records])
        self.counts = np.array([r.counts for r in records], dtype=float)
        self.times = np.array([r.integration_time for r in records], dtype=float)
        self.n_total = self.counts.sum()
        if self.n_total <= 0:
            raise ValidationError("all counts are zero: likelihood is degenerate")

    def probs(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("ij,jk,ik->i", self.kets.conj(), rho, self.kets).real

    def value(self, rho: np.ndarray) -> float:
        p = np.clip(self.probs(rho), _P_FLOOR, None)
        flux = self.n_total / (self.times @ p)
        # constant -1 from the profiled flux term is kept for transparency
        return float((self.counts @ np.log(p)) / self.n_total + math.log(flux) - 1.0)

    def gradient_matrix(self, rho: np.ndarray) -> np.ndarray:
        """dl/drho as a Hermitian matrix (per count)."""
        p = np.clip(self.probs(rho), _P_FLOOR, None)
        flux = self.n_total / (self.times @ p)
        w = (self.counts / p - flux * self.times) / self.n_total
        return (self.kets.T * w) @ self.kets.conj()


def _lbfgs_direction(grad: np.ndarray, memory: list[tuple[np.ndarray, np.ndarray]]):
    """Two-loop recursion: approximate Newton ascent direction from the
    recent (step, gradient-change) pairs."""
    q = grad.copy()
    alphas = []
    for s, y in reversed(memory):
        rho_i = 1.0 / float(s @ y)
        a = rho_i * float(s @ q)
        alphas.append((a, rho_i))
        q -= a * y
    if memory:
        s, y = memory[-1]
        q *= float(s @ y) / float(y @ y)
    for (a, rho_i), (s, y) in zip(reversed(alphas), memory):
        b = rho_i * float(y @ q)
        q += (a - b) * s
    return q


def reconstruct_mle(
    records: list[CountRecord],
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Maximum-likelihood density matrix from count records.

    Ascends the mean Poisson log-likelihood over the 16 Cholesky parameters
    (limited-memory quasi-Newton directions, backtracking Armijo line
    search); converged when the gradient 2-norm drops below ``tol``.
    Raises ConvergenceError (with the best iterate attached) otherwise.
    """
    if len(records) < 16:
        raise ValidationError(f"need at least 16 records, got {len(records)}")
    lik = _Likelihood(records)

    try:
        start = _cholesky_params_from_rho(reconstruct_linear(records))
    except ValidationError:
        start = _cholesky_params_from_rho(np.eye(4) / 4.0)

    t = start
    rho = rho_from_cholesky_params(t)
    value = lik.value(rho)
    grad = _gradient(lik, t, rho)
    memory: list[tuple[np.ndarray, np.ndarray]] = []
    stalls = 0

    for iteration in range(max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol:
            return validate_density_matrix(rho_from_cholesky_params(t))

        direction = _lbfgs_direction(grad, memory)
        slope = float(direction @ grad)
        if slope <= 0.0:  # not an ascent direction; fall back to the gradient
            direction, slope = grad, gnorm * gnorm

        accepted = False
        alpha = 1.0 if memory else min(1.0, 1.0 / gnorm)
        for _ in range(60):
            cand = t + alpha * direction
            try:
                rho_cand = rho_from_cholesky_params(cand)
            except ValidationError:
                alpha *= 0.5
                continue
            cand_value = lik.value(rho_cand)
            if cand_value >= value + 1e-4 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5

        if not accepted:
            if memory:  # discard stale curvature pairs and retry once
                memory.clear()
                stalls += 1
                if stalls < 3:
                    continue
            raise ConvergenceError(
                "line search stalled before reaching the gradient tolerance",
                best_rho=rho_from_cholesky_params(t),
                diagnostics={
                    "iterations": iteration,
                    "gradient_norm": gnorm,
                    "objective": value,
                    "stalled": True,
                },
            )

        new_grad = _gradient(lik, cand, rho_cand)
        s = cand - t
        y = grad - new_grad  # gradient change of the negated objective
        if float(s @ y) > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            memory.append((s, y))
            if len(memory) > 10:
                memory.pop(0)
        t, rho, value, grad = cand, rho_cand, cand_value, new_grad

    raise ConvergenceError(
        f"no convergence after {max_iter} iterations",
        best_rho=rho_from_cholesky_params(t),
        diagnostics={
            "iterations": max_iter,
            "gradient_norm": float(np.linalg.norm(grad)),
            "objective": value,
            "stalled": False,
        },
    )


def _gradient(lik: _Likelihood, t: np.ndarray, rho: np.ndarray) -> np.ndarray:
    g_rho = lik.gradient_matrix(rho)
    m = _t_from_params(t)
    tau = float(np.real(np.trace(m.conj().T @ m)))
    inner = float(np.real(np.trace(g_rho @ rho)))
    w = (m @ (g_rho - inner * np.eye(4))) / tau
    return _pack_gradient(w)


def log_likelihood(records: list[CountRecord], rho: np.ndarray) -> float:
    """Mean Poisson log-likelihood of a physical state given the records."""
    return _Likelihood(records).value(validate_density_matrix(rho))


# ---------------------------------------------------------------------------
# Metrics, bootstrap and the filtering experiment
# ---------------------------------------------------------------------------


def state_metrics(rho: np.ndarray) -> dict[str, float]:
    """Singlet-filtration metrics of a physical state."""
    singlet = bell_state("psi_minus")
    return {
        "s_l": linear_entropy(rho),
        "concurrence": concurrence(rho),
        "f_singlet": fidelity_pure(rho, singlet),
    }


def bootstrap_metrics(
    records: list[CountRecord],
    n_resamples: int,
    seed: int | None = None,
) -> dict[str, float]:
    """Parametric bootstrap: Poisson-resample counts, re-run the MLE and
    return the standard deviation of each metric.  Reproducible per seed."""
    if n_resamples < 100:
        raise ValidationError(f"need at least 100 resamples, got {n_resamples}")
    rng = np.random.default_rng(seed)
    base = np.array([r.counts for r in records], dtype=float)
    samples: dict[str, list[float]] = {"s_l": [], "concurrence": [], "f_singlet": []}
    for index in range(n_resamples):
        resampled = rng.poisson(base).astype(float)
        boot = [
            CountRecord(r.setting, float(c), r.integration_time)
            for r, c in zip(records, resampled)
        ]
        try:
            rho = reconstruct_mle(boot)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"MLE failed on bootstrap resample {index}: {exc}",
                best_rho=exc.best_rho,
                diagnostics={**exc.diagnostics, "resample_index": index},
            ) from exc
        for name, value in state_metrics(rho).items():
            samples[name].append(value)
    return {name: float(np.std(vals, ddof=1)) for name, vals in samples.items()}


def singlet_filter_experiment(
    state: np.ndarray,
    coupler: CouplerSpec,
    mu: float = 1.0,
    settings: list[MeasurementSetting] | None = None,
    counts_per_setting: float = 50_000,
    noise: str = "poisson",
    seed: int | None = 7,
    bootstrap_resamples: int = 100,
    bootstrap_seed: int | None = None,
) -> TomographyResult:
    """Full simulated filtration run: post-select C/D coincidences, perform
    tomography on the conditional state and report metrics.

    Set ``bootstrap_resamples=0`` to skip uncertainty estimation.
    """
    pair = TwoPhotonInput(state, mu)
    rho_true, p_coinc = post_selected_cd_state(pair, coupler)
    if settings is None:
        settings = standard_settings()
    records = simulate_counts(rho_true, settings, counts_per_setting, noise, seed)
    rho_linear = reconstruct_linear(records)
    rho_mle = reconstruct_mle(records)
    values = state_metrics(rho_mle)
    if bootstrap_resamples:
        if bootstrap_seed is None:
            bootstrap_seed = None if seed is None else seed + 1
        errs = bootstrap_metrics(records, bootstrap_resamples, bootstrap_seed)
    else:
        errs = {name: None for name in values}
    metrics = {name: MetricEstimate(values[name], errs[name]) for name in values}
    meta = {
        "p_coincidence": p_coinc,
        "mu": mu,
        "coupler": {"r_h": coupler.r_h, "r_v": coupler.r_v},
        "counts_per_setting": counts_per_setting,
        "noise": noise,
        "seed": seed,
        "bootstrap_resamples": bootstrap_resamples,
        "bootstrap_seed": bootstrap_seed,
    }
    return TomographyResult(rho_linear, rho_mle, metrics, meta, records=records)
