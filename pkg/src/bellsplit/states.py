"""Two-qubit polarization states, Bell basis and entanglement metrics.

Conventions used everywhere in this package:

* single-qubit basis order is (H, V);
* two-qubit basis order is (HH, HV, VH, VV), first tensor factor being the
  photon in spatial mode A (or C after the splitter);
* density matrices are 4x4 complex, Hermitian, unit trace, positive
  semidefinite up to a numerical slack of ``EIG_SLACK``.

The linear entropy is normalized as S_L = (4/3) (1 - Tr rho^2), so that the
maximally mixed two-qubit state has S_L = 1.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ValidationError

# Tolerances for density-matrix validation.
HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
EIG_SLACK = 1e-9

# Single-photon polarization kets.
KETS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([1.0, 1.0], dtype=complex) / math.sqrt(2),  # +45 deg
    "A": np.array([1.0, -1.0], dtype=complex) / math.sqrt(2),  # -45 deg
    "L": np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2),  # left circular
    "R": np.array([1.0, -1.0j], dtype=complex) / math.sqrt(2),  # right circular
}

BELL_LABELS = ("psi_minus", "psi_plus", "phi_plus", "phi_minus")

_SQ2 = 1.0 / math.sqrt(2)
_BELL = {
    "psi_minus": np.array([0.0, _SQ2, -_SQ2, 0.0], dtype=complex),
    "psi_plus": np.array([0.0, _SQ2, _SQ2, 0.0], dtype=complex),
    "phi_plus": np.array([_SQ2, 0.0, 0.0, _SQ2], dtype=complex),
    "phi_minus": np.array([_SQ2, 0.0, 0.0, -_SQ2], dtype=complex),
    # "imaginary" variants used by the fringe experiments
    "psi_i": np.array([0.0, _SQ2, -1.0j * _SQ2, 0.0], dtype=complex),
    "phi_i": np.array([_SQ2, 0.0, 0.0, 1.0j * _SQ2], dtype=complex),
}

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)


def ket(label: str) -> np.ndarray:
    """Single-qubit ket for a polarization label in {H, V, D, A, L, R}."""
    try:
        return KETS[label].copy()
    except KeyError:
        raise ValidationError(f"unknown polarization label {label!r}") from None


def normalize(psi: np.ndarray) -> np.ndarray:
    """Return psi / ||psi||, raising on (near-)zero vectors."""
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ValidationError("cannot normalize a zero state vector")
    return psi / norm


def bell_state(label: str) -> np.ndarray:
    """Normalized Bell state as a 4-vector in the (HH, HV, VH, VV) basis.

    Accepts the four standard labels plus ``psi_i``/``phi_i`` for the
    relative-phase-i variants.
    """
    try:
        return _BELL[label].copy()
    except KeyError:
        raise ValidationError(
            f"unknown Bell label {label!r}; expected one of {sorted(_BELL)}"
        ) from None


def pure_density(psi: np.ndarray) -> np.ndarray:
    """|psi><psi| for a normalized 4-vector."""
    psi = normalize(psi)
    return np.outer(psi, psi.conj())


def werner_state(p: float) -> np.ndarray:
    """Werner state p |psi-><psi-| + (1-p) I/4."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"Werner parameter p={p} outside [0, 1]")
    return p * pure_density(bell_state("psi_minus")) + (1.0 - p) * np.eye(4) / 4.0


def validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Check the density-matrix invariants and return rho as a complex array.

    Raises ValidationError if rho is not 4x4, Hermitian within 1e-10,
    unit trace within 1e-10, or has an eigenvalue below -1e-9.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValidationError(f"density matrix must be 4x4, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=HERMITIAN_ATOL, rtol=0.0):
        raise ValidationError("density matrix is not Hermitian within 1e-10")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_ATOL:
        raise ValidationError(f"density matrix trace {tr} differs from 1 beyond 1e-10")
    eigs = np.linalg.eigvalsh(rho)
    if eigs.min() < -EIG_SLACK:
        raise ValidationError(
            f"density matrix has eigenvalue {eigs.min():.3e} below -{EIG_SLACK:.0e}"
        )
    return rho


def _clamp01(x: float, tol: float = EIG_SLACK) -> float:
    if x < 0.0:
        if x < -tol:
            raise ValidationError(f"metric value {x} below 0 beyond tolerance")
        return 0.0
    if x > 1.0:
        if x > 1.0 + tol:
            raise ValidationError(f"metric value {x} above 1 beyond tolerance")
        return 1.0
    return x


def fidelity_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    """Fidelity <psi| rho |psi> of a state with a pure target."""
    rho = validate_density_matrix(rho)
    psi = normalize(psi)
    value = np.real_if_close(psi.conj() @ rho @ psi, tol=100)
    return _clamp01(float(np.real(value)))


def purity(rho: np.ndarray) -> float:
    """Tr rho^2."""
    rho = validate_density_matrix(rho)
    return _clamp01(float(np.real(np.trace(rho @ rho))))


def linear_entropy(rho: np.ndarray) -> float:
    """Normalized linear entropy S_L = (4/3) (1 - Tr rho^2).

    0 for pure states, 1 for the maximally mixed two-qubit state.
    """
    return _clamp01((4.0 / 3.0) * (1.0 - purity(rho)))


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    C = max(0, l1 - l2 - l3 - l4) where the l_i are the decreasing square
    roots of the eigenvalues of rho (sy x sy) rho* (sy x sy).
    """
    rho = validate_density_matrix(rho)
    rho_tilde = _YY @ rho.conj() @ _YY
    eigs = np.linalg.eigvals(rho @ rho_tilde)
    # eigenvalues are real >= 0 up to roundoff
    lam = np.sqrt(np.clip(eigs.real, 0.0, None))
    lam.sort()
    return _clamp01(float(lam[3] - lam[2] - lam[1] - lam[0]))


def partial_trace(rho: np.ndarray, subsystem: int) -> np.ndarray:
    """Reduced 2x2 state of one qubit; ``subsystem`` 0 keeps the first factor."""
    rho = validate_density_matrix(rho)
    if subsystem not in (0, 1):
        raise ValidationError("subsystem must be 0 (first qubit) or 1 (second)")
    r = rho.reshape(2, 2, 2, 2)
    if subsystem == 0:
        return np.einsum("ikjk->ij", r)
    return np.einsum("kikj->ij", r)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(1/2) Tr |rho - sigma| for Hermitian rho, sigma."""
    diff = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    eigs = np.linalg.eigvalsh(diff)
    return 0.5 * float(np.abs(eigs).sum())


def density_matrix_to_jsonable(rho: np.ndarray) -> list:
    """Row-major nested lists of [re, im] pairs."""
    rho = np.asarray(rho, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in rho]


def density_matrix_from_jsonable(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape != (4, 4, 2):
        raise ValidationError(f"expected a 4x4 array of [re, im] pairs, got {arr.shape}")
    return arr[..., 0] + 1.0j * arr[..., 1]


def density_matrix_to_json(rho: np.ndarray) -> str:
    return json.dumps(density_matrix_to_jsonable(rho))


def density_matrix_from_json(text: str) -> np.ndarray:
    return density_matrix_from_jsonable(json.loads(text))
