"""Optical elements: waveplates and the polarization-dependent coupler.

Single-photon mode order for 4x4 transforms is (A_H, A_V, B_H, B_V) on the
input side and (C_H, C_V, D_H, D_V) on the output side.  A transform U maps
creation operators as a_in,j -> sum_k U[k, j] a_out,k.

Waveplate angles are measured from the vertical axis (the V polarization);
retarder Jones matrices use the symmetric det = 1 convention
R(alpha) diag(e^{-i G/2}, e^{+i G/2}) R(-alpha) with G = pi (half) or pi/2
(quarter) and alpha = theta + pi/2 the fast-axis angle from horizontal.
All observable rates are independent of the global phase this fixes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

UNITARY_ATOL = 1e-10

MODE_INDEX = {
    ("A", "H"): 0,
    ("A", "V"): 1,
    ("B", "H"): 2,
    ("B", "V"): 3,
    ("C", "H"): 0,
    ("C", "V"): 1,
    ("D", "H"): 2,
    ("D", "V"): 3,
}

#: Supported beam-splitter phase conventions.  "symmetric" places a factor i
#: on both reflections; "asymmetric" uses real entries with a pi phase on the
#: B->D path.  Coincidence statistics are identical for any lossless choice.
CONVENTIONS = ("symmetric", "asymmetric")


@dataclass(frozen=True)
class CouplerSpec:
    """Polarization-dependent beam splitter: reflectivities per polarization.

    Transmissivities are 1 - r (lossless model)."""

    r_h: float
    r_v: float

    def __post_init__(self):
        for name, r in (("r_h", self.r_h), ("r_v", self.r_v)):
            if not 0.0 <= r <= 1.0:
                raise ValidationError(f"{name}={r} outside [0, 1]")

    @property
    def t_h(self) -> float:
        return 1.0 - self.r_h

    @property
    def t_v(self) -> float:
        return 1.0 - self.r_v


@dataclass(frozen=True)
class WaveplateSpec:
    """A half or quarter waveplate at angle ``theta`` (radians, from vertical)."""

    kind: str
    theta: float

    def __post_init__(self):
        if self.kind not in ("half", "quarter"):
            raise ValidationError(f"waveplate kind must be 'half' or 'quarter', got {self.kind!r}")
        object.__setattr__(self, "theta", self.theta % math.pi)


def _bs_block(t: float, r: float, convention: str) -> np.ndarray:
    st, sr = math.sqrt(t), math.sqrt(r)
    if convention == "symmetric":
        return np.array([[st, 1.0j * sr], [1.0j * sr, st]])
    if convention == "asymmetric":
        return np.array([[st, sr], [sr, -st]], dtype=complex)
    raise ValidationError(f"unknown coupler phase convention {convention!r}")


def coupler_transform(spec: CouplerSpec, convention: str = "symmetric") -> np.ndarray:
    """4x4 unitary of the coupler, block-diagonal over polarization.

    Per polarization p: a_{A,p} -> sqrt(t_p) a_{C,p} + i sqrt(r_p) a_{D,p}
    and a_{B,p} -> i sqrt(r_p) a_{C,p} + sqrt(t_p) a_{D,p} in the default
    symmetric convention.  H<->V mixing entries are exactly zero.
    """
    u = np.zeros((4, 4), dtype=complex)
    for pol, (t, r) in (("H", (spec.t_h, spec.r_h)), ("V", (spec.t_v, spec.r_v))):
        block = _bs_block(t, r, convention)
        a, b = MODE_INDEX[("A", pol)], MODE_INDEX[("B", pol)]
        c, d = MODE_INDEX[("C", pol)], MODE_INDEX[("D", pol)]
        u[c, a], u[d, a] = block[0, 0], block[1, 0]
        u[c, b], u[d, b] = block[0, 1], block[1, 1]
    return u


def validate_mode_transform(u: np.ndarray) -> np.ndarray:
    """Check U is a 4x4 unitary within 1e-10 and return it as complex."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValidationError(f"mode transform must be 4x4, got {u.shape}")
    if not np.allclose(u.conj().T @ u, np.eye(4), atol=UNITARY_ATOL, rtol=0.0):
        raise ValidationError("mode transform is not unitary within 1e-10")
    return u


def _rotation(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]], dtype=complex)


def waveplate_jones(spec: WaveplateSpec) -> np.ndarray:
    """2x2 Jones matrix of the waveplate (det = 1, unitary within 1e-12)."""
    gamma = math.pi if spec.kind == "half" else math.pi / 2.0
    alpha = spec.theta + math.pi / 2.0
    rot = _rotation(alpha)
    core = np.diag([np.exp(-0.5j * gamma), np.exp(0.5j * gamma)])
    return rot @ core @ rot.conj().T


def apply_local(element: np.ndarray, mode: str, state: np.ndarray) -> np.ndarray:
    """Apply a 2x2 unitary to the polarization qubit on spatial mode A or B."""
    element = np.asarray(element, dtype=complex)
    if element.shape != (2, 2):
        raise ValidationError(f"local element must be 2x2, got {element.shape}")
    if not np.allclose(element.conj().T @ element, np.eye(2), atol=UNITARY_ATOL, rtol=0.0):
        raise ValidationError("local element is not unitary within 1e-10")
    mode = mode.upper()
    if mode not in ("A", "B"):
        raise ValidationError(f"mode must be 'A' or 'B', got {mode!r}")
    state = np.asarray(state, dtype=complex)
    if state.shape != (4,):
        raise ValidationError(f"two-photon state must have 4 amplitudes, got {state.shape}")
    full = np.kron(element, np.eye(2)) if mode == "A" else np.kron(np.eye(2), element)
    return full @ state
