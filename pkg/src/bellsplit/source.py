"""Abstract entangled-pair source with preparation presets.

The source itself is ideal; imperfections are carried by the
indistinguishability mu and by a systematic waveplate angle offset applied
to every preparation waveplate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .elements import WaveplateSpec, apply_local, waveplate_jones
from .errors import ValidationError
from .interference import TwoPhotonInput
from .states import bell_state, ket, normalize

#: Preset name -> builder of the base two-photon polarization state.
PRESET_STATES = {
    "psi_plus": lambda: bell_state("psi_plus"),
    "psi_i": lambda: bell_state("psi_i"),
    "hh": lambda: np.kron(ket("H"), ket("H")),
    "vv": lambda: np.kron(ket("V"), ket("V")),
    "pp": lambda: np.kron(ket("D"), ket("D")),
    "hv_separable": lambda: np.kron(ket("H"), ket("V")),
}

PRESET_DESCRIPTIONS = {
    "psi_plus": "Bell state (|HV> + |VH>)/sqrt(2)",
    "psi_i": "Bell-type state (|HV> - i|VH>)/sqrt(2)",
    "hh": "separable |H>_A |H>_B",
    "vv": "separable |V>_A |V>_B",
    "pp": "separable |+>_A |+>_B (both at +45 deg)",
    "hv_separable": "separable |H>_A |V>_B (singlet-filter input)",
    "custom": "explicit amplitudes over (HH, HV, VH, VV)",
}


@dataclass(frozen=True)
class SourcePreset:
    """Named base state plus imperfection knobs.

    ``waveplate_error`` is a systematic offset (radians) added to the nominal
    angle of every preparation waveplate.
    """

    base_state: str = "psi_plus"
    mu: float = 1.0
    waveplate_error: float = 0.0
    amplitudes: tuple | None = None  # required when base_state == "custom"

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValidationError(f"mu={self.mu} outside [0, 1]")
        if self.base_state == "custom":
            if self.amplitudes is None:
                raise ValidationError("custom preset requires 4 amplitudes")
            amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
            if amps.shape != (4,) or np.linalg.norm(amps) < 1e-12:
                raise ValidationError("custom amplitudes must be 4 numbers with nonzero norm")
        elif self.base_state not in PRESET_STATES:
            raise ValidationError(
                f"unknown preset {self.base_state!r}; expected one of "
                f"{sorted(PRESET_DESCRIPTIONS)}"
            )

    def state(self) -> np.ndarray:
        if self.base_state == "custom":
            return normalize(np.asarray(self.amplitudes, dtype=complex).reshape(4))
        return PRESET_STATES[self.base_state]()


def prepare(
    preset: SourcePreset,
    waveplates: Sequence[tuple[str, str, float]] = (),
) -> TwoPhotonInput:
    """Build the input photon pair: base state, then optional waveplates.

    ``waveplates`` is an ordered list of (kind, mode, theta) entries, kind in
    {half, quarter}, mode in {A, B}; the preset's systematic angle error is
    added to each theta.
    """
    state = preset.state()
    for kind, mode, theta in waveplates:
        jones = waveplate_jones(WaveplateSpec(kind, theta + preset.waveplate_error))
        state = apply_local(jones, mode, state)
    return TwoPhotonInput(state, preset.mu)
