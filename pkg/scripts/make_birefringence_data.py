#!/usr/bin/env python3
"""Regenerate the bundled synthetic birefringence measurement tables.

Writes one six-eigenstate intensity CSV per sample length for a waveguide
with B = 7e-5, fast axis on the horizontal (TE) polarization, probed at
806 nm.  Intensities are the noiseless projection values I = (1 + s_in .
M s_proj)/2 scaled to a nominal detector power.
"""

import math
from pathlib import Path

from bellsplit.birefringence import (
    INPUT_LABELS,
    RetarderParams,
    STOKES,
    measurements_to_csv,
    retarder_mueller,
    total_retardance,
)

B = 7e-5
WAVELENGTH_NM = 806.0
LENGTHS_MM = (6.0, 12.0, 18.0, 24.0)
POWER_UW = 120.0  # nominal detected power scale


def projection_intensity(s_out, label):
    s_proj = STOKES[label]
    return 0.5 * (s_out[0] + s_proj[1] * s_out[1] + s_proj[2] * s_out[2] + s_proj[3] * s_out[3])


def main():
    out_dir = Path(__file__).resolve().parents[1] / "configs" / "data"
    out_dir.mkdir(parents=True, exist_ok=True)
    for length in LENGTHS_MM:
        delta = total_retardance(B, length, WAVELENGTH_NM) % (2.0 * math.pi)
        mueller = retarder_mueller(RetarderParams(delta, theta=0.0))
        table = {}
        for state in INPUT_LABELS:
            s_out = mueller @ STOKES[state]
            table[state] = {
                proj: POWER_UW * projection_intensity(s_out, proj)
                for proj in INPUT_LABELS
            }
        path = out_dir / f"bire_L{int(length):02d}mm.csv"
        measurements_to_csv(table, path)
        print(path)


if __name__ == "__main__":
    main()
