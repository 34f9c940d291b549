"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's symmetric-matrix engine:
two-photon outputs are expanded monomial by monomial over the ten symmetric
Fock states, and classical routing is enumerated assignment by assignment.
"""

import numpy as np
import pytest

from bellsplit.elements import CouplerSpec, coupler_transform


@pytest.fixture
def device_coupler():
    """The measured splitting ratios of the reference device."""
    return CouplerSpec(0.492, 0.581)


@pytest.fixture
def balanced_coupler():
    return CouplerSpec(0.5, 0.5)


def random_density(rng, rank=4):
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.real(np.trace(rho))


def random_pure_state(rng):
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    return psi / np.linalg.norm(psi)


def random_unitary(rng, dim=2):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def oracle_two_photon_probs(state4, u):
    """Brute-force quantum outcome: expand the creation-operator monomials.

    Returns a dict {(m, n): probability} over sorted output-mode pairs,
    m <= n, with indices 0..3 = (C_H, C_V, D_H, D_V).
    """
    psi = np.asarray(state4, dtype=complex).reshape(2, 2)
    amp = {}
    for p in range(2):
        for q in range(2):
            if psi[p, q] == 0:
                continue
            col_a = u[:, p]
            col_b = u[:, 2 + q]
            for m in range(4):
                for n in range(4):
                    c = psi[p, q] * col_a[m] * col_b[n]
                    if c == 0:
                        continue
                    key = (min(m, n), max(m, n))
                    amp[key] = amp.get(key, 0.0) + c
    probs = {}
    for (m, n), c in amp.items():
        # (a_m^dag)^2 |0> = sqrt(2) |2_m>, so equal-mode amplitudes pick up
        # a factor sqrt(2) relative to the monomial coefficient
        probs[(m, n)] = (2.0 if m == n else 1.0) * abs(c) ** 2
    return probs


def oracle_quantum_coincidence(state4, coupler, convention="symmetric"):
    """Probability of one photon in C and one in D (indistinguishable case)."""
    u = coupler_transform(coupler, convention)
    probs = oracle_two_photon_probs(state4, u)
    c_modes, d_modes = {0, 1}, {2, 3}
    total = 0.0
    for (m, n), p in probs.items():
        if (m in c_modes) != (n in c_modes):
            total += p
    return total


def oracle_classical_coincidence(state4, coupler):
    """Fully distinguishable photons: enumerate the four routings per
    polarization component."""
    psi = np.asarray(state4, dtype=complex).reshape(2, 2)
    t = {0: coupler.t_h, 1: coupler.t_v}
    r = {0: coupler.r_h, 1: coupler.r_v}
    total = 0.0
    for p in range(2):
        for q in range(2):
            w = abs(psi[p, q]) ** 2
            if w == 0:
                continue
            for a_goes_c in (True, False):
                for b_goes_c in (True, False):
                    pa = t[p] if a_goes_c else r[p]
                    pb = r[q] if b_goes_c else t[q]
                    if a_goes_c != b_goes_c:
                        total += w * pa * pb
    return total
