"""Coupler transform and waveplate Jones matrices."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellsplit.elements import (
    CouplerSpec,
    WaveplateSpec,
    apply_local,
    coupler_transform,
    validate_mode_transform,
    waveplate_jones,
)
from bellsplit.errors import ValidationError
from bellsplit.states import bell_state

from conftest import random_pure_state


def assert_equal_up_to_phase(actual, expected, atol=1e-10):
    actual = np.asarray(actual, dtype=complex)
    expected = np.asarray(expected, dtype=complex)
    overlap = expected.conj() @ actual
    assert abs(abs(overlap) - 1.0) < atol, f"overlap modulus {abs(overlap)}"
    np.testing.assert_allclose(actual, overlap * expected, atol=atol)


class TestCouplerSpec:
    def test_transmissivities(self):
        spec = CouplerSpec(0.492, 0.581)
        assert spec.t_h == pytest.approx(0.508)
        assert spec.t_v == pytest.approx(0.419)

    @pytest.mark.parametrize("bad", [-0.1, 1.3])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValidationError):
            CouplerSpec(bad, 0.5)
        with pytest.raises(ValidationError):
            CouplerSpec(0.5, bad)


class TestCouplerTransform:
    def test_balanced_moduli(self):
        u = coupler_transform(CouplerSpec(0.5, 0.5))
        nonzero = np.abs(u)[np.abs(u) > 0]
        np.testing.assert_allclose(nonzero, 1 / math.sqrt(2), atol=1e-12)

    def test_fully_transmissive_is_identity(self):
        u = coupler_transform(CouplerSpec(0.0, 0.0))
        np.testing.assert_allclose(u, np.eye(4), atol=1e-12)

    def test_block_diagonal_no_polarization_mixing(self, device_coupler):
        u = coupler_transform(device_coupler)
        # H rides on indices 0/2, V on 1/3: all cross entries exactly zero
        for row in (0, 2):
            for col in (1, 3):
                assert u[row, col] == 0.0
                assert u[col, row] == 0.0

    @pytest.mark.parametrize("convention", ["symmetric", "asymmetric"])
    def test_unitary(self, device_coupler, convention):
        u = coupler_transform(device_coupler, convention)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-10)

    def test_unknown_convention(self, device_coupler):
        with pytest.raises(ValidationError):
            coupler_transform(device_coupler, "lossy")

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_unitary_for_all_reflectivities(self, r_h, r_v):
        u = coupler_transform(CouplerSpec(r_h, r_v))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-10)

    def test_validate_mode_transform_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            validate_mode_transform(np.diag([1.0, 1.0, 1.0, 0.5]))


class TestWaveplateJones:
    @pytest.mark.parametrize("kind", ["half", "quarter"])
    @pytest.mark.parametrize("theta", np.linspace(0, math.pi, 7))
    def test_unitary_det_one(self, kind, theta):
        j = waveplate_jones(WaveplateSpec(kind, theta))
        np.testing.assert_allclose(j.conj().T @ j, np.eye(2), atol=1e-12)
        assert np.linalg.det(j) == pytest.approx(1.0, abs=1e-12)

    def test_half_squares_to_identity_up_to_phase(self):
        for theta in np.linspace(0, math.pi, 11):
            j = waveplate_jones(WaveplateSpec("half", theta))
            assert_equal_up_to_phase((j @ j)[:, 0], np.array([1, 0]), atol=1e-10)
            assert_equal_up_to_phase((j @ j)[:, 1], np.array([0, 1]), atol=1e-10)

    def test_bad_kind(self):
        with pytest.raises(ValidationError):
            WaveplateSpec("third", 0.0)


class TestHwpOnPsiPlus:
    """The half waveplate on arm B turns psi+ into the
    -cos(2 theta) psi- + sin(2 theta) phi+ family (up to a global phase)."""

    def expected(self, theta):
        return -math.cos(2 * theta) * bell_state("psi_minus") + math.sin(
            2 * theta
        ) * bell_state("phi_plus")

    def test_theta_zero_gives_singlet(self):
        j = waveplate_jones(WaveplateSpec("half", 0.0))
        out = apply_local(j, "B", bell_state("psi_plus"))
        assert_equal_up_to_phase(out, bell_state("psi_minus"))

    def test_theta_pi_8_gives_phi_plus(self):
        j = waveplate_jones(WaveplateSpec("half", math.pi / 8))
        out = apply_local(j, "B", bell_state("psi_plus"))
        assert_equal_up_to_phase(out, bell_state("phi_plus"))

    @pytest.mark.parametrize("theta", np.linspace(0, math.pi, 17))
    def test_full_family(self, theta):
        j = waveplate_jones(WaveplateSpec("half", theta))
        out = apply_local(j, "B", bell_state("psi_plus"))
        assert_equal_up_to_phase(out, self.expected(theta))

    @pytest.mark.parametrize("theta", np.linspace(0, math.pi, 17))
    def test_two_term_decomposition_is_exhaustive(self, theta):
        j = waveplate_jones(WaveplateSpec("half", theta))
        out = apply_local(j, "B", bell_state("psi_plus"))
        w_singlet = abs(bell_state("psi_minus").conj() @ out) ** 2
        w_phi = abs(bell_state("phi_plus").conj() @ out) ** 2
        assert w_singlet + w_phi == pytest.approx(1.0, abs=1e-10)


class TestQwpOnPsiI:
    """The quarter waveplate on arm A turns psi_i into
    cos^2 t psi- - i sin^2 t psi+ + (e^{-i pi/4}/sqrt2) sin 2t phi_i."""

    def expected(self, theta):
        return (
            math.cos(theta) ** 2 * bell_state("psi_minus")
            - 1j * math.sin(theta) ** 2 * bell_state("psi_plus")
            + np.exp(-1j * math.pi / 4)
            / math.sqrt(2)
            * math.sin(2 * theta)
            * bell_state("phi_i")
        )

    def test_theta_zero_gives_singlet(self):
        j = waveplate_jones(WaveplateSpec("quarter", 0.0))
        out = apply_local(j, "A", bell_state("psi_i"))
        assert_equal_up_to_phase(out, bell_state("psi_minus"))

    @pytest.mark.parametrize("theta", np.linspace(0, math.pi, 17))
    def test_three_term_superposition(self, theta):
        j = waveplate_jones(WaveplateSpec("quarter", theta))
        out = apply_local(j, "A", bell_state("psi_i"))
        assert_equal_up_to_phase(out, self.expected(theta))


class TestApplyLocal:
    def test_identity_leaves_state(self):
        psi = bell_state("psi_plus")
        for mode in ("A", "B"):
            np.testing.assert_allclose(apply_local(np.eye(2), mode, psi), psi)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            apply_local(np.array([[1.0, 0.0], [0.0, 0.5]]), "A", bell_state("psi_plus"))

    def test_rejects_bad_mode(self):
        with pytest.raises(ValidationError):
            apply_local(np.eye(2), "C", bell_state("psi_plus"))

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2**32 - 1),
        st.sampled_from(["half", "quarter"]),
        st.floats(min_value=0.0, max_value=math.pi),
        st.sampled_from(["A", "B"]),
    )
    def test_norm_preserved(self, seed, kind, theta, mode):
        rng = np.random.default_rng(seed)
        psi = random_pure_state(rng)
        out = apply_local(waveplate_jones(WaveplateSpec(kind, theta)), mode, psi)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)
