"""Bell basis, density-matrix validation and entanglement metrics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellsplit.errors import ValidationError
from bellsplit.states import (
    bell_state,
    concurrence,
    density_matrix_from_json,
    density_matrix_to_json,
    fidelity_pure,
    linear_entropy,
    partial_trace,
    pure_density,
    purity,
    trace_distance,
    validate_density_matrix,
    werner_state,
)

from conftest import random_density, random_pure_state, random_unitary

SQ2 = 1.0 / math.sqrt(2.0)


class TestBellStates:
    def test_psi_minus_amplitudes(self):
        np.testing.assert_allclose(
            bell_state("psi_minus"), [0.0, SQ2, -SQ2, 0.0], atol=1e-15
        )

    def test_phi_plus_amplitudes(self):
        np.testing.assert_allclose(
            bell_state("phi_plus"), [SQ2, 0.0, 0.0, SQ2], atol=1e-15
        )

    def test_psi_i_amplitudes(self):
        np.testing.assert_allclose(
            bell_state("psi_i"), [0.0, SQ2, -1j * SQ2, 0.0], atol=1e-15
        )

    @pytest.mark.parametrize(
        "label", ["psi_minus", "psi_plus", "phi_plus", "phi_minus", "psi_i", "phi_i"]
    )
    def test_normalized(self, label):
        assert np.linalg.norm(bell_state(label)) == pytest.approx(1.0, abs=1e-12)

    def test_unknown_label(self):
        with pytest.raises(ValidationError):
            bell_state("psi_zero")


class TestValidation:
    def test_rejects_non_hermitian(self):
        rho = np.eye(4, dtype=complex) / 4
        rho[0, 1] = 0.1
        with pytest.raises(ValidationError, match="Hermitian"):
            validate_density_matrix(rho)

    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError, match="trace"):
            validate_density_matrix(np.eye(4) / 3.9)

    def test_rejects_negative_eigenvalue(self):
        rho = np.diag([0.6, 0.5, -0.1, 0.0]).astype(complex)
        with pytest.raises(ValidationError, match="eigenvalue"):
            validate_density_matrix(rho)

    def test_accepts_tiny_negative_slack(self):
        rho = np.diag([0.5, 0.5, 0.0, -0.5e-9]).astype(complex)
        rho[3, 3] += 0.5e-9  # keep unit trace
        validate_density_matrix(rho)


class TestFidelity:
    def test_projector_onto_itself(self):
        psi = bell_state("psi_minus")
        assert fidelity_pure(pure_density(psi), psi) == pytest.approx(1.0, abs=1e-10)

    def test_maximally_mixed(self):
        assert fidelity_pure(np.eye(4) / 4, bell_state("psi_minus")) == pytest.approx(
            0.25, abs=1e-12
        )

    def test_werner(self):
        # F(Werner(p), psi-) = (3p + 1)/4; independent matrix arithmetic below
        rho = werner_state(0.9)
        psi = bell_state("psi_minus")
        assert fidelity_pure(rho, psi) == pytest.approx(0.925, abs=1e-12)
        direct = np.real(psi.conj() @ rho @ psi)
        assert fidelity_pure(rho, psi) == pytest.approx(direct, abs=1e-12)

    def test_invalid_rho_rejected(self):
        with pytest.raises(ValidationError):
            fidelity_pure(np.eye(4), bell_state("psi_minus"))


class TestConcurrence:
    def test_singlet(self):
        assert concurrence(pure_density(bell_state("psi_minus"))) == pytest.approx(
            1.0, abs=1e-10
        )

    def test_maximally_mixed(self):
        assert concurrence(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("p", np.linspace(0.0, 1.0, 20))
    def test_werner_closed_form(self, p):
        assert concurrence(werner_state(p)) == pytest.approx(
            max(0.0, (3.0 * p - 1.0) / 2.0), abs=1e-9
        )

    def test_against_uhlmann_oracle(self):
        # independent route: C = max(0, 2 max_i l_i - sum l_i) with l_i the
        # singular values of sqrt(rho) (sy x sy) sqrt(rho)^T
        from scipy.linalg import sqrtm

        sy = np.array([[0, -1j], [1j, 0]])
        yy = np.kron(sy, sy)
        rng = np.random.default_rng(7)
        for _ in range(25):
            rho = random_density(rng)
            root = sqrtm(rho)
            lam = np.linalg.svd(root @ yy @ root.T, compute_uv=False)
            expected = max(0.0, 2.0 * lam.max() - lam.sum())
            assert concurrence(rho) == pytest.approx(expected, abs=1e-9)

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            rho = random_density(rng)
            u = np.kron(random_unitary(rng), random_unitary(rng))
            rotated = u @ rho @ u.conj().T
            assert concurrence(rotated) == pytest.approx(concurrence(rho), abs=1e-9)


class TestLinearEntropy:
    def test_pure_state(self):
        assert linear_entropy(pure_density(bell_state("phi_plus"))) == pytest.approx(
            0.0, abs=1e-10
        )

    def test_maximally_mixed(self):
        assert linear_entropy(np.eye(4) / 4) == pytest.approx(1.0, abs=1e-12)

    def test_werner(self):
        # Tr rho^2 = (3 p^2 + 1)/4 for the Werner family, so at p = 0.9 the
        # normalized linear entropy is (4/3)(1 - 0.8575) = 0.19; matrix
        # arithmetic oracle alongside
        rho = werner_state(0.9)
        tr_sq = float(np.real(np.trace(rho @ rho)))
        assert tr_sq == pytest.approx((3 * 0.81 + 1) / 4, abs=1e-12)
        assert linear_entropy(rho) == pytest.approx(0.19, abs=1e-12)
        assert linear_entropy(rho) == pytest.approx((4 / 3) * (1 - tr_sq), abs=1e-12)

    def test_zero_iff_pure(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            rho = random_density(rng)
            is_pure = purity(rho) == pytest.approx(1.0, abs=1e-10)
            is_zero = linear_entropy(rho) == pytest.approx(0.0, abs=1e-10)
            assert is_pure == is_zero
        psi = random_pure_state(rng)
        assert linear_entropy(pure_density(psi)) == pytest.approx(0.0, abs=1e-10)


class TestPurityAndPartialTrace:
    def test_purity_mixed(self):
        assert purity(np.eye(4) / 4) == pytest.approx(0.25, abs=1e-12)

    def test_purity_pure(self):
        assert purity(pure_density(bell_state("phi_plus"))) == pytest.approx(
            1.0, abs=1e-12
        )

    @pytest.mark.parametrize("subsystem", [0, 1])
    def test_singlet_reduces_to_mixed(self, subsystem):
        reduced = partial_trace(pure_density(bell_state("psi_minus")), subsystem)
        np.testing.assert_allclose(reduced, np.eye(2) / 2, atol=1e-12)

    def test_reduced_state_properties(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            rho = random_density(rng)
            for sub in (0, 1):
                red = partial_trace(rho, sub)
                assert np.trace(red).real == pytest.approx(1.0, abs=1e-10)
                np.testing.assert_allclose(red, red.conj().T, atol=1e-10)

    def test_bad_subsystem(self):
        with pytest.raises(ValidationError):
            partial_trace(np.eye(4) / 4, 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_pure_state_fidelity_is_one(seed):
    rng = np.random.default_rng(seed)
    psi = random_pure_state(rng)
    assert fidelity_pure(pure_density(psi), psi) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_metrics_land_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, rank=int(rng.integers(1, 5)))
    for value in (
        concurrence(rho),
        linear_entropy(rho),
        purity(rho),
        fidelity_pure(rho, bell_state("psi_minus")),
    ):
        assert 0.0 <= value <= 1.0


class TestJsonRoundTrip:
    def test_round_trip_tolerance(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            rho = random_density(rng)
            back = density_matrix_from_json(density_matrix_to_json(rho))
            assert np.max(np.abs(back - rho)) < 1e-12

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValidationError):
            density_matrix_from_json("[[1, 2], [3, 4]]")


def test_trace_distance_basics():
    rho = pure_density(bell_state("psi_minus"))
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)
    sigma = pure_density(bell_state("phi_plus"))
    assert trace_distance(rho, sigma) == pytest.approx(1.0, abs=1e-10)
