import numpy as np
import pytest

from zenolab import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityOperator,
    DimensionMismatchError,
    Operator,
    StateVector,
    StructuralError,
    commutator_norm,
    evolve,
    max_abs,
    projector_onto,
    propagator,
    spectral_decompose,
)
from helpers import expm_propagator, random_density_matrix, random_hermitian


class TestOperatorTags:
    def test_hermitian_tag_rejects_skew(self):
        with pytest.raises(StructuralError):
            Operator(np.array([[0.0, 1.0], [0.0, 0.0]]), kind="hermitian")

    def test_unitary_tag_rejects_contraction(self):
        with pytest.raises(StructuralError):
            Operator(0.5 * np.eye(2), kind="unitary")

    def test_projector_tag_rejects_non_idempotent(self):
        with pytest.raises(StructuralError):
            Operator(np.array([[0.5, 0.0], [0.0, 0.0]]), kind="projector")

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            Operator(np.eye(2), kind="positive")

    def test_non_square_rejected(self):
        with pytest.raises(StructuralError):
            Operator(np.ones((2, 3)))

    def test_entries_are_read_only(self):
        op = Operator.identity(3)
        with pytest.raises(ValueError):
            op.entries[0, 0] = 5.0

    def test_identity(self):
        op = Operator.identity(4)
        assert op.kind == "projector"
        assert op.dim == 4
        assert max_abs(op.entries - np.eye(4)) == 0.0


def test_projector_onto_normalizes():
    p = projector_onto([3.0, 4.0j])
    m = p.entries
    assert np.isclose(np.trace(m).real, 1.0)
    assert max_abs(m @ m - m) < 1e-12
    assert p.kind == "projector"


def test_projector_onto_zero_vector():
    with pytest.raises(StructuralError):
        projector_onto([0.0, 0.0])


class TestStates:
    def test_state_vector_unit_norm_required(self):
        with pytest.raises(StructuralError):
            StateVector(np.array([1.0, 1.0]))

    def test_state_vector_normalized(self):
        psi = StateVector.normalized([1.0, 1.0j])
        assert np.isclose(np.linalg.norm(psi.amplitudes), 1.0)
        rho = psi.density()
        assert np.isclose(rho.purity, 1.0)

    def test_density_trace_enforced(self):
        with pytest.raises(StructuralError):
            DensityOperator.from_matrix(2.0 * np.eye(2) / 2.0)

    def test_density_positivity_enforced(self):
        with pytest.raises(StructuralError):
            DensityOperator.from_matrix(np.diag([1.5, -0.5]))

    def test_pure_state_purity(self):
        rho = DensityOperator.pure([1.0, 0.0, 0.0])
        assert np.isclose(rho.purity, 1.0)

    def test_maximally_mixed(self):
        rho = DensityOperator.maximally_mixed(4)
        assert np.isclose(rho.purity, 0.25)
        assert max_abs(rho.matrix - np.eye(4) / 4.0) < 1e-15

    def test_random_densities_accepted(self, rng):
        for dim in (2, 3, 5):
            rho = DensityOperator.from_matrix(random_density_matrix(rng, dim))
            assert rho.dim == dim
            assert 1.0 / dim - 1e-12 <= rho.purity <= 1.0 + 1e-12


class TestPropagator:
    """The spectral route must agree with an independent matrix exponential."""

    @pytest.mark.parametrize("dim", [2, 3, 4, 6])
    @pytest.mark.parametrize("t", [0.0, 0.3, -2.5, 17.0])
    def test_matches_expm(self, rng, dim, t):
        h = Operator(random_hermitian(rng, dim), kind="hermitian")
        u = propagator(h, t)
        assert max_abs(u.entries - expm_propagator(h.entries, t)) < 1e-12

    def test_hbar_scaling(self, rng):
        h = Operator(random_hermitian(rng, 3), kind="hermitian")
        assert max_abs(propagator(h, 2.0, hbar=2.0).entries - propagator(h, 1.0).entries) < 1e-12

    def test_result_is_tagged_unitary(self, rng):
        h = Operator(random_hermitian(rng, 4), kind="hermitian")
        assert propagator(h, 1.7).kind == "unitary"

    def test_rejects_nonpositive_hbar(self, rng):
        h = Operator(random_hermitian(rng, 2), kind="hermitian")
        with pytest.raises(ValueError):
            propagator(h, 1.0, hbar=0.0)

    def test_general_tag_with_hermitian_entries_accepted(self, rng):
        m = random_hermitian(rng, 3)
        assert propagator(Operator(m), 0.5).dim == 3

    def test_rejects_non_hermitian_generator(self):
        with pytest.raises(StructuralError):
            propagator(Operator(np.array([[0.0, 1.0], [0.0, 0.0]])), 1.0)


class TestEvolve:
    def test_round_trip(self, rng):
        h = Operator(random_hermitian(rng, 3), kind="hermitian")
        rho = DensityOperator.from_matrix(random_density_matrix(rng, 3))
        back = evolve(evolve(rho, h, 0.8), h, -0.8)
        assert max_abs(back.matrix - rho.matrix) < 1e-12

    def test_purity_preserved(self, rng):
        h = Operator(random_hermitian(rng, 4), kind="hermitian")
        rho = DensityOperator.from_matrix(random_density_matrix(rng, 4, rank=2))
        assert np.isclose(evolve(rho, h, 3.1).purity, rho.purity, atol=1e-12)

    def test_dimension_mismatch(self, rng):
        h = Operator(random_hermitian(rng, 3), kind="hermitian")
        rho = DensityOperator.maximally_mixed(2)
        with pytest.raises(DimensionMismatchError):
            evolve(rho, h, 1.0)


def test_commutator_norm_pauli_algebra():
    # [sx, sy] = 2i sz, so the max-modulus norm is exactly 2
    sx = Operator(SIGMA_X, kind="hermitian")
    sy = Operator(SIGMA_Y, kind="hermitian")
    assert np.isclose(commutator_norm(sx, sy), 2.0)
    assert commutator_norm(sx, sx) == 0.0


def test_commutator_norm_diagonal_matrices_commute(rng):
    a = Operator(np.diag(rng.normal(size=5)), kind="hermitian")
    b = Operator(np.diag(rng.normal(size=5)), kind="hermitian")
    assert commutator_norm(a, b) == 0.0


class TestSpectralDecompose:
    def test_reconstruction_and_orthogonality(self, rng):
        h = Operator(random_hermitian(rng, 5), kind="hermitian")
        parts = spectral_decompose(h)
        rebuilt = sum(val * proj.entries for val, proj in parts)
        assert max_abs(rebuilt - h.entries) < 1e-10
        total = sum(proj.entries for _, proj in parts)
        assert max_abs(total - np.eye(5)) < 1e-10
        for i, (_, p) in enumerate(parts):
            for j, (_, q) in enumerate(parts):
                prod = p.entries @ q.entries
                expected = p.entries if i == j else 0.0
                assert max_abs(prod - expected) < 1e-10

    def test_degenerate_levels_merged(self):
        h = Operator(np.diag([1.0, 1.0, 2.0]), kind="hermitian")
        parts = spectral_decompose(h)
        assert len(parts) == 2
        ranks = sorted(round(np.trace(p.entries).real) for _, p in parts)
        assert ranks == [1, 2]

    def test_sigma_z_levels(self):
        parts = spectral_decompose(Operator(SIGMA_Z, kind="hermitian"))
        values = sorted(val for val, _ in parts)
        assert np.allclose(values, [-1.0, 1.0])
