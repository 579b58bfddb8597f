"""Reconstruction, dispersion, and linearity-separation tests.

Oracles: round trips against the generating density matrix, hand-computed
projector dispersions (p - p^2 and the 1/4 superposition value), and the
eigenvalue nonadditivity of the Pauli pair (max eigenvalue of sx + sy is
sqrt(2), not 2).
"""

import math

import numpy as np
import pytest

from dispersionless.expectation_functionals import (
    AdditivityViolation,
    DensityMatrix,
    ExpectationFunctional,
    LIN_TOL,
    NormalizationViolation,
    PositivityViolation,
    PureState,
    canonical_noncommuting_probes,
    check_linearity,
    dispersion,
    dispersion_witness,
    hermitian_basis,
    max_eigenvalue_functional,
    pure_state_expectation,
    pure_state_functional,
    reconstruct_density,
    trace_functional,
)
from dispersionless.operator_core import (
    HermitianOperator,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    ValidationError,
    frobenius,
    random_hermitian,
)

RNG = np.random.default_rng


class TestPureState:
    def test_norm_enforced(self):
        with pytest.raises(ValidationError):
            PureState([1.0, 1.0])

    def test_normalized_constructor(self):
        phi = PureState.normalized([1.0, 1.0])
        assert abs(np.linalg.norm(phi.vector) - 1.0) <= 1e-15

    def test_labels(self):
        assert np.allclose(PureState.from_label("z+").vector, [1, 0])
        xp = PureState.from_label("x+")
        assert np.allclose(xp.vector, [1 / math.sqrt(2), 1 / math.sqrt(2)])
        with pytest.raises(ValidationError):
            PureState.from_label("w+")

    def test_bloch_vectors(self):
        np.testing.assert_allclose(PureState.from_label("z+").bloch(), [0, 0, 1], atol=1e-15)
        np.testing.assert_allclose(PureState.from_label("x-").bloch(), [-1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(PureState.from_label("y+").bloch(), [0, 1, 0], atol=1e-15)

    def test_bloch_requires_dim2(self):
        with pytest.raises(ValidationError):
            PureState.basis_state(3, 0).bloch()


class TestDensityMatrix:
    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError, match="negative eigenvalue"):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError, match="trace"):
            DensityMatrix(np.diag([0.7, 0.7]))

    def test_random_is_valid(self):
        rng = RNG(1)
        for dim in (2, 3, 5):
            u = DensityMatrix.random(dim, rng)
            assert abs(u.operator.trace() - 1.0) <= 1e-12
            assert u.spectrum.eigenvalues.min() >= -1e-12


class TestHermitianBasis:
    def test_dim1(self):
        basis = hermitian_basis(1)
        assert len(basis) == 1
        np.testing.assert_allclose(basis[0].matrix, [[1.0]])

    def test_dim2_members(self):
        basis = hermitian_basis(2)
        assert len(basis) == 4
        np.testing.assert_allclose(basis[0].matrix, np.diag([1.0, 0.0]))
        np.testing.assert_allclose(basis[1].matrix, np.diag([0.0, 1.0]))
        np.testing.assert_allclose(basis[2].matrix, SIGMA_X)
        # the imaginary cross term is minus sigma-y in this convention
        np.testing.assert_allclose(basis[3].matrix, -SIGMA_Y)

    def test_dim3_spans(self):
        basis = hermitian_basis(3)
        assert len(basis) == 9
        gram = np.array([
            [np.trace(a.matrix @ b.matrix).real for b in basis] for a in basis
        ])
        assert np.linalg.matrix_rank(gram) == 9


class TestReconstruction:
    def test_round_trip_dim4(self):
        rng = RNG(2)
        u0 = DensityMatrix.random(4, rng)
        out = reconstruct_density(trace_functional(u0))
        assert frobenius(out.matrix - u0.matrix) <= 1e-10

    @pytest.mark.parametrize("dim", [2, 3, 5, 6])
    def test_round_trip_other_dims(self, dim):
        rng = RNG(30 + dim)
        for _ in range(5):
            u0 = DensityMatrix.random(dim, rng)
            out = reconstruct_density(trace_functional(u0))
            assert frobenius(out.matrix - u0.matrix) <= 1e-10

    def test_pure_state_functional(self):
        out = reconstruct_density(pure_state_functional(PureState.from_label("z+")))
        np.testing.assert_allclose(out.matrix, np.diag([1.0, 0.0]), atol=1e-12)

    def test_max_eigenvalue_violates_additivity(self):
        with pytest.raises(AdditivityViolation, match="violates B'"):
            reconstruct_density(max_eigenvalue_functional(2))

    def test_linear_indefinite_violates_positivity(self):
        f = trace_functional(HermitianOperator(np.diag([1.5, -0.5])))
        with pytest.raises(PositivityViolation, match="violates A'") as exc:
            reconstruct_density(f)
        assert abs(exc.value.eigenvalue + 0.5) <= 1e-9

    def test_unnormalized_violates_normalization(self):
        u0 = DensityMatrix.maximally_mixed(2)
        f = ExpectationFunctional(2, lambda r: 1.2 * np.trace(u0.matrix @ r.matrix).real)
        with pytest.raises(NormalizationViolation, match="violates A'") as exc:
            reconstruct_density(f)
        assert abs(exc.value.value - 1.2) <= 1e-12

    def test_additivity_violation_json(self):
        with pytest.raises(AdditivityViolation) as exc:
            reconstruct_density(max_eigenvalue_functional(2))
        obj = exc.value.to_json()
        assert obj["kind"] == "b-prime-violation"
        assert obj["probe"]["dim"] == 2
        assert abs(obj["delta"] - (obj["lhs"] - obj["rhs"])) == 0.0


class TestCheckLinearity:
    def test_trace_form_is_additive_everywhere(self):
        rng = RNG(3)
        u0 = DensityMatrix.random(3, rng)
        report = check_linearity(trace_functional(u0), trials=40, seed=9)
        assert report.unrestricted_max_deviation <= 1e-10
        assert report.commuting_max_deviation <= 1e-10
        assert not report.unrestricted_exceeds_tol
        assert not report.commuting_exceeds_tol

    def test_max_eigenvalue_separation(self):
        report = check_linearity(max_eigenvalue_functional(2), trials=60, seed=11)
        # oracle: max-eig(sx + sy) = sqrt(2) while max-eig(sx) + max-eig(sy) = 2
        assert report.unrestricted_max_deviation >= 2.0 - math.sqrt(2) - 1e-12
        assert report.commuting_max_deviation <= 1e-10
        assert report.unrestricted_exceeds_tol
        assert not report.commuting_exceeds_tol

    def test_normalized_trace_functional(self):
        f = ExpectationFunctional(2, lambda r: r.trace() / 2.0)
        report = check_linearity(f, trials=20, seed=5)
        assert report.unrestricted_max_deviation <= 1e-12
        assert report.commuting_max_deviation <= 1e-12

    def test_trials_validated(self):
        with pytest.raises(ValidationError):
            check_linearity(max_eigenvalue_functional(2), trials=0, seed=1)


class TestDispersion:
    def test_eigenstate_has_none(self):
        f = pure_state_functional(PureState.from_label("z+"))
        assert abs(dispersion(f, HermitianOperator(SIGMA_Z))) <= 1e-12

    def test_transverse_operator_has_unit_dispersion(self):
        f = pure_state_functional(PureState.from_label("z+"))
        assert abs(dispersion(f, HermitianOperator(SIGMA_X)) - 1.0) <= 1e-12

    def test_maximally_mixed_sigma_z(self):
        f = trace_functional(DensityMatrix.maximally_mixed(2))
        assert abs(dispersion(f, HermitianOperator(SIGMA_Z)) - 1.0) <= 1e-12

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_trace_form_dispersion_nonnegative(self, dim):
        rng = RNG(40 + dim)
        for _ in range(20):
            u = DensityMatrix.random(dim, rng)
            f = trace_functional(u)
            op = random_hermitian(dim, rng)
            assert dispersion(f, op) >= -LIN_TOL


class TestDispersionWitness:
    def test_pure_qubit(self):
        u = DensityMatrix.pure(PureState.from_label("z+"))
        witness, d = dispersion_witness(u)
        assert abs(d - 0.25) <= 1e-12
        # the witness projects onto an equal superposition of phi and
        # an orthogonal companion
        assert abs(np.trace(u.matrix @ witness.matrix).real - 0.5) <= 1e-12

    def test_maximally_mixed_qubit(self):
        u = DensityMatrix.maximally_mixed(2)
        witness, d = dispersion_witness(u)
        assert abs(d - 0.25) <= 1e-12
        np.testing.assert_allclose(witness.matrix, np.diag([1.0, 0.0]), atol=1e-12)

    def test_pure_dim3(self):
        u = DensityMatrix(np.diag([1.0, 0.0, 0.0]))
        _, d = dispersion_witness(u)
        assert abs(d - 0.25) <= 1e-12

    def test_dim1_has_no_witness(self):
        with pytest.raises(ValidationError, match="dimension 1"):
            dispersion_witness(DensityMatrix([[1.0]]))

    @pytest.mark.parametrize("dim", [2, 3, 4, 5, 6])
    def test_witness_lower_bound(self, dim):
        rng = RNG(50 + dim)
        for _ in range(20):
            u = DensityMatrix.random(dim, rng)
            _, d = dispersion_witness(u)
            p = u.spectrum.eigenvalues[
                int(np.argmin(np.abs(u.spectrum.eigenvalues - 0.5)))
            ]
            assert d >= min(0.25, p - p * p) - LIN_TOL
            assert d > 0.0


class TestPureStateExpectation:
    def test_eigenstate(self):
        assert pure_state_expectation(
            PureState.from_label("z+"), HermitianOperator(SIGMA_Z)
        ) == 1.0

    def test_x_eigenstate(self):
        val = pure_state_expectation(
            PureState.from_label("x+"), HermitianOperator(SIGMA_X)
        )
        assert abs(val - 1.0) <= 1e-12

    def test_additivity_is_exact_for_this_case(self):
        phi = PureState.from_label("z+")
        combined = pure_state_expectation(phi, HermitianOperator(SIGMA_X + SIGMA_Y))
        separate = pure_state_expectation(
            phi, HermitianOperator(SIGMA_X)
        ) + pure_state_expectation(phi, HermitianOperator(SIGMA_Y))
        assert combined == 0.0
        assert combined == separate

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_bilinear_additivity_any_pair(self, dim):
        # the inner-product form is additive for arbitrary operator pairs,
        # commuting or not
        rng = RNG(60 + dim)
        for _ in range(20):
            v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            phi = PureState.normalized(v)
            r = random_hermitian(dim, rng)
            s = random_hermitian(dim, rng)
            lhs = pure_state_expectation(phi, r + s)
            rhs = pure_state_expectation(phi, r) + pure_state_expectation(phi, s)
            assert abs(lhs - rhs) <= 1e-12

    def test_dim_mismatch(self):
        with pytest.raises(ValidationError):
            pure_state_expectation(PureState.basis_state(3, 0), HermitianOperator(SIGMA_X))


class TestTraceFormLinearity:
    @pytest.mark.parametrize("dim", [2, 3])
    def test_additive_on_noncommuting_pairs(self, dim):
        # the quantum peculiarity: trace forms are additive even where the
        # operators fail to commute
        rng = RNG(70 + dim)
        u = DensityMatrix.random(dim, rng)
        f = trace_functional(u)
        probes = canonical_noncommuting_probes(dim)
        lhs = f(probes[2])
        rhs = f(probes[0]) + f(probes[1])
        assert abs(lhs - rhs) <= 1e-12
