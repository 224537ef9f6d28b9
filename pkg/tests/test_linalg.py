import numpy as np
import pytest

from trace_ratio_duality.errors import InstanceValidationError, NumericalError
from trace_ratio_duality.linalg import (
    EigenDecomposition,
    SpdMatrix,
    SymMatrix,
    check_decomposition,
    kron,
    max_eigenvalue,
    min_eigenvalue,
    pencil_lambda_max,
    sym_eigen,
    unvec,
    vec,
)

from .conftest import random_symmetric


class TestSymMatrix:
    def test_symmetrizes_input(self):
        m = SymMatrix([[1.0, 2.0], [0.0, 1.0]])
        np.testing.assert_array_equal(m.entries, [[1.0, 1.0], [1.0, 1.0]])

    def test_entries_are_read_only(self):
        m = SymMatrix(np.eye(2))
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5.0

    def test_rejects_non_square(self):
        with pytest.raises(InstanceValidationError):
            SymMatrix(np.ones((2, 3)))

    def test_rejects_nan(self):
        with pytest.raises(InstanceValidationError, match="non-finite"):
            SymMatrix([[1.0, np.nan], [np.nan, 1.0]])


class TestSpdMatrix:
    def test_cholesky_factor(self, rng):
        r = rng.standard_normal((4, 4))
        a = SpdMatrix.from_array(r @ r.T + np.eye(4))
        np.testing.assert_allclose(a.chol @ a.chol.T, a.entries, atol=1e-12)

    def test_indefinite_is_rejected_by_name(self):
        with pytest.raises(InstanceValidationError, match="A must be positive definite"):
            SpdMatrix.from_array(np.diag([1.0, -1.0]), name="A")

    def test_singular_is_rejected(self):
        with pytest.raises(InstanceValidationError, match="positive definite"):
            SpdMatrix.from_array(np.diag([1.0, 0.0]), name="G")


class TestSymEigen:
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_jacobi_matches_lapack(self, rng, n):
        m = random_symmetric(rng, n)
        jac = sym_eigen(m)
        np.testing.assert_allclose(jac.values, np.sort(np.linalg.eigvalsh(m))[::-1], atol=1e-11)
        check_decomposition(m, jac)

    def test_jacobi_converges_on_many_random_matrices(self, rng):
        for _ in range(500):
            n = int(rng.integers(2, 9))
            m = random_symmetric(rng, n)
            jac = sym_eigen(m)
            np.testing.assert_allclose(
                jac.values, np.sort(np.linalg.eigvalsh(m))[::-1], atol=1e-10 * max(1.0, np.linalg.norm(m))
            )

    def test_nearly_diagonal_input_converges(self):
        m = np.diag([4.0, 1.0, -2.0, 3.0]) + 1e-9 * np.ones((4, 4))
        eig = sym_eigen(m)
        np.testing.assert_allclose(eig.values, np.sort(np.linalg.eigvalsh(m))[::-1], atol=1e-12)
        check_decomposition(m, eig)

    def test_values_descending(self, rng):
        values = sym_eigen(random_symmetric(rng, 6)).values
        assert np.all(np.diff(values) <= 0)

    def test_diagonal(self):
        eig = sym_eigen(np.diag([2.0, -1.0, 5.0]))
        np.testing.assert_allclose(eig.values, [5.0, 2.0, -1.0])

    def test_repeated_eigenvalues(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        m = q @ np.diag([3.0, 3.0, 3.0, -1.0]) @ q.T
        eig = sym_eigen(m)
        np.testing.assert_allclose(eig.values, [3.0, 3.0, 3.0, -1.0], atol=1e-12)
        check_decomposition(m, eig)

    def test_sweep_cap_raises(self, rng):
        with pytest.raises(NumericalError, match="Jacobi"):
            sym_eigen(random_symmetric(rng, 6), max_sweeps=1, tol=1e-300)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            sym_eigen(np.eye(2), method="qr")

    def test_check_decomposition_flags_bad_vectors(self):
        bad = EigenDecomposition(values=np.array([1.0, 1.0]), vectors=np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(NumericalError):
            check_decomposition(np.eye(2), bad)

    def test_extreme_eigenvalues(self):
        m = np.diag([4.0, -2.0, 1.0])
        assert max_eigenvalue(m) == pytest.approx(4.0)
        assert min_eigenvalue(m) == pytest.approx(-2.0)
        assert min_eigenvalue(m, method="lapack") == pytest.approx(-2.0)


class TestKronecker:
    def test_mixed_product(self, rng):
        a, b = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
        c, d = rng.standard_normal((4, 2)), rng.standard_normal((2, 3))
        lhs = kron(a, c) @ kron(b, d)
        np.testing.assert_allclose(lhs, kron(a @ b, c @ d), rtol=1e-12, atol=1e-12)

    def test_vec_identity(self, rng):
        a, x, b = rng.standard_normal((3, 4)), rng.standard_normal((4, 2)), rng.standard_normal((2, 5))
        np.testing.assert_allclose(kron(b.T, a) @ vec(x), vec(a @ x @ b), rtol=1e-12, atol=1e-12)

    def test_trace_form_identity(self, rng):
        g, m = random_symmetric(rng, 2), random_symmetric(rng, 4)
        x = rng.standard_normal((4, 2))
        v = vec(x)
        assert np.trace(g @ x.T @ m @ x) == pytest.approx(v @ kron(g, m) @ v, rel=1e-12)

    def test_unvec_inverts_vec(self, rng):
        x = rng.standard_normal((3, 2))
        np.testing.assert_array_equal(unvec(vec(x), 3, 2), x)


class TestPencil:
    def test_matches_scipy(self, rng):
        from scipy.linalg import eigh

        r = rng.standard_normal((5, 5))
        a = r @ r.T + np.eye(5)
        b = random_symmetric(rng, 5)
        top = pencil_lambda_max(SpdMatrix.from_array(a), b)
        assert top.value == pytest.approx(eigh(b, a, eigvals_only=True)[-1], rel=1e-10)
        assert top.multiplicity == 1
        v = top.basis[:, 0]
        np.testing.assert_allclose(b @ v, top.value * a @ v, atol=1e-9)

    def test_multiplicity(self):
        top = pencil_lambda_max(SpdMatrix.from_array(np.eye(3)), np.diag([2.0, 2.0, 1.0]))
        assert top.value == pytest.approx(2.0)
        assert top.multiplicity == 2
        assert top.next_value == pytest.approx(1.0)
        np.testing.assert_allclose(top.basis.T @ top.basis, np.eye(2), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InstanceValidationError):
            pencil_lambda_max(SpdMatrix.from_array(np.eye(2)), np.eye(3))
