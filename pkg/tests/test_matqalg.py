from itertools import product

import numpy as np
import pytest
from numpy.testing import assert_allclose

from models.operators import CMatrix, PauliString
from services.matqalg_service import (
    commutator_norm,
    direct_sum,
    eig_hermitian,
    eigvals_hermitian,
    min_eigenvalue,
    pauli,
    pauli_basis,
    pauli_coefficients,
    pauli_decompose,
    pauli_reconstruct,
    qubit_count,
    require_hermitian,
    tensor,
    tensor_all,
)
from utils.exceptions import DimNotPowerOfTwoException, NotHermitianException, ValidationException


def random_hermitian(rng, dim: int) -> CMatrix:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return CMatrix(entries=0.5 * (a + a.conj().T), hermitian=True)


def lu_determinant(a: np.ndarray) -> complex:
    """Gaussian elimination with partial pivoting"""
    u = np.array(a, dtype=np.complex128)
    det = 1.0 + 0j
    for k in range(u.shape[0]):
        p = k + int(np.argmax(np.abs(u[k:, k])))
        if u[p, k] == 0:
            return 0j
        if p != k:
            u[[k, p]] = u[[p, k]]
            det = -det
        det *= u[k, k]
        u[k + 1:, k:] -= np.outer(u[k + 1:, k] / u[k, k], u[k, k:])
    return det


class TestCMatrix:

    def test_rejects_non_square(self):
        with pytest.raises(ValidationException):
            CMatrix(entries=np.zeros((2, 3)))

    def test_hermitian_flag_is_checked(self):
        with pytest.raises(NotHermitianException):
            CMatrix(entries=[[0, 1], [0, 0]], hermitian=True)

    def test_entries_are_read_only(self):
        m = CMatrix.identity(2)
        with pytest.raises(ValueError):
            m.array[0, 0] = 5.0

    def test_algebra(self):
        x, z = pauli("X"), pauli("Z")
        assert_allclose((x @ z).array, -1j * pauli("Y").array, atol=1e-15)
        assert_allclose((x + z).array, [[1, 1], [1, -1]], atol=0)
        assert_allclose((0.5 * x).array, [[0, 0.5], [0.5, 0]], atol=0)


class TestPauli:

    def test_single_qubit_matrices(self):
        assert_allclose(pauli("Y").array, [[0, -1j], [1j, 0]], atol=0)
        assert_allclose(pauli("Z").array, np.diag([1, -1]), atol=0)

    def test_string_is_left_to_right_kron(self):
        expected = np.kron(pauli("X").array, pauli("Z").array)
        assert_allclose(pauli("XZ").array, expected, atol=0)
        assert_allclose(tensor(pauli("X"), pauli("Z")).array, expected, atol=0)
        assert_allclose(tensor_all(pauli("X"), pauli("I"), pauli("Z")).array, pauli("XIZ").array, atol=0)

    def test_tensor_is_associative_on_paulis(self):
        for a, b, c in product("IXYZ", repeat=3):
            left = tensor(tensor(pauli(a), pauli(b)), pauli(c))
            right = tensor(pauli(a), tensor(pauli(b), pauli(c)))
            assert np.array_equal(left.array, right.array)

    def test_tensor_is_associative_on_integer_matrices(self, rng):
        a, b, c = (
            CMatrix(entries=rng.integers(-5, 6, size=(d, d)) + 1j * rng.integers(-5, 6, size=(d, d)))
            for d in (2, 3, 2)
        )
        assert np.array_equal(tensor(tensor(a, b), c).array, tensor(a, tensor(b, c)).array)

    def test_tensor_is_associative_up_to_rounding(self, rng):
        a, b, c = (
            CMatrix(entries=rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
            for _ in range(3)
        )
        left = tensor(tensor(a, b), c).array
        right = tensor(a, tensor(b, c)).array
        bound = 16 * np.finfo(float).eps * np.prod([np.max(np.abs(m.array)) for m in (a, b, c)])
        assert np.max(np.abs(left - right)) <= bound

    @pytest.mark.parametrize("label,weight", [("I", 0), ("X", 1), ("Z", 1), ("Y", 2), ("XY", 3), ("YY", 4), ("IZ", 1)])
    def test_fuzz_weight(self, label, weight):
        assert PauliString.parse(label).weight == weight

    def test_basis_size_and_orthogonality(self):
        strings, stack = pauli_basis(2)
        assert len(strings) == 16
        gram = np.einsum("aij,bji->ab", stack, stack) / 4.0
        assert_allclose(gram, np.eye(16), atol=1e-15)

    def test_decompose_single_string(self):
        expansion = pauli_decompose(pauli("XZ"))
        assert list(expansion.labels()) == ["XZ"]
        assert expansion.coefficient("XZ") == pytest.approx(1.0)
        assert expansion.coefficient("YY") == 0j

    @pytest.mark.parametrize("dim", [2, 4, 8])
    def test_round_trip(self, rng, dim):
        m = CMatrix(entries=rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
        assert pauli_reconstruct(pauli_decompose(m)).max_abs_diff(m) <= 1e-13

    def test_hermitian_matrix_has_real_coefficients(self, rng):
        coeffs = pauli_coefficients(random_hermitian(rng, 4))
        assert np.max(np.abs(coeffs.imag)) <= 1e-15

    def test_qubit_count(self):
        assert qubit_count(1) == 0
        assert qubit_count(8) == 3
        with pytest.raises(DimNotPowerOfTwoException):
            qubit_count(3)
        with pytest.raises(DimNotPowerOfTwoException):
            pauli_decompose(CMatrix.identity(3))


class TestEigensolver:

    @pytest.mark.parametrize("dim", [2, 3, 4, 8, 16])
    def test_matches_reference(self, rng, dim):
        m = random_hermitian(rng, dim)
        values, vectors = eig_hermitian(m)
        assert_allclose(values, np.linalg.eigvalsh(m.array)[::-1], atol=1e-11)
        assert_allclose(vectors @ np.diag(values) @ vectors.conj().T, m.array, atol=1e-12)
        assert_allclose(vectors.conj().T @ vectors, np.eye(dim), atol=1e-12)

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_trace_and_determinant(self, rng, dim):
        for _ in range(1000):
            m = random_hermitian(rng, dim)
            values = eigvals_hermitian(m)
            assert abs(values.sum() - m.trace().real) <= 1e-10
            det = lu_determinant(m.array)
            assert abs(np.prod(values) - det) <= 1e-8 * max(1.0, abs(det))

    def test_descending_order(self, rng):
        values = eigvals_hermitian(random_hermitian(rng, 6))
        assert np.all(values[:-1] >= values[1:])

    def test_complex_off_diagonal(self):
        values = eigvals_hermitian(CMatrix(entries=[[1, 1j], [-1j, 1]], hermitian=True))
        assert_allclose(values, [2.0, 0.0], atol=1e-14)

    def test_degenerate_and_diagonal(self):
        values, vectors = eig_hermitian(CMatrix.identity(4))
        assert_allclose(values, np.ones(4), atol=0)
        assert_allclose(vectors, np.eye(4), atol=0)
        assert min_eigenvalue(CMatrix(entries=np.diag([3.0, -2.0, 1.0]), hermitian=True)) == -2.0

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianException):
            eig_hermitian(CMatrix(entries=[[0, 1], [0, 0]]))


def test_commutator_norm():
    assert commutator_norm(pauli("X"), pauli("Z")) == pytest.approx(2.0)
    assert commutator_norm(pauli("XI"), pauli("IZ")) == 0.0


def test_require_hermitian():
    assert require_hermitian(pauli("Y")).dim == 2
    with pytest.raises(NotHermitianException):
        require_hermitian(CMatrix(entries=[[1, 2], [0, 1]]))


def test_direct_sum():
    out = direct_sum(CMatrix.identity(2), CMatrix(entries=[[5.0]], hermitian=True))
    assert_allclose(out.array, np.diag([1, 1, 5]), atol=0)
