"""Dense complex matrix algebra for dimensions 2-16

Kronecker products, a cyclic Jacobi eigensolver for Hermitian matrices and
decomposition over tensor products of Pauli matrices.
"""

import logging
import math
from functools import lru_cache, reduce
from itertools import product
from typing import NamedTuple, Tuple

import numpy as np

from config.settings import settings
from models.operators import CMatrix, PauliExpansion, PauliString
from utils.exceptions import DimNotPowerOfTwoException, NotHermitianException

logger = logging.getLogger(__name__)

PAULI_MATRICES = {
    "I": np.array([[1, 0], [0, 1]], dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

# coefficients below this are dropped from expansions
_ZERO_COEFF = 1e-15


class Eigensystem(NamedTuple):
    values: np.ndarray   # real, descending
    vectors: np.ndarray  # orthonormal columns matching ``values``


def pauli(label: str) -> CMatrix:
    """Single Pauli string as an explicit matrix, e.g. ``pauli("XZ")``"""
    return pauli_string_matrix(PauliString.parse(label))


def tensor(a: CMatrix, b: CMatrix) -> CMatrix:
    """Kronecker product a ⊗ b"""
    return CMatrix(entries=np.kron(a.array, b.array), hermitian=a.hermitian and b.hermitian)


def tensor_all(*factors: CMatrix) -> CMatrix:
    """Left-folded Kronecker product ((a ⊗ b) ⊗ c) ⊗ ..."""
    return reduce(tensor, factors)


def commutator_norm(a: CMatrix, b: CMatrix) -> float:
    """Largest entry of |ab - ba|"""
    comm = a.array @ b.array - b.array @ a.array
    return float(np.max(np.abs(comm))) if comm.size else 0.0


def require_hermitian(m: CMatrix, tol: float | None = None) -> CMatrix:
    """Return m unchanged, raising NotHermitianException beyond tol"""
    tol = settings.HERMITIAN_TOL if tol is None else tol
    defect = m.hermitian_defect()
    if defect > tol:
        raise NotHermitianException(f"matrix is not Hermitian: max|M - M^H| = {defect:.3e} > {tol:g}")
    return m


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _jacobi(a: np.ndarray, max_sweeps: int, rel_tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations on a Hermitian matrix

    Each rotation first removes the phase of a[p, q] and then applies the real
    symmetric Jacobi rotation, so the combined 2x2 block is
    [[c, s], [-s e^{-i phi}, c e^{-i phi}]].
    """
    n = a.shape[0]
    a = np.array(a, dtype=np.complex128)
    v = np.eye(n, dtype=np.complex128)
    scale = float(np.linalg.norm(a))

    for sweep in range(max_sweeps):
        if _off_diagonal_norm(a) <= rel_tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = a[p, q]
                mag = abs(g)
                if mag == 0.0:
                    continue
                phase = (g / mag).conjugate()
                theta = 0.5 * (a[q, q].real - a[p, p].real) / mag
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                # columns: A <- A J
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * phase * a[:, q]
                a[:, q] = s * col_p + c * phase * a[:, q]
                # rows: A <- J^H A
                row_p = a[p, :].copy()
                a[p, :] = c * row_p - s * phase.conjugate() * a[q, :]
                a[q, :] = s * row_p + c * phase.conjugate() * a[q, :]
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

                vec_p = v[:, p].copy()
                v[:, p] = c * vec_p - s * phase * v[:, q]
                v[:, q] = s * vec_p + c * phase * v[:, q]
    else:
        if _off_diagonal_norm(a) > rel_tol * scale:
            logger.warning(
                f"Jacobi eigensolver stopped after {max_sweeps} sweeps "
                f"with off-diagonal norm {_off_diagonal_norm(a):.3e}"
            )

    return np.diag(a).real.copy(), v


def eig_hermitian(m: CMatrix) -> Eigensystem:
    """Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix"""
    require_hermitian(m)
    values, vectors = _jacobi(m.array, settings.JACOBI_MAX_SWEEPS, settings.JACOBI_REL_TOL)
    order = np.argsort(-values, kind="stable")
    return Eigensystem(values=values[order], vectors=vectors[:, order])


def eigvals_hermitian(m: CMatrix) -> np.ndarray:
    """Descending eigenvalues only"""
    return eig_hermitian(m).values


def min_eigenvalue(m: CMatrix) -> float:
    """Smallest eigenvalue"""
    return float(eig_hermitian(m).values[-1])


def qubit_count(dim: int) -> int:
    """Number of qubits spanning ``dim``, raising if dim is not a power of two"""
    if dim < 1 or dim & (dim - 1):
        raise DimNotPowerOfTwoException(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


@lru_cache(maxsize=None)
def pauli_basis(nqubits: int) -> Tuple[Tuple[PauliString, ...], np.ndarray]:
    """All 4^n Pauli strings and their matrices stacked along axis 0"""
    if nqubits == 0:
        raise DimNotPowerOfTwoException("a 1-dimensional space has no qubit slot")
    strings = tuple(PauliString(factors=f) for f in product("IXYZ", repeat=nqubits))
    stack = np.stack([pauli_string_matrix(s).array for s in strings])
    stack.flags.writeable = False
    return strings, stack


def pauli_string_matrix(string: PauliString) -> CMatrix:
    """Matrix of one Pauli string, first factor on the leftmost qubit"""
    entries = reduce(np.kron, (PAULI_MATRICES[f] for f in string.factors))
    return CMatrix(entries=entries, hermitian=True)


def pauli_coefficients(m: CMatrix) -> np.ndarray:
    """Dense coefficient vector Tr[m P_s]/dim over ``pauli_basis`` order"""
    nqubits = qubit_count(m.dim)
    _, stack = pauli_basis(nqubits)
    return np.einsum("sij,ji->s", stack, m.array) / m.dim


def pauli_decompose(m: CMatrix) -> PauliExpansion:
    """Expansion over the nonzero Pauli-string coefficients"""
    nqubits = qubit_count(m.dim)
    strings, _ = pauli_basis(nqubits)
    coeffs = pauli_coefficients(m)
    terms = {s: complex(c) for s, c in zip(strings, coeffs) if abs(c) > _ZERO_COEFF}
    return PauliExpansion(nqubits=nqubits, terms=terms)


def pauli_reconstruct(e: PauliExpansion) -> CMatrix:
    """Sum of coefficient times Pauli-string matrix"""
    dim = 2 ** e.nqubits
    total = np.zeros((dim, dim), dtype=np.complex128)
    for string, coeff in e.terms.items():
        total += coeff * pauli_string_matrix(string).array
    return CMatrix(entries=total)


def from_coefficients(coeffs: np.ndarray, nqubits: int) -> CMatrix:
    """Inverse of ``pauli_coefficients``"""
    _, stack = pauli_basis(nqubits)
    return CMatrix(entries=np.tensordot(coeffs, stack, axes=1))


def direct_sum(a: CMatrix, b: CMatrix) -> CMatrix:
    """Block-diagonal a ⊕ b"""
    out = np.zeros((a.dim + b.dim, a.dim + b.dim), dtype=np.complex128)
    out[: a.dim, : a.dim] = a.array
    out[a.dim:, a.dim:] = b.array
    return CMatrix(entries=out, hermitian=a.hermitian and b.hermitian)
