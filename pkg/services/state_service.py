import logging
from typing import Sequence

import numpy as np

from models.operators import CMatrix, DensityMatrix
from services.matqalg_service import pauli
from services.scenario_service import CG
from utils.exceptions import ValidationException

logger = logging.getLogger(__name__)


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(matrix=CMatrix(entries=np.eye(dim) / dim, hermitian=True))


def density_from_bloch(r: Sequence[float]) -> DensityMatrix:
    """1/2 (I + r . sigma) for a Bloch vector with |r| <= 1"""
    rx, ry, rz = (float(v) for v in r)
    if rx * rx + ry * ry + rz * rz > 1.0 + 1e-12:
        raise ValidationException(f"Bloch vector {tuple(r)} lies outside the unit ball")
    m = (pauli("I").array + rx * pauli("X").array + ry * pauli("Y").array + rz * pauli("Z").array) / 2.0
    return DensityMatrix(matrix=CMatrix(entries=m, hermitian=True))


def random_density(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """G G^dagger / Tr with G a complex Ginibre matrix"""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(matrix=CMatrix(entries=m / np.trace(m).real, hermitian=True))


def embed_qutrit_state(rho: DensityMatrix) -> DensityMatrix:
    """U_CG^dagger (rho (+) 0) U_CG, a spin-1 state inside the two-qubit space"""
    if rho.dim != 3:
        raise ValidationException(f"qutrit embedding needs a 3-dim state, got {rho.dim}")
    padded = np.zeros((4, 4), dtype=np.complex128)
    padded[:3, :3] = rho.matrix.array
    embedded = CG.to_product(CMatrix(entries=padded)).array
    return DensityMatrix(matrix=CMatrix(entries=0.5 * (embedded + embedded.conj().T), hermitian=True))
