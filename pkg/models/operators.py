"""Operator carriers: dense complex matrices, Pauli strings and density matrices"""

from __future__ import annotations

from typing import Dict, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.settings import settings
from utils.exceptions import NotHermitianException, ValidationException

PauliFactor = Literal["I", "X", "Y", "Z"]

# sigma_y only ever appears as sigma_x * sigma_z, one eta per factor
FUZZ_WEIGHTS: Dict[str, int] = {"I": 0, "X": 1, "Y": 2, "Z": 1}


class CMatrix(BaseModel):
    """Immutable dense square complex matrix"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray
    hermitian: bool = Field(False, description="Checked against HERMITIAN_TOL on construction")

    @field_validator("entries", mode="before")
    @classmethod
    def _coerce_entries(cls, value):
        arr = np.array(value, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValidationException(f"CMatrix must be square with dim >= 1, got shape {arr.shape}")
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_hermitian(self) -> "CMatrix":
        if self.hermitian and self.hermitian_defect() > settings.HERMITIAN_TOL:
            raise NotHermitianException(
                f"Hermitian-flagged matrix has max|M - M^H| = {self.hermitian_defect():.3e} "
                f"> {settings.HERMITIAN_TOL:g}"
            )
        return self

    # ---------- constructors ----------
    @classmethod
    def identity(cls, dim: int) -> "CMatrix":
        return cls(entries=np.eye(dim), hermitian=True)

    # ---------- accessors ----------
    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def array(self) -> np.ndarray:
        return self.entries

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float | None = None) -> bool:
        tol = settings.HERMITIAN_TOL if tol is None else tol
        return self.hermitian_defect() <= tol

    def as_hermitian(self) -> "CMatrix":
        """Re-flag as Hermitian, raising NotHermitianException on failure"""
        if self.hermitian:
            return self
        return CMatrix(entries=self.entries, hermitian=True)

    def dagger(self) -> "CMatrix":
        return CMatrix(entries=self.entries.conj().T, hermitian=self.hermitian)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def max_abs_diff(self, other: "CMatrix | np.ndarray") -> float:
        other_arr = other.entries if isinstance(other, CMatrix) else np.asarray(other)
        if other_arr.shape != self.entries.shape:
            return float("inf")
        return float(np.max(np.abs(self.entries - other_arr)))

    # ---------- algebra ----------
    def __matmul__(self, other: "CMatrix") -> "CMatrix":
        return CMatrix(entries=self.entries @ other.entries)

    def __add__(self, other: "CMatrix") -> "CMatrix":
        return CMatrix(entries=self.entries + other.entries)

    def __sub__(self, other: "CMatrix") -> "CMatrix":
        return CMatrix(entries=self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "CMatrix":
        return CMatrix(entries=self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "CMatrix":
        return CMatrix(entries=-self.entries, hermitian=self.hermitian)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CMatrix):
            return NotImplemented
        return bool(np.array_equal(self.entries, other.entries))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"CMatrix(dim={self.dim}, hermitian={self.hermitian})"


class PauliString(BaseModel):
    """Tensor product of single-qubit Paulis, one factor per slot"""

    model_config = ConfigDict(frozen=True)

    factors: Tuple[PauliFactor, ...]

    @field_validator("factors", mode="before")
    @classmethod
    def _split_label(cls, value):
        if isinstance(value, str):
            return tuple(value)
        return value

    @field_validator("factors")
    @classmethod
    def _non_empty(cls, value):
        if not value:
            raise ValidationException("PauliString needs at least one factor")
        return value

    @classmethod
    def parse(cls, label: str) -> "PauliString":
        return cls(factors=tuple(label))

    @property
    def label(self) -> str:
        return "".join(self.factors)

    @property
    def nqubits(self) -> int:
        return len(self.factors)

    @property
    def weight(self) -> int:
        return sum(FUZZ_WEIGHTS[f] for f in self.factors)

    def __str__(self) -> str:
        return self.label


class PauliExpansion(BaseModel):
    """Coefficients of an operator over n-qubit Pauli strings"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nqubits: int = Field(..., ge=1)
    terms: Dict[PauliString, complex]

    @model_validator(mode="after")
    def _check_lengths(self) -> "PauliExpansion":
        for string in self.terms:
            if string.nqubits != self.nqubits:
                raise ValidationException(
                    f"Pauli string {string.label} has {string.nqubits} factors, expansion has {self.nqubits} qubits"
                )
        return self

    def coefficient(self, label: str) -> complex:
        return self.terms.get(PauliString.parse(label), 0j)

    def labels(self) -> Dict[str, complex]:
        return {s.label: c for s, c in self.terms.items()}


class DensityMatrix(BaseModel):
    """Quantum state: Hermitian, unit trace, positive semidefinite"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: CMatrix

    @model_validator(mode="after")
    def _check_state(self) -> "DensityMatrix":
        # imported lazily, the eigensolver lives in the service layer
        from services.matqalg_service import min_eigenvalue

        m = self.matrix
        if not m.is_hermitian():
            raise NotHermitianException(
                f"density matrix is not Hermitian (defect {m.hermitian_defect():.3e})"
            )
        tr = m.trace()
        if abs(tr - 1.0) > 1e-11:
            raise ValidationException(f"density matrix trace must be 1, got {tr.real:.12g}")
        lowest = min_eigenvalue(m.as_hermitian())
        if lowest < -1e-10:
            raise ValidationException(
                f"density matrix must be positive semidefinite, min eigenvalue {lowest:.3e}"
            )
        return self

    @property
    def dim(self) -> int:
        return self.matrix.dim
