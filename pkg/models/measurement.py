"""Observables, quasi measurement operator families and quasi-probability tables"""

from __future__ import annotations

from itertools import product
from typing import Dict, Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import settings
from models.operators import CMatrix
from utils.exceptions import NotHermitianException, ValidationException

OutcomeTuple = Tuple[float, ...]

# normalization tolerance shared by families and POVMs
NORMALIZATION_TOL = 1e-11


def enumerate_outcomes(alphabets: Tuple[Tuple[float, ...], ...]) -> List[OutcomeTuple]:
    """All outcome tuples, first slot varying fastest"""
    return [tuple(reversed(combo)) for combo in product(*reversed(alphabets))]


class SpectralPoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalue: float
    projector: CMatrix
    multiplicity: int = Field(..., ge=1)


class Observable(BaseModel):
    """Hermitian matrix together with its spectral decomposition"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: CMatrix
    spectrum: Tuple[SpectralPoint, ...]

    @model_validator(mode="after")
    def _check_resolution(self) -> "Observable":
        dim = self.matrix.dim
        total = sum((p.projector.array for p in self.spectrum), np.zeros((dim, dim), dtype=complex))
        if np.max(np.abs(total - np.eye(dim))) > 1e-11:
            raise ValidationException("spectral projectors do not resolve the identity")
        recon = sum(
            (p.eigenvalue * p.projector.array for p in self.spectrum),
            np.zeros((dim, dim), dtype=complex),
        )
        if np.max(np.abs(recon - self.matrix.array)) > 1e-10:
            raise ValidationException("spectral decomposition does not reconstruct the matrix")
        return self

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def labels(self) -> Tuple[float, ...]:
        return tuple(p.eigenvalue for p in self.spectrum)

    def projector(self, label: float) -> CMatrix:
        for point in self.spectrum:
            if point.eigenvalue == label:
                return point.projector
        raise ValidationException(f"{label!r} is not an eigenvalue label of this observable")


class QmoFamily(BaseModel):
    """Quasi measurement operators indexed by outcome tuples

    ``alphabets`` lists the outcome labels of each slot (descending). ``observables``
    is empty when the family was assembled from POVM effects rather than spectra.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    observables: Tuple[Observable, ...] = ()
    alphabets: Tuple[Tuple[float, ...], ...]
    grouping: Tuple[Tuple[int, ...], ...]
    eta: float = Field(1.0, ge=0.0, le=1.0)
    elements: Dict[OutcomeTuple, CMatrix]
    space_dim: int = Field(..., ge=1)

    @model_validator(mode="after")
    def _check_family(self) -> "QmoFamily":
        expected = enumerate_outcomes(self.alphabets)
        if list(self.elements) != expected:
            raise ValidationException("family elements must cover every outcome tuple in canonical order")
        total = np.zeros((self.space_dim, self.space_dim), dtype=complex)
        for outcome, element in self.elements.items():
            if element.dim != self.space_dim:
                raise ValidationException(f"element {outcome} has dim {element.dim}, family has {self.space_dim}")
            if not element.is_hermitian():
                raise NotHermitianException(
                    f"element {outcome} is not Hermitian (defect {element.hermitian_defect():.3e})"
                )
            total += element.array
        defect = float(np.max(np.abs(total - np.eye(self.space_dim))))
        if defect > NORMALIZATION_TOL:
            raise ValidationException(f"family elements sum to identity only within {defect:.3e}")
        return self

    @property
    def outcomes(self) -> List[OutcomeTuple]:
        return list(self.elements)

    @property
    def nslots(self) -> int:
        return len(self.alphabets)

    def element(self, outcome: OutcomeTuple) -> CMatrix:
        key = tuple(float(v) for v in outcome)
        try:
            return self.elements[key]
        except KeyError:
            raise ValidationException(f"{outcome} is not an outcome of this family") from None

    def items(self) -> Iterator[Tuple[OutcomeTuple, CMatrix]]:
        return iter(self.elements.items())


class QuasiProbTable(BaseModel):
    """Margenau-Hill quasi-probability mass function"""

    model_config = ConfigDict(frozen=True)

    entries: Dict[OutcomeTuple, float]
    eta: float

    @model_validator(mode="after")
    def _check_normalized(self) -> "QuasiProbTable":
        total = sum(self.entries.values())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationException(f"quasi-probabilities sum to {total:.15g}, not 1")
        return self

    def p(self, outcome: OutcomeTuple) -> float:
        return self.entries[tuple(float(v) for v in outcome)]

    def negative_outcomes(self, tol: float = 1e-11) -> List[OutcomeTuple]:
        return [o for o, v in self.entries.items() if v < -tol]


class FuzzParameter(BaseModel):
    """Unsharpness parameter, 0 <= eta <= 1"""

    model_config = ConfigDict(frozen=True)

    eta: float = Field(..., ge=0.0, le=1.0)


class MarginalPovm(BaseModel):
    """Fuzzy POVM of a single observable, obtained by marginalizing a family"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    observable_index: int = Field(..., ge=0)
    elements: Dict[float, CMatrix]
    eta: float

    @model_validator(mode="after")
    def _check_povm(self) -> "MarginalPovm":
        # imported lazily, the eigensolver lives in the service layer
        from services.matqalg_service import min_eigenvalue

        dim = next(iter(self.elements.values())).dim
        total = sum((e.array for e in self.elements.values()), np.zeros((dim, dim), dtype=complex))
        if np.max(np.abs(total - np.eye(dim))) > NORMALIZATION_TOL:
            raise ValidationException(f"POVM for observable {self.observable_index} does not sum to identity")
        for label, effect in self.elements.items():
            lowest = min_eigenvalue(effect.as_hermitian())
            if lowest < -settings.MHQMO_TOL:
                raise ValidationException(
                    f"POVM element {label} of observable {self.observable_index} is not positive "
                    f"semidefinite (min eigenvalue {lowest:.3e})"
                )
        return self

    @property
    def labels(self) -> Tuple[float, ...]:
        return tuple(self.elements)

    def effect(self, label: float) -> CMatrix:
        try:
            return self.elements[float(label)]
        except KeyError:
            raise ValidationException(f"{label!r} is not an outcome of observable {self.observable_index}") from None
