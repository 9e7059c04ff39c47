"""Concrete measurement scenarios and their closed-form eigenvalue curves"""

from __future__ import annotations

import math
from typing import Callable, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from models.measurement import Observable, OutcomeTuple
from models.operators import CMatrix
from utils.exceptions import ValidationException

ScenarioName = Literal["qubit", "qutrit", "two-qubit"]
SCENARIO_NAMES: Tuple[str, ...] = ("qubit", "qutrit", "two-qubit")

_R = 1.0 / math.sqrt(2.0)


class CgTransform(BaseModel):
    """Clebsch-Gordan matrix from the two spin-1/2 product basis to the coupled basis

    Rows are |1,1>, |1,0>, |1,-1>, |0,0> expressed in |00>, |01>, |10>, |11>.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: CMatrix

    @model_validator(mode="after")
    def _check_unitary(self) -> "CgTransform":
        u = self.matrix.array
        if u.shape != (4, 4) or np.max(np.abs(u @ u.conj().T - np.eye(4))) > 1e-15:
            raise ValidationException("CG transform must be a 4x4 unitary")
        return self

    @classmethod
    def standard(cls) -> "CgTransform":
        return cls(matrix=CMatrix(entries=[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, _R, _R, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, _R, -_R, 0.0],
        ]))

    def to_coupled(self, m: CMatrix) -> CMatrix:
        """U m U^dagger"""
        u = self.matrix.array
        return CMatrix(entries=u @ m.array @ u.conj().T)

    def to_product(self, m: CMatrix) -> CMatrix:
        """U^dagger m U"""
        u = self.matrix.array
        return CMatrix(entries=u.conj().T @ m.array @ u)


class Scenario(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: ScenarioName
    observables: Tuple[Observable, ...]
    grouping: Tuple[Tuple[int, ...], ...]
    embedding: Literal["identity", "cg-block"] = "identity"


class ClosedFormCurve(BaseModel):
    """Analytic eigenvalue of a family element as a function of eta"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    scenario: ScenarioName
    element_label: str
    formula_id: str
    applies_to: Callable[[OutcomeTuple], bool]
    formula: Callable[[float], float]

    def __call__(self, eta: float) -> float:
        return self.formula(eta)
