"""One-parameter unsharpness applied through weighted Pauli expansions"""

import logging
from typing import Dict, List

import numpy as np
from pydantic import ValidationError

from config.settings import settings
from models.measurement import FuzzParameter, MarginalPovm, OutcomeTuple, QmoFamily
from models.operators import CMatrix
from services.matqalg_service import (
    eigvals_hermitian,
    from_coefficients,
    pauli_basis,
    pauli_coefficients,
    qubit_count,
)
from services.mhcore_service import marginalize
from utils.exceptions import ValidationException

logger = logging.getLogger(__name__)


def as_fuzz_parameter(eta: float | FuzzParameter) -> FuzzParameter:
    if isinstance(eta, FuzzParameter):
        return eta
    try:
        return FuzzParameter(eta=eta)
    except ValidationError as e:
        raise ValidationException(f"unsharpness eta must lie in [0, 1], got {eta!r}") from e


class FuzzyFamilyBuilder:
    """Callable eta -> fuzzified family for one sharp family

    The Pauli expansion of every element is computed once; each call only
    rescales coefficients by eta**weight and rebuilds the matrices.
    """

    def __init__(self, sharp: QmoFamily):
        if sharp.eta != 1.0:
            raise ValidationException(f"fuzzify expects a sharp family (eta = 1), got eta = {sharp.eta}")
        self.sharp = sharp
        self.nqubits = qubit_count(sharp.space_dim)
        strings, _ = pauli_basis(self.nqubits)
        self.weights = np.array([s.weight for s in strings], dtype=float)
        self.coefficients: Dict[OutcomeTuple, np.ndarray] = {
            outcome: pauli_coefficients(element) for outcome, element in sharp.items()
        }

    def __call__(self, eta: float | FuzzParameter) -> QmoFamily:
        eta = as_fuzz_parameter(eta).eta
        if eta == 1.0:
            return self.sharp
        scale = eta ** self.weights
        elements = {
            outcome: from_coefficients(coeffs * scale, self.nqubits).as_hermitian()
            for outcome, coeffs in self.coefficients.items()
        }
        logger.debug(f"Fuzzified family at eta={eta:.6f}")
        return QmoFamily(
            observables=self.sharp.observables,
            alphabets=self.sharp.alphabets,
            grouping=self.sharp.grouping,
            eta=eta,
            elements=elements,
            space_dim=self.sharp.space_dim,
        )


def fuzzify(fam: QmoFamily, eta: float | FuzzParameter) -> QmoFamily:
    """Scale every Pauli-string coefficient of every element by eta**weight"""
    return FuzzyFamilyBuilder(fam)(eta)


def is_effect(m: CMatrix, tol: float | None = None) -> bool:
    """0 <= E <= I within tol"""
    tol = settings.MHQMO_TOL if tol is None else tol
    values = eigvals_hermitian(m.as_hermitian())
    return bool(values[-1] >= -tol and values[0] <= 1.0 + tol)


def extract_marginal_povm(fam: QmoFamily, index: int) -> MarginalPovm:
    """Fuzzy POVM of observable ``index``; positivity is checked on construction"""
    marginal = marginalize(fam, [index])
    elements = {outcome[0]: element for outcome, element in marginal.items()}
    return MarginalPovm(observable_index=index, elements=elements, eta=fam.eta)


def validate_povm(povm: MarginalPovm, tol: float | None = None) -> List[float]:
    """Labels whose effects violate 0 <= E <= I (empty when the POVM is valid)"""
    return [label for label, e in povm.elements.items() if not is_effect(e, tol)]
