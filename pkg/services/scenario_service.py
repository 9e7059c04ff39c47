"""The qubit, spin-1 qutrit and two-qubit scenarios

The qutrit pair is only ever built inside the two spin-1/2 product space: its
observables are the total x and z spin components there, fuzzification happens
in that space, and the spin-1 block is cut out afterwards with the
Clebsch-Gordan transform.
"""

import logging
import math
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from models.measurement import Observable, OutcomeTuple, QmoFamily
from models.operators import CMatrix
from models.scenario import SCENARIO_NAMES, CgTransform, ClosedFormCurve, Scenario
from services.fuzzing_service import FuzzyFamilyBuilder
from services.matqalg_service import pauli, tensor
from services.mhcore_service import qmo_jordan, spectral
from utils.exceptions import BlockLeakageException, UnknownLabelException, ValidationException

logger = logging.getLogger(__name__)

FamilyBuilder = Callable[[float], QmoFamily]

_SQRT2 = math.sqrt(2.0)
_BLOCK_TOL = 1e-12

CG = CgTransform.standard()

QUTRIT_X = CMatrix(entries=np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / _SQRT2, hermitian=True)
QUTRIT_Z = CMatrix(entries=np.diag([1.0, 0.0, -1.0]), hermitian=True)


# ---------- scenario construction ----------
def build_qubit() -> Tuple[Scenario, QmoFamily]:
    observables = (spectral(pauli("X")), spectral(pauli("Z")))
    grouping = ((0,), (1,))
    scenario = Scenario(name="qubit", observables=observables, grouping=grouping)
    return scenario, qmo_jordan(observables, grouping)


def build_qutrit_embedded() -> Tuple[Scenario, QmoFamily]:
    """Total spin components of two spin-1/2 systems, 9 outcomes over {+1, 0, -1}^2"""
    x_total = 0.5 * (pauli("IX") + pauli("XI"))
    z_total = 0.5 * (pauli("IZ") + pauli("ZI"))
    observables = (spectral(x_total.as_hermitian()), spectral(z_total.as_hermitian()))
    grouping = ((0,), (1,))
    scenario = Scenario(name="qutrit", observables=observables, grouping=grouping, embedding="cg-block")
    return scenario, qmo_jordan(observables, grouping)


def build_two_qubit() -> Tuple[Scenario, QmoFamily]:
    """Outcome tuples are (x1, z1, x2, z2); the x pair is symmetrized against the z pair"""
    observables = (
        spectral(pauli("XI")),
        spectral(pauli("ZI")),
        spectral(pauli("IX")),
        spectral(pauli("IZ")),
    )
    grouping = ((0, 2), (1, 3))
    scenario = Scenario(name="two-qubit", observables=observables, grouping=grouping)
    return scenario, qmo_jordan(observables, grouping)


def _coupled_block(m: CMatrix, what: str) -> np.ndarray:
    coupled = CG.to_coupled(m).array
    leak = max(np.max(np.abs(coupled[:3, 3])), np.max(np.abs(coupled[3, :3])))
    if leak > _BLOCK_TOL:
        raise BlockLeakageException(
            f"{what} mixes the spin-1 and singlet sectors (off-diagonal block {leak:.3e})"
        )
    return coupled


def extract_qutrit_block(fam: QmoFamily, observables: Tuple[Observable, ...] | None = None) -> QmoFamily:
    """Spin-1 block of U_CG G U_CG^dagger for every element

    ``observables`` may pass the already reduced 3-dim observables to skip
    re-diagonalizing them on every call.
    """
    if fam.space_dim != 4:
        raise ValidationException(f"qutrit block extraction needs a 4-dim family, got {fam.space_dim}")
    elements = {
        outcome: CMatrix(entries=_coupled_block(element, f"element {outcome}")[:3, :3], hermitian=True)
        for outcome, element in fam.items()
    }
    if observables is None:
        observables = tuple(
            spectral(CMatrix(entries=_coupled_block(o.matrix, "observable")[:3, :3], hermitian=True))
            for o in fam.observables
        )
    return QmoFamily(
        observables=observables,
        alphabets=fam.alphabets,
        grouping=fam.grouping,
        eta=fam.eta,
        elements=elements,
        space_dim=3,
    )


def singlet_block(fam: QmoFamily) -> Dict[OutcomeTuple, float]:
    """The singlet (1x1) entry dropped by ``extract_qutrit_block``"""
    return {
        outcome: float(_coupled_block(element, f"element {outcome}")[3, 3].real)
        for outcome, element in fam.items()
    }


def build_scenario(name: str) -> Tuple[Scenario, QmoFamily]:
    """Scenario plus its sharp family (the qutrit family stays in the 4-dim embedding)"""
    builders = {
        "qubit": build_qubit,
        "qutrit": build_qutrit_embedded,
        "two-qubit": build_two_qubit,
    }
    if name not in builders:
        raise ValidationException(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIO_NAMES)}")
    return builders[name]()


def family_builder(name: str) -> FamilyBuilder:
    """eta -> fuzzified family in the scenario's own space (3-dim for the qutrit)"""
    scenario, sharp = build_scenario(name)
    fuzzy = FuzzyFamilyBuilder(sharp)
    if scenario.embedding == "cg-block":
        reduced = extract_qutrit_block(sharp).observables
        return lambda eta: extract_qutrit_block(fuzzy(eta), reduced)
    return fuzzy


# ---------- closed forms ----------
def qubit_lambda_plus(eta: float) -> float:
    return (1.0 + eta * _SQRT2) / 4.0


def qubit_lambda_minus(eta: float) -> float:
    return (1.0 - eta * _SQRT2) / 4.0


def qutrit_lambda(eta: float) -> float:
    """Lowest eigenvalue of the (x, 0) and (0, z) qutrit elements"""
    e2 = eta * eta
    return (1.0 + e2 - eta * math.sqrt(4.0 + e2 * (1.0 + e2) ** 2)) / 8.0


def qutrit_lambda1(eta: float) -> float:
    e2 = eta * eta
    return (1.0 - 2.0 * e2 - e2 * e2) / 16.0


def qutrit_lambda2(eta: float) -> float:
    e2 = eta * eta
    return (1.0 + 2.0 * e2 - eta * math.sqrt(e2 ** 3 + 8.0)) / 16.0


def _all_nonzero(outcome: OutcomeTuple) -> bool:
    return all(v != 0.0 for v in outcome)


def _one_zero(outcome: OutcomeTuple) -> bool:
    return len(outcome) == 2 and (outcome[0] == 0.0) != (outcome[1] == 0.0)


CLOSED_FORMS: Tuple[ClosedFormCurve, ...] = (
    ClosedFormCurve(scenario="qubit", element_label="x,z", formula_id="lambda_plus",
                    applies_to=_all_nonzero, formula=qubit_lambda_plus),
    ClosedFormCurve(scenario="qubit", element_label="x,z", formula_id="lambda_minus",
                    applies_to=_all_nonzero, formula=qubit_lambda_minus),
    ClosedFormCurve(scenario="qutrit", element_label="x,0 | 0,z", formula_id="lambda",
                    applies_to=_one_zero, formula=qutrit_lambda),
    ClosedFormCurve(scenario="qutrit", element_label="x,z", formula_id="lambda1",
                    applies_to=_all_nonzero, formula=qutrit_lambda1),
    ClosedFormCurve(scenario="qutrit", element_label="x,z", formula_id="lambda2",
                    applies_to=_all_nonzero, formula=qutrit_lambda2),
    # two-qubit spectra contain the qutrit (x, z) eigenvalues
    ClosedFormCurve(scenario="two-qubit", element_label="x1,z1,x2,z2", formula_id="lambda1",
                    applies_to=_all_nonzero, formula=qutrit_lambda1),
    ClosedFormCurve(scenario="two-qubit", element_label="x1,z1,x2,z2", formula_id="lambda2",
                    applies_to=_all_nonzero, formula=qutrit_lambda2),
)

_ALPHABETS = {
    "qubit": ((1.0, -1.0), (1.0, -1.0)),
    "qutrit": ((1.0, 0.0, -1.0), (1.0, 0.0, -1.0)),
    "two-qubit": ((1.0, -1.0),) * 4,
}


def parse_outcome_label(label: Union[str, Sequence[float]]) -> OutcomeTuple:
    """'+1,-1' or (1, -1) -> (1.0, -1.0)"""
    if isinstance(label, str):
        try:
            return tuple(float(part) + 0.0 for part in label.split(","))
        except ValueError:
            raise UnknownLabelException(f"cannot parse element label {label!r}") from None
    return tuple(float(v) + 0.0 for v in label)


def closed_form_curves(scenario: str, label: Union[str, Sequence[float]]) -> List[ClosedFormCurve]:
    outcome = parse_outcome_label(label)
    alphabets = _ALPHABETS.get(scenario)
    if alphabets is None:
        raise UnknownLabelException(f"no closed forms registered for scenario {scenario!r}")
    if len(outcome) != len(alphabets) or any(v not in a for v, a in zip(outcome, alphabets)):
        raise UnknownLabelException(f"{outcome} is not an outcome of the {scenario} scenario")
    curves = [c for c in CLOSED_FORMS if c.scenario == scenario and c.applies_to(outcome)]
    if not curves:
        raise UnknownLabelException(f"no closed-form eigenvalue known for {scenario} element {outcome}")
    return curves


def closed_form_eigenvalues(scenario: str, label: Union[str, Sequence[float]], eta: float) -> List[float]:
    return [curve(eta) for curve in closed_form_curves(scenario, label)]


# ---------- closed-form matrices (test fixtures, never used by the pipeline) ----------
def qubit_element(x: float, z: float, eta: float) -> CMatrix:
    """1/4 (I + eta x sigma_x + eta z sigma_z)"""
    m = pauli("I").array + eta * x * pauli("X").array + eta * z * pauli("Z").array
    return CMatrix(entries=m / 4.0, hermitian=True)


def qubit_marginal(which: str, label: float, eta: float) -> CMatrix:
    """1/2 (I + eta label sigma) for which in {'X', 'Z'}"""
    return CMatrix(entries=(pauli("I").array + eta * label * pauli(which).array) / 2.0, hermitian=True)


def qutrit_element(x: float, z: float, eta: float) -> CMatrix:
    e, e2, r = eta, eta * eta, _SQRT2
    if x == 0 and z == 0:
        m = np.array([
            [1 - e2, 0, e2 * (e2 - 1)],
            [0, 1 - e2 * e2, 0],
            [e2 * (e2 - 1), 0, 1 - e2],
        ]) / 4.0
    elif z == 0:
        m = np.array([
            [1 - e2, r * x * e, e2 * (1 - e2)],
            [r * x * e, (1 + e2) ** 2, r * x * e],
            [e2 * (1 - e2), r * x * e, 1 - e2],
        ]) / 8.0
    elif x == 0:
        m = np.array([
            [1 + 2 * z * e + e2, 0, -e2 * (1 + e2)],
            [0, (e2 - 1) ** 2, 0],
            [-e2 * (1 + e2), 0, 1 - 2 * z * e + e2],
        ]) / 8.0
    else:
        m = np.array([
            [1 + 2 * z * e + e2, r * x * e * (1 + z * e), e2 * (1 + e2)],
            [r * x * e * (1 + z * e), 1 - e2 * e2, r * x * e * (1 - z * e)],
            [e2 * (1 + e2), r * x * e * (1 - z * e), 1 - 2 * z * e + e2],
        ]) / 16.0
    return CMatrix(entries=m, hermitian=True)


def qutrit_marginal_x(x: float, eta: float) -> CMatrix:
    e, e2, r = eta, eta * eta, _SQRT2
    if x == 0:
        m = np.array([[1, 0, -e2], [0, 1 - e2, 0], [-e2, 0, 1]]) / 2.0
    else:
        m = np.array([
            [1, r * x * e, e2],
            [r * x * e, 1 + e2, r * x * e],
            [e2, r * x * e, 1],
        ]) / 4.0
    return CMatrix(entries=m, hermitian=True)


def qutrit_marginal_z(z: float, eta: float) -> CMatrix:
    e, e2 = eta, eta * eta
    if z == 0:
        m = np.diag([1 - e2, 1 + e2, 1 - e2]) / 2.0
    else:
        m = np.diag([1 + 2 * z * e + e2, 1 - e2, 1 - 2 * z * e + e2]) / 4.0
    return CMatrix(entries=m, hermitian=True)


def two_qubit_element(x1: float, z1: float, x2: float, z2: float, eta: float) -> CMatrix:
    """1/16 [(I + eta x1 X + eta z1 Z) (x) (I + eta x2 X + eta z2 Z) - eta^4 x1 x2 z1 z2 Y (x) Y]"""
    a1 = pauli("I") + eta * x1 * pauli("X") + eta * z1 * pauli("Z")
    a2 = pauli("I") + eta * x2 * pauli("X") + eta * z2 * pauli("Z")
    m = tensor(a1, a2).array - eta ** 4 * x1 * x2 * z1 * z2 * pauli("YY").array
    return CMatrix(entries=m / 16.0, hermitian=True)
