"""Margenau-Hill quasi measurement operators

Sharp families are built as symmetrized (Jordan) products of spectral
projectors. The characteristic-function route, inverted by a discrete Fourier
transform, is kept as an independent construction of the same family.
"""

import logging
import math
from itertools import permutations, product
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from config.settings import settings
from models.measurement import (
    MarginalPovm,
    Observable,
    OutcomeTuple,
    QmoFamily,
    QuasiProbTable,
    SpectralPoint,
    enumerate_outcomes,
)
from models.operators import CMatrix, DensityMatrix
from services.matqalg_service import commutator_norm, eig_hermitian, require_hermitian
from utils.exceptions import (
    DimMismatchException,
    EmptyKeepSetException,
    NonCommutingGroupException,
    NonIntegerSpectrumException,
    UnsupportedSpectrumException,
    ValidationException,
)

logger = logging.getLogger(__name__)

Grouping = Sequence[Sequence[int]]

# DFT grid points per axis; labels in {-1, 0, +1} are distinct mod 3
_DFT_POINTS = 3
_DFT_LABELS = (-1.0, 0.0, 1.0)


def _snap_label(value: float, tol: float) -> float:
    nearest = round(value)
    if abs(value - nearest) <= tol:
        return float(nearest) + 0.0
    return round(value, 10) + 0.0


def spectral(m: CMatrix) -> Observable:
    """Spectral decomposition with degenerate eigenvalues merged"""
    require_hermitian(m)
    tol = settings.MERGE_TOL
    values, vectors = eig_hermitian(m)

    clusters: List[List[int]] = []
    for i, value in enumerate(values):
        if clusters and values[clusters[-1][-1]] - value <= tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    points = []
    for cluster in clusters:
        basis = vectors[:, cluster]
        label = _snap_label(float(np.mean(values[cluster])), tol)
        projector = CMatrix(entries=basis @ basis.conj().T, hermitian=True)
        points.append(SpectralPoint(eigenvalue=label, projector=projector, multiplicity=len(cluster)))

    return Observable(matrix=m.as_hermitian(), spectrum=tuple(points))


def validate_grouping(grouping: Grouping, n: int) -> Tuple[Tuple[int, ...], ...]:
    """Groups as tuples, checked to partition range(n)"""
    groups = tuple(tuple(int(i) for i in g) for g in grouping)
    if not groups or any(not g for g in groups):
        raise ValidationException("grouping needs at least one non-empty group")
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(n)):
        raise ValidationException(f"grouping {groups} is not a partition of observables 0..{n - 1}")
    return groups


def singleton_grouping(n: int) -> Tuple[Tuple[int, ...], ...]:
    """One group per observable: full n! symmetrization"""
    return tuple((i,) for i in range(n))


def _check_commuting(obs: Sequence[Observable], groups: Tuple[Tuple[int, ...], ...]) -> None:
    for group in groups:
        for a, b in _pairs(group):
            norm = commutator_norm(obs[a].matrix, obs[b].matrix)
            if norm > settings.COMMUTE_TOL:
                raise NonCommutingGroupException(
                    f"observables {a} and {b} share a group but their commutator has norm {norm:.3e}"
                )


def _pairs(group: Tuple[int, ...]):
    return [(group[i], group[j]) for i in range(len(group)) for j in range(i + 1, len(group))]


def _symmetrize(factors: Sequence[np.ndarray]) -> np.ndarray:
    """(1/g!) sum over permutations of the ordered products"""
    dim = factors[0].shape[0]
    total = np.zeros((dim, dim), dtype=np.complex128)
    count = 0
    for order in permutations(range(len(factors))):
        prod_ = np.eye(dim, dtype=np.complex128)
        for k in order:
            prod_ = prod_ @ factors[k]
        total += prod_
        count += 1
    return total / count


def _symmetrized_family(
    effects: Sequence[Mapping[float, np.ndarray]],
    alphabets: Tuple[Tuple[float, ...], ...],
    groups: Tuple[Tuple[int, ...], ...],
    dim: int,
) -> Dict[OutcomeTuple, CMatrix]:
    elements: Dict[OutcomeTuple, CMatrix] = {}
    for outcome in enumerate_outcomes(alphabets):
        group_ops = []
        for group in groups:
            op = np.eye(dim, dtype=np.complex128)
            for k in group:
                op = op @ effects[k][outcome[k]]
            group_ops.append(op)
        elements[outcome] = CMatrix(entries=_symmetrize(group_ops), hermitian=True)
    return elements


def qmo_jordan(obs: Sequence[Observable], grouping: Grouping) -> QmoFamily:
    """Sharp MH-QMO: symmetrized products of group spectral projectors"""
    obs = tuple(obs)
    if not obs:
        raise ValidationException("qmo_jordan needs at least one observable")
    dim = obs[0].dim
    if any(o.dim != dim for o in obs):
        raise DimMismatchException("all observables must act on the same space")
    groups = validate_grouping(grouping, len(obs))
    _check_commuting(obs, groups)

    alphabets = tuple(o.labels for o in obs)
    effects = [{p.eigenvalue: p.projector.array for p in o.spectrum} for o in obs]
    elements = _symmetrized_family(effects, alphabets, groups, dim)

    logger.debug(f"Built sharp MH-QMO with {len(elements)} elements over {len(groups)} groups")
    return QmoFamily(
        observables=obs,
        alphabets=alphabets,
        grouping=groups,
        eta=1.0,
        elements=elements,
        space_dim=dim,
    )


def jordan_of_povms(povms: Sequence[MarginalPovm], grouping: Grouping, eta: float | None = None) -> QmoFamily:
    """Generalized Jordan product of arbitrary POVMs

    Effects of observables in the same group are multiplied in group order and
    the group products are symmetrized over group permutations.
    """
    povms = tuple(povms)
    if not povms:
        raise ValidationException("jordan_of_povms needs at least one POVM")
    dim = next(iter(povms[0].elements.values())).dim
    groups = validate_grouping(grouping, len(povms))
    alphabets = tuple(tuple(sorted(p.labels, reverse=True)) for p in povms)
    effects = [{label: e.array for label, e in p.elements.items()} for p in povms]
    elements = _symmetrized_family(effects, alphabets, groups, dim)
    return QmoFamily(
        alphabets=alphabets,
        grouping=groups,
        eta=povms[0].eta if eta is None else eta,
        elements=elements,
        space_dim=dim,
    )


def quasiprob(fam: QmoFamily, rho: DensityMatrix) -> QuasiProbTable:
    """P_MH(x) = Tr[rho G(x)] for every outcome tuple"""
    if rho.dim != fam.space_dim:
        raise DimMismatchException(f"state has dim {rho.dim}, family acts on dim {fam.space_dim}")
    entries: Dict[OutcomeTuple, float] = {}
    for outcome, element in fam.items():
        value = complex(np.trace(rho.matrix.array @ element.array))
        if abs(value.imag) > 1e-11:
            raise ValidationException(f"Tr[rho G{outcome}] has imaginary residue {value.imag:.3e}")
        entries[outcome] = value.real
    return QuasiProbTable(entries=entries, eta=fam.eta)


def _kept_family_fields(fam: QmoFamily, keep: Tuple[int, ...]):
    remap = {old: new for new, old in enumerate(keep)}
    groups = tuple(
        tuple(remap[i] for i in g if i in remap) for g in fam.grouping
    )
    groups = tuple(g for g in groups if g)
    observables = tuple(fam.observables[i] for i in keep) if fam.observables else ()
    alphabets = tuple(fam.alphabets[i] for i in keep)
    return observables, alphabets, groups


def marginalize(fam: QmoFamily, keep: Sequence[int]) -> QmoFamily:
    """Sum elements over the outcomes of every observable not in ``keep``"""
    keep = tuple(sorted(set(int(k) for k in keep)))
    if not keep:
        raise EmptyKeepSetException("marginalize needs at least one observable index to keep")
    if keep[0] < 0 or keep[-1] >= fam.nslots:
        raise ValidationException(f"keep indices {keep} out of range for {fam.nslots} observables")
    if len(keep) == fam.nslots:
        return fam

    observables, alphabets, groups = _kept_family_fields(fam, keep)
    sums: Dict[OutcomeTuple, np.ndarray] = {
        o: np.zeros((fam.space_dim, fam.space_dim), dtype=np.complex128)
        for o in enumerate_outcomes(alphabets)
    }
    for outcome, element in fam.items():
        sums[tuple(outcome[k] for k in keep)] += element.array

    return QmoFamily(
        observables=observables,
        alphabets=alphabets,
        grouping=groups,
        eta=fam.eta,
        elements={o: CMatrix(entries=m, hermitian=True) for o, m in sums.items()},
        space_dim=fam.space_dim,
    )


def _require_integer_spectra(obs: Sequence[Observable]) -> None:
    for k, o in enumerate(obs):
        for label in o.labels:
            if label != round(label):
                raise NonIntegerSpectrumException(f"observable {k} has non-integer eigenvalue {label!r}")


def _group_exponential(obs: Sequence[Observable], group: Sequence[int], u: Sequence[float]) -> np.ndarray:
    """exp(i sum_k X_k u_k) over a commuting group, via spectral projectors"""
    dim = obs[0].dim
    op = np.eye(dim, dtype=np.complex128)
    for k in group:
        exp_k = sum(
            (np.exp(1j * p.eigenvalue * u[k]) * p.projector.array for p in obs[k].spectrum),
            np.zeros((dim, dim), dtype=np.complex128),
        )
        op = op @ exp_k
    return op


def char_operator(obs: Sequence[Observable], grouping: Grouping, u: Sequence[float]) -> np.ndarray:
    """Operator-valued MH characteristic function: symmetrized group exponentials"""
    obs = tuple(obs)
    groups = validate_grouping(grouping, len(obs))
    if len(u) != len(obs):
        raise DimMismatchException(f"u has {len(u)} components for {len(obs)} observables")
    _require_integer_spectra(obs)
    factors = [_group_exponential(obs, g, u) for g in groups]
    return _symmetrize(factors)


def char_function(obs: Sequence[Observable], grouping: Grouping, rho: DensityMatrix, u: Sequence[float]) -> complex:
    """Tr[rho C(u)], the MH characteristic function at u"""
    if rho.dim != obs[0].dim:
        raise DimMismatchException(f"state has dim {rho.dim}, observables act on dim {obs[0].dim}")
    return complex(np.trace(rho.matrix.array @ char_operator(obs, grouping, u)))


def qmo_from_charfn(obs: Sequence[Observable], grouping: Grouping, space_dim: int) -> QmoFamily:
    """Sharp MH-QMO by discrete Fourier inversion of the characteristic operator"""
    obs = tuple(obs)
    if any(o.dim != space_dim for o in obs):
        raise DimMismatchException(f"observables must act on dim {space_dim}")
    for k, o in enumerate(obs):
        bad = [label for label in o.labels if label not in _DFT_LABELS]
        if bad:
            raise UnsupportedSpectrumException(
                f"observable {k} has labels {bad} outside {{-1, 0, +1}}"
            )
    groups = validate_grouping(grouping, len(obs))
    n = len(obs)
    step = 2.0 * math.pi / _DFT_POINTS

    grid = list(product(range(_DFT_POINTS), repeat=n))
    operators = {ks: char_operator(obs, groups, [step * k for k in ks]) for ks in grid}

    alphabets = tuple(o.labels for o in obs)
    elements: Dict[OutcomeTuple, CMatrix] = {}
    norm = float(_DFT_POINTS ** n)
    for outcome in enumerate_outcomes(alphabets):
        acc = np.zeros((space_dim, space_dim), dtype=np.complex128)
        for ks, op in operators.items():
            phase = step * sum(x * k for x, k in zip(outcome, ks))
            acc += op * np.exp(-1j * phase)
        acc /= norm
        elements[outcome] = CMatrix(entries=acc, hermitian=True)

    return QmoFamily(
        observables=obs,
        alphabets=alphabets,
        grouping=groups,
        eta=1.0,
        elements=elements,
        space_dim=space_dim,
    )


def moment(table: QuasiProbTable, powers: Sequence[int]) -> float:
    """sum_x P(x) prod_k x_k^r_k"""
    total = 0.0
    for outcome, p in table.entries.items():
        if len(outcome) != len(powers):
            raise DimMismatchException(f"{len(powers)} powers for outcome tuples of length {len(outcome)}")
        total += p * math.prod(x ** r for x, r in zip(outcome, powers))
    return total


def symmetrized_moment(obs: Sequence[Observable], powers: Sequence[int], rho: DensityMatrix) -> float:
    """Re Tr[rho (1/n!) sum_P prod_k X_k^r_k], the operator side of the MH rule"""
    obs = tuple(obs)
    if len(powers) != len(obs):
        raise DimMismatchException(f"{len(powers)} powers for {len(obs)} observables")
    factors = [np.linalg.matrix_power(o.matrix.array, int(r)) for o, r in zip(obs, powers)]
    return float(np.trace(rho.matrix.array @ _symmetrize(factors)).real)


def born_probabilities(povm: MarginalPovm, rho: DensityMatrix) -> Dict[float, float]:
    """Re Tr[rho E] for every effect of the POVM"""
    return {label: float(np.trace(rho.matrix.array @ e.array).real) for label, e in povm.elements.items()}
