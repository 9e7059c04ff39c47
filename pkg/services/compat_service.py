"""Positivity analysis of MH-QMO families as a function of eta

Positivity of every element is a sufficient condition for joint measurability,
so a failing family is reported as "not-certified", never as incompatible.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from models.measurement import OutcomeTuple, QmoFamily
from models.schemas import CompatReport, CurvePoint, Verdict, VerdictEntry
from services.matqalg_service import eigvals_hermitian
from utils.exceptions import NotPositiveAtZeroException, SignStructureException, ValidationException

logger = logging.getLogger(__name__)

FamilyBuilder = Callable[[float], QmoFamily]

COMPATIBLE: Verdict = "compatible-by-sufficient-condition"
NOT_CERTIFIED: Verdict = "not-certified"


def element_spectra(fam: QmoFamily) -> Dict[OutcomeTuple, np.ndarray]:
    """Descending eigenvalues of every element"""
    return {outcome: eigvals_hermitian(element) for outcome, element in fam.items()}


def min_eigenvalue_of_family(fam: QmoFamily) -> float:
    """Smallest eigenvalue over all elements"""
    return min(float(values[-1]) for values in element_spectra(fam).values())


def outcome_key(outcome: OutcomeTuple) -> str:
    """Column-safe element label, e.g. G(+1|-1)"""
    return "G(" + "|".join(f"{v:+g}" if v else "0" for v in outcome) + ")"


def validate_grid(grid: Sequence[float]) -> List[float]:
    etas = [float(e) for e in grid]
    if not etas:
        raise ValidationException("eta grid must not be empty")
    if any(not 0.0 <= e <= 1.0 for e in etas):
        raise ValidationException("eta grid must lie in [0, 1]")
    if any(b <= a for a, b in zip(etas, etas[1:])):
        raise ValidationException("eta grid must be strictly increasing")
    return etas


class CompatService:
    """Minimum-eigenvalue curves, thresholds and verdicts for one positivity slack"""

    def __init__(
        self,
        tol: Optional[float] = None,
        bisection_tol: Optional[float] = None,
        prescan_points: Optional[int] = None,
    ):
        self.tol = settings.MHQMO_TOL if tol is None else tol
        self.bisection_tol = settings.BISECTION_TOL if bisection_tol is None else bisection_tol
        self.prescan_points = settings.PRESCAN_POINTS if prescan_points is None else prescan_points

    # ---------- single families ----------
    def verdict(self, fam: QmoFamily) -> Verdict:
        """Compatible when every element is positive within tol"""
        return COMPATIBLE if min_eigenvalue_of_family(fam) >= -self.tol else NOT_CERTIFIED

    def parent_povm_check(self, fam: QmoFamily) -> bool:
        """0 <= G <= I for every element"""
        for values in element_spectra(fam).values():
            if values[-1] < -self.tol or values[0] > 1.0 + self.tol:
                return False
        return True

    # ---------- curves ----------
    def curve_point(self, builder: FamilyBuilder, eta: float, per_element: bool = False) -> CurvePoint:
        fam = builder(eta)
        spectra = element_spectra(fam)
        lowest = min(float(v[-1]) for v in spectra.values())
        logger.debug(f"eta={eta:.9f} min_eig={lowest:.3e}")
        element_eigs = None
        if per_element:
            element_eigs = {outcome_key(o): sorted(float(x) for x in v) for o, v in spectra.items()}
        return CurvePoint(eta=eta, min_eig=lowest, element_eigs=element_eigs)

    def min_eig_curve(self, builder: FamilyBuilder, grid: Sequence[float], per_element: bool = False) -> List[CurvePoint]:
        return [self.curve_point(builder, eta, per_element) for eta in validate_grid(grid)]

    def _min_eig(self, builder: FamilyBuilder, eta: float) -> float:
        return min_eigenvalue_of_family(builder(eta))

    def _negative(self, value: float) -> bool:
        return value < -self.tol

    # ---------- threshold ----------
    def prescan(self, builder: FamilyBuilder, bracket: Tuple[float, float] = (0.0, 1.0)) -> List[Tuple[float, float]]:
        """Sampled (eta, min_eig) pairs; raises unless the sign changes at most once"""
        lo, hi = bracket
        etas = np.linspace(lo, hi, self.prescan_points)
        samples = [(float(e), self._min_eig(builder, float(e))) for e in etas]
        signs = [self._negative(v) for _, v in samples]
        changes = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
        if changes > 1 or (changes == 1 and signs[0]):
            raise SignStructureException(
                f"minimum eigenvalue changes sign {changes} times on [{lo}, {hi}]; "
                "refusing to report a threshold"
            )
        return samples

    def threshold(self, builder: FamilyBuilder, bracket: Tuple[float, float] = (0.0, 1.0)) -> Optional[float]:
        """First eta where the family stops being positive, or None if positive on all of [0, 1]"""
        lo, hi = bracket
        if not 0.0 <= lo < hi <= 1.0:
            raise ValidationException(f"invalid bracket [{lo}, {hi}]")
        at_zero = self._min_eig(builder, 0.0)
        if self._negative(at_zero):
            raise NotPositiveAtZeroException(
                f"family has min eigenvalue {at_zero:.3e} at eta = 0; expected a positive family"
            )
        if not self._negative(self._min_eig(builder, 1.0)):
            logger.info("Family is positive on all of [0, 1]; no threshold in range")
            return None

        samples = self.prescan(builder, bracket)
        if self._negative(samples[0][1]):
            raise ValidationException(f"bracket start {lo} is already past the threshold")
        if not self._negative(samples[-1][1]):
            raise ValidationException(f"bracket [{lo}, {hi}] does not contain the threshold")
        first = next(i for i, (_, v) in enumerate(samples) if self._negative(v))
        # back off to the last sample that is not negative at all
        start = first - 1
        while start > 0 and samples[start][1] < 0.0:
            start -= 1
        lo, hi = samples[start][0], samples[start + 1][0]

        while hi - lo > self.bisection_tol:
            mid = 0.5 * (lo + hi)
            # strict sign: the slack would shift the root by tol / slope
            if self._min_eig(builder, mid) < 0.0:
                hi = mid
            else:
                lo = mid

        logger.info(f"Threshold found at eta* = {lo:.10f}")
        return lo

    def threshold_or_none(self, builder: FamilyBuilder, label: str) -> Optional[float]:
        """threshold() with sign-structure diagnostics logged instead of raised"""
        try:
            return self.threshold(builder)
        except (SignStructureException, NotPositiveAtZeroException) as e:
            logger.warning(f"No threshold for {label}: {str(e)}")
            return None

    def report(
        self,
        scenario: str,
        builder: FamilyBuilder,
        grid: Sequence[float],
        query_etas: Sequence[float] = (),
        per_element: bool = False,
        with_threshold: bool = True,
    ) -> CompatReport:
        points = self.min_eig_curve(builder, grid, per_element)
        thresh = self.threshold_or_none(builder, scenario) if with_threshold else None
        verdicts = [VerdictEntry(eta=e, verdict=self.verdict(builder(e))) for e in query_etas]
        return CompatReport(scenario=scenario, threshold=thresh, grid=points, verdicts=verdicts)


# module-level conveniences with settings defaults
def min_eig_curve(builder: FamilyBuilder, grid: Sequence[float]) -> List[CurvePoint]:
    """Minimum-eigenvalue curve with the settings tolerances"""
    return CompatService().min_eig_curve(builder, grid)


def threshold(builder: FamilyBuilder) -> Optional[float]:
    """Positivity threshold with the settings tolerances"""
    return CompatService().threshold(builder)


def verdict(fam: QmoFamily) -> Verdict:
    """Verdict with the settings positivity slack"""
    return CompatService().verdict(fam)
