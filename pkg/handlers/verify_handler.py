import asyncio
import logging
import math
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from handlers.command_handler import EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED
from models.measurement import QmoFamily
from models.operators import CMatrix
from models.scenario import SCENARIO_NAMES
from models.schemas import CheckResult
from services.compat_service import CompatService, min_eigenvalue_of_family
from services.fuzzing_service import extract_marginal_povm, validate_povm
from services.matqalg_service import eig_hermitian, eigvals_hermitian, pauli, pauli_decompose, pauli_reconstruct, tensor
from services.mhcore_service import (
    born_probabilities,
    marginalize,
    moment,
    qmo_from_charfn,
    qmo_jordan,
    quasiprob,
    singleton_grouping,
    symmetrized_moment,
)
from services.scenario_service import (
    build_scenario,
    closed_form_curves,
    family_builder,
    qubit_element,
    qubit_marginal,
    qutrit_element,
    qutrit_marginal_x,
    qutrit_marginal_z,
    two_qubit_element,
)
from services.state_service import density_from_bloch, random_density
from utils.exceptions import UnknownLabelException, VerificationException
from utils.serialization import write_output

logger = logging.getLogger(__name__)

FIXTURE_ETAS = (0.0, 0.5, 1.0)
QUBIT_THRESHOLD = 1.0 / math.sqrt(2.0)
QUTRIT_THRESHOLD = math.sqrt(math.sqrt(2.0) - 1.0)


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise VerificationException(message)


def _diff(a, b) -> float:
    a = a.array if isinstance(a, CMatrix) else np.asarray(a)
    b = b.array if isinstance(b, CMatrix) else np.asarray(b)
    return float(np.max(np.abs(a - b)))


def _grid(points: int = 101) -> List[float]:
    return [float(e) for e in np.linspace(0.0, 1.0, points)]


class VerifyHandler:
    """Self-checks of the whole pipeline against closed forms and independent oracles"""

    def __init__(self, seed: int = 7, random_states: int = 100):
        self.seed = seed
        self.random_states = random_states
        self.compat = CompatService()
        self._builders: Dict[str, Callable[[float], QmoFamily]] = {}

    def builder(self, name: str) -> Callable[[float], QmoFamily]:
        if name not in self._builders:
            self._builders[name] = family_builder(name)
        return self._builders[name]

    # ---------- linear algebra ----------
    def check_eigensolver(self) -> str:
        rng = np.random.default_rng(self.seed)
        worst = 0.0
        for dim in (2, 3, 4, 8, 16):
            for _ in range(20):
                a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
                m = CMatrix(entries=0.5 * (a + a.conj().T), hermitian=True)
                values, vectors = eig_hermitian(m)
                scale = float(np.linalg.norm(m.array))
                residual = float(np.max(np.abs(m.array @ vectors - vectors * values))) / scale
                orthonormal = _diff(vectors.conj().T @ vectors, np.eye(dim))
                _expect(bool(np.all(values[:-1] >= values[1:])), f"eigenvalues not descending for dim {dim}")
                worst = max(worst, residual, orthonormal)
        _expect(worst <= 1e-12, f"eigen residual {worst:.3e} exceeds 1e-12")
        return f"worst residual {worst:.2e}"

    def check_pauli_roundtrip(self) -> str:
        rng = np.random.default_rng(self.seed + 1)
        worst = 0.0
        for dim in (2, 4, 8):
            for _ in range(10):
                m = CMatrix(entries=rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
                worst = max(worst, _diff(pauli_reconstruct(pauli_decompose(m)), m))
        _expect(worst <= 1e-13, f"Pauli round trip error {worst:.3e}")
        return f"worst error {worst:.2e}"

    # ---------- family structure ----------
    def check_family_invariants(self) -> str:
        worst = 0.0
        for name in SCENARIO_NAMES:
            for eta in (0.0, 0.25, 0.5, 0.75, 1.0):
                fam = self.builder(name)(eta)
                total = sum((e.array for _, e in fam.items()), np.zeros((fam.space_dim,) * 2, dtype=np.complex128))
                worst = max(worst, _diff(total, np.eye(fam.space_dim)))
                worst = max(worst, max(e.hermitian_defect() for _, e in fam.items()))
                if eta == 0.0:
                    for outcome, e in fam.items():
                        scalar = e.trace() / fam.space_dim
                        _expect(_diff(e, scalar * np.eye(fam.space_dim)) <= 1e-12,
                                f"{name} element {outcome} is not a multiple of I at eta = 0")
        _expect(worst <= 1e-11, f"normalization/Hermiticity defect {worst:.3e}")
        return f"worst defect {worst:.2e}"

    def check_marginal_chain(self) -> str:
        eta = 0.6
        fam = self.builder("two-qubit")(eta)
        direct = marginalize(fam, [0, 1])
        via_2 = marginalize(marginalize(fam, [0, 1, 2]), [0, 1])
        via_3 = marginalize(marginalize(fam, [0, 1, 3]), [0, 1])
        worst = 0.0
        for outcome, e in direct.items():
            worst = max(worst, _diff(e, via_2.element(outcome)), _diff(e, via_3.element(outcome)))
        strings = ("XI", "ZI", "IX", "IZ")
        for k, label in enumerate(strings):
            single = marginalize(fam, [k])
            for (value,), e in single.items():
                expected = 0.5 * (pauli("II").array + eta * value * pauli(label).array)
                worst = max(worst, _diff(e, expected))
        _expect(worst <= 1e-12, f"marginalization order dependence {worst:.3e}")
        return f"worst difference {worst:.2e}"

    def check_charfn_vs_jordan(self) -> str:
        worst = 0.0
        for name in SCENARIO_NAMES:
            scenario, sharp = build_scenario(name)
            oracle = qmo_from_charfn(scenario.observables, scenario.grouping, sharp.space_dim)
            for outcome, e in sharp.items():
                worst = max(worst, _diff(e, oracle.element(outcome)))
        _expect(worst <= 1e-10, f"characteristic-function route differs by {worst:.3e}")
        return f"3 scenarios, worst difference {worst:.2e}"

    def check_full_symmetrization(self) -> str:
        scenario, grouped = build_scenario("two-qubit")
        full = qmo_jordan(scenario.observables, singleton_grouping(len(scenario.observables)))
        yy = pauli("YY").array
        worst = 0.0
        for outcome, e in full.items():
            x1, z1, x2, z2 = outcome
            product = tensor(qubit_element(x1, z1, 1.0), qubit_element(x2, z2, 1.0))
            worst = max(worst, _diff(e, product))
            worst = max(worst, _diff(grouped.element(outcome).array - e.array, -x1 * x2 * z1 * z2 * yy / 16.0))
        _expect(worst <= 1e-12, f"full symmetrization relation off by {worst:.3e}")
        return "4! family is the qubit product; grouped family adds -x1 x2 z1 z2 YY / 16"

    # ---------- closed forms and fixtures ----------
    def _closed_form_worst(self, name: str) -> float:
        worst = 0.0
        matched = 0
        for eta in _grid():
            for outcome, e in self.builder(name)(eta).items():
                try:
                    curves = closed_form_curves(name, outcome)
                except UnknownLabelException:
                    continue
                values = eigvals_hermitian(e)
                for curve in curves:
                    worst = max(worst, float(np.min(np.abs(values - curve(eta)))))
                    matched += 1
        _expect(matched > 0, f"no closed forms matched for {name}")
        return worst

    def _closed_form_check(self, name: str) -> str:
        worst = self._closed_form_worst(name)
        _expect(worst <= 1e-10, f"{name} eigenvalues miss closed forms by {worst:.3e}")
        return f"101-point grid, worst miss {worst:.2e}"

    def check_qubit_fixtures(self) -> str:
        worst = 0.0
        for eta in FIXTURE_ETAS:
            fam = self.builder("qubit")(eta)
            for (x, z), e in fam.items():
                worst = max(worst, _diff(e, qubit_element(x, z, eta)))
            for index, which in ((0, "X"), (1, "Z")):
                povm = extract_marginal_povm(fam, index)
                for label in povm.labels:
                    worst = max(worst, _diff(povm.effect(label), qubit_marginal(which, label, eta)))
        _expect(worst <= 1e-12, f"qubit fixtures off by {worst:.3e}")
        return f"worst entry {worst:.2e}"

    def check_qutrit_fixtures(self) -> str:
        worst = 0.0
        for eta in FIXTURE_ETAS:
            fam = self.builder("qutrit")(eta)
            for (x, z), e in fam.items():
                worst = max(worst, _diff(e, qutrit_element(x, z, eta)))
            povm_x = extract_marginal_povm(fam, 0)
            povm_z = extract_marginal_povm(fam, 1)
            for label in povm_x.labels:
                worst = max(worst, _diff(povm_x.effect(label), qutrit_marginal_x(label, eta)))
            for label in povm_z.labels:
                worst = max(worst, _diff(povm_z.effect(label), qutrit_marginal_z(label, eta)))
        _expect(worst <= 1e-12, f"qutrit fixtures off by {worst:.3e}")
        return f"elements and marginal POVMs, worst entry {worst:.2e}"

    def check_two_qubit_fixtures(self) -> str:
        worst = 0.0
        for eta in FIXTURE_ETAS:
            fam = self.builder("two-qubit")(eta)
            for outcome, e in fam.items():
                worst = max(worst, _diff(e, two_qubit_element(*outcome, eta)))
            reduced = marginalize(fam, [0, 1])
            for (x1, z1), e in reduced.items():
                worst = max(worst, _diff(e, tensor(qubit_element(x1, z1, eta), pauli("I"))))
        _expect(worst <= 1e-12, f"two-qubit fixtures off by {worst:.3e}")
        return f"worst entry {worst:.2e}"

    # ---------- quasi-probabilities ----------
    def check_expectation_reproduction(self) -> str:
        rng = np.random.default_rng(self.seed + 2)
        worst = 0.0
        for name in SCENARIO_NAMES:
            sharp = self.builder(name)(1.0)
            fuzzy = self.builder(name)(0.7)
            povms = [extract_marginal_povm(fuzzy, k) for k in range(fuzzy.nslots)]
            powers = (1, 1) + (0,) * (sharp.nslots - 2)
            for _ in range(self.random_states):
                rho = random_density(sharp.space_dim, rng)
                table = quasiprob(fuzzy, rho)
                for k, povm in enumerate(povms):
                    born = born_probabilities(povm, rho)
                    for label, p in born.items():
                        marginal = sum(v for o, v in table.entries.items() if o[k] == label)
                        worst = max(worst, abs(marginal - p))
                sharp_table = quasiprob(sharp, rho)
                worst = max(worst, abs(moment(sharp_table, powers) - symmetrized_moment(sharp.observables, powers, rho)))
        _expect(worst <= 1e-10, f"quasi-probability marginals or moments off by {worst:.3e}")
        return f"{self.random_states} states per scenario, worst {worst:.2e}"

    def check_negativity_witness(self) -> str:
        rho = density_from_bloch((1.0 / math.sqrt(2.0), 0.0, 1.0 / math.sqrt(2.0)))
        expected = (1.0 - math.sqrt(2.0)) / 4.0
        table = quasiprob(self.builder("qubit")(1.0), rho)
        oracle = float(np.trace(rho.matrix.array @ qubit_element(-1.0, -1.0, 1.0).array).real)
        _expect(abs(table.p((-1.0, -1.0)) - expected) <= 1e-12, f"P(-1,-1) = {table.p((-1.0, -1.0))!r}")
        _expect(abs(oracle - expected) <= 1e-12, f"trace oracle gives {oracle!r}")
        softened = quasiprob(self.builder("qubit")(0.5), rho)
        _expect(not softened.negative_outcomes(), "negative entries remain at eta = 0.5")
        return f"P(-1,-1) = {table.p((-1.0, -1.0)):.9f}"

    # ---------- compatibility ----------
    def check_marginal_positivity(self) -> str:
        witness: Optional[float] = None
        for eta in _grid():
            fam = self.builder("qutrit")(eta)
            for k in (0, 1):
                bad = validate_povm(extract_marginal_povm(fam, k))
                _expect(not bad, f"qutrit marginal {k} not positive at eta = {eta}: {bad}")
            if witness is None and min_eigenvalue_of_family(fam) < -self.compat.tol:
                witness = eta
        _expect(witness is not None, "joint family never fails positivity on the grid")
        return f"marginals positive on the grid, joint fails from eta = {witness:.2f}"

    def check_thresholds(self) -> str:
        qubit = self.compat.threshold(self.builder("qubit"))
        qutrit = self.compat.threshold(self.builder("qutrit"))
        two_qubit = self.compat.threshold(self.builder("two-qubit"))
        _expect(qubit is not None and abs(qubit - QUBIT_THRESHOLD) <= 1e-6, f"qubit threshold {qubit!r}")
        _expect(qutrit is not None and abs(qutrit - QUTRIT_THRESHOLD) <= 1e-5, f"qutrit threshold {qutrit!r}")
        _expect(two_qubit is not None and abs(two_qubit - QUTRIT_THRESHOLD) <= 1e-5, f"two-qubit threshold {two_qubit!r}")
        _expect(abs(qutrit - two_qubit) <= 1e-9, f"qutrit and two-qubit thresholds differ by {abs(qutrit - two_qubit):.3e}")
        return f"qubit {qubit:.7f}, qutrit {qutrit:.7f}, two-qubit {two_qubit:.7f}"

    def checks(self) -> List[Tuple[str, Callable[[], str]]]:
        return [
            ("eigensolver", self.check_eigensolver),
            ("pauli-roundtrip", self.check_pauli_roundtrip),
            ("family-invariants", self.check_family_invariants),
            ("marginal-chain", self.check_marginal_chain),
            ("charfn-vs-jordan", self.check_charfn_vs_jordan),
            ("full-symmetrization", self.check_full_symmetrization),
            ("qubit-closed-form", lambda: self._closed_form_check("qubit")),
            ("qutrit-closed-form", lambda: self._closed_form_check("qutrit")),
            ("two-qubit-closed-form", lambda: self._closed_form_check("two-qubit")),
            ("qubit-fixtures", self.check_qubit_fixtures),
            ("qutrit-fixtures", self.check_qutrit_fixtures),
            ("two-qubit-fixtures", self.check_two_qubit_fixtures),
            ("expectation-reproduction", self.check_expectation_reproduction),
            ("negativity-witness", self.check_negativity_witness),
            ("marginal-positivity", self.check_marginal_positivity),
            ("thresholds", self.check_thresholds),
        ]

    def run(self) -> List[CheckResult]:
        results = []
        for name, check in self.checks():
            try:
                detail = check()
                results.append(CheckResult(name=name, passed=True, detail=detail))
            except Exception as e:
                logger.error(f"Check {name} failed: {type(e).__name__}: {str(e)}")
                results.append(CheckResult(name=name, passed=False, detail=str(e)))
        return results


def render_results(results: List[CheckResult]) -> str:
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
    passed = sum(1 for r in results if r.passed)
    lines.append(f"{passed}/{len(results)} checks passed")
    failed = [r.name for r in results if not r.passed]
    if failed:
        lines.append(f"first failure: {failed[0]}")
    return "\n".join(lines) + "\n"


# Main handler function for app.py
async def handle_verify(out: Optional[Path] = None) -> int:
    """Run every check; exit code 0 when all pass, 1 otherwise, 2 when the report cannot be written"""
    handler = VerifyHandler()
    results = await asyncio.to_thread(handler.run)
    try:
        write_output(render_results(results), out)
    except OSError as e:
        logger.error(f"Cannot write verification report: {str(e)}")
        return EXIT_USAGE

    failed = [r for r in results if not r.passed]
    if failed:
        logger.error(f"Verification failed at {failed[0].name}")
        return EXIT_VERIFY_FAILED
    logger.info(f"All {len(results)} checks passed")
    return EXIT_OK
