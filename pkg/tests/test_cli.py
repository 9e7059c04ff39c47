import json
import math

import numpy as np
import pytest

from app import main
from config.settings import settings
from handlers.command_handler import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_VERIFY_FAILED
from handlers.verify_handler import VerifyHandler
from models.schemas import CheckResult
from services.scenario_service import family_builder
from tests.conftest import QUBIT_THRESHOLD, QUTRIT_THRESHOLD, matrix_json

X = [[0, 1], [1, 0]]
Z = [[1, 0], [0, -1]]


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def bloch_state(rx, ry, rz):
    return 0.5 * np.array([[1 + rz, rx - 1j * ry], [rx + 1j * ry, 1 - rz]])


class TestBuild:

    def test_qubit_at_half(self, capsys):
        code, out = run(capsys, "build", "--scenario", "qubit", "--eta", "0.5")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["eta"] == 0.5
        assert len(payload["elements"]) == 4
        first = payload["elements"][0]
        assert first["outcome"] == [1.0, 1.0]
        entries = [complex(re, im) for re, im in first["matrix"]["entries"]]
        np.testing.assert_allclose(entries, [0.375, 0.125, 0.125, 0.125], atol=1e-12)

    def test_qutrit_at_zero_is_scalar(self, capsys):
        code, out = run(capsys, "build", "--scenario", "qutrit", "--eta", "0")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert len(payload["elements"]) == 9
        for element in payload["elements"]:
            m = np.array([complex(re, im) for re, im in element["matrix"]["entries"]]).reshape(3, 3)
            np.testing.assert_allclose(m, m[0, 0] * np.eye(3), atol=1e-12)

    def test_two_qubit_sharp(self, capsys):
        code, out = run(capsys, "build", "--scenario", "two-qubit")
        assert code == EXIT_OK
        assert len(json.loads(out)["outcomes"]) == 16

    def test_output_is_byte_stable(self, capsys):
        _, first = run(capsys, "build", "--scenario", "qutrit", "--eta", "0.3")
        _, second = run(capsys, "build", "--scenario", "qutrit", "--eta", "0.3")
        assert first == second

    def test_writes_output_file(self, capsys, tmp_path):
        target = tmp_path / "family.json"
        code, out = run(capsys, "build", "--scenario", "qubit", "--out", str(target))
        assert code == EXIT_OK
        assert out == ""
        assert [p.name for p in tmp_path.iterdir()] == ["family.json"]
        assert len(json.loads(target.read_text())["elements"]) == 4

    def test_csv_is_rejected(self, capsys):
        code, _ = run(capsys, "build", "--scenario", "qubit", "--format", "csv")
        assert code == EXIT_USAGE

    def test_eta_out_of_range(self, capsys):
        code, _ = run(capsys, "build", "--scenario", "qubit", "--eta", "1.5")
        assert code == EXIT_USAGE

    def test_needs_exactly_one_source(self, capsys, write_json):
        path = write_json("obs.json", {"observables": [matrix_json(X)]})
        assert run(capsys, "build")[0] == EXIT_USAGE
        assert run(capsys, "build", "--scenario", "qubit", "--observables", str(path))[0] == EXIT_USAGE

    def test_unknown_scenario_is_an_argument_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["build", "--scenario", "ququart"])
        assert info.value.code == 2


class TestThreshold:

    @pytest.mark.parametrize(
        "scenario,expected,tol",
        [("qubit", QUBIT_THRESHOLD, 1e-6), ("qutrit", QUTRIT_THRESHOLD, 1e-5), ("two-qubit", QUTRIT_THRESHOLD, 1e-5)],
    )
    def test_scenarios(self, capsys, scenario, expected, tol):
        code, out = run(capsys, "threshold", "--scenario", scenario)
        assert code == EXIT_OK
        assert json.loads(out)["threshold"] == pytest.approx(expected, abs=tol)

    def test_csv(self, capsys):
        code, out = run(capsys, "threshold", "--scenario", "qubit", "--format", "csv")
        assert code == EXIT_OK
        header, value = out.strip().splitlines()
        assert header == "threshold"
        assert float(value) == pytest.approx(QUBIT_THRESHOLD, abs=1e-6)

    def test_user_observables(self, capsys, write_json):
        path = write_json("obs.json", {"observables": [matrix_json(X), matrix_json(Z)], "grouping": [[0], [1]]})
        code, out = run(capsys, "threshold", "--observables", str(path))
        assert code == EXIT_OK
        assert json.loads(out)["threshold"] == pytest.approx(QUBIT_THRESHOLD, abs=1e-6)

    def test_positivity_slack_does_not_shift_threshold(self, capsys, monkeypatch):
        monkeypatch.setattr(settings, "MHQMO_TOL", 0.01)
        code, out = run(capsys, "threshold", "--scenario", "qubit")
        assert code == EXIT_OK
        assert json.loads(out)["threshold"] == pytest.approx(QUBIT_THRESHOLD, abs=1e-6)


class TestScan:

    def test_qubit_endpoints_csv(self, capsys):
        code, out = run(capsys, "scan", "--scenario", "qubit", "--steps", "2", "--format", "csv")
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "eta,min_eig"
        rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
        assert rows[0] == pytest.approx([0.0, 0.25], abs=1e-12)
        assert rows[1] == pytest.approx([1.0, (1.0 - math.sqrt(2.0)) / 4.0], abs=1e-9)

    def test_qutrit_curve_changes_sign(self, capsys):
        code, out = run(capsys, "scan", "--scenario", "qutrit", "--min", "0", "--max", "1", "--steps", "101")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report["scenario"] == "qutrit"
        assert len(report["grid"]) == 101
        assert report["grid"][64]["eta"] == pytest.approx(0.64)
        assert report["grid"][64]["min_eig"] > 0.0
        assert report["grid"][65]["min_eig"] < 0.0
        assert report["threshold"] == pytest.approx(QUTRIT_THRESHOLD, abs=1e-5)

    def test_per_element_columns(self, capsys):
        code, out = run(capsys, "scan", "--scenario", "qubit", "--steps", "3", "--per-element", "--format", "csv")
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["eta", "min_eig", "G(+1|+1)[0]"]
        assert len(header) == 2 + 4 * 2
        assert len(lines) == 4

    def test_json_rows_omit_uncollected_fields(self, capsys):
        code, out = run(capsys, "scan", "--scenario", "qubit", "--steps", "3")
        assert code == EXIT_OK
        report = json.loads(out)
        assert sorted(report) == ["grid", "scenario", "threshold"]
        assert all(sorted(row) == ["eta", "min_eig"] for row in report["grid"])

    def test_json_rows_carry_element_eigenvalues(self, capsys):
        code, out = run(capsys, "scan", "--scenario", "qubit", "--steps", "3", "--per-element")
        assert code == EXIT_OK
        row = json.loads(out)["grid"][1]
        assert row["eta"] == 0.5
        assert len(row["element_eigs"]["G(+1|+1)"]) == 2

    def test_degenerate_range(self, capsys):
        code, _ = run(capsys, "scan", "--scenario", "qubit", "--min", "0.5", "--max", "0.5", "--steps", "2")
        assert code == EXIT_USAGE

    def test_too_few_steps(self, capsys):
        code, _ = run(capsys, "scan", "--scenario", "qubit", "--steps", "1")
        assert code == EXIT_USAGE


class TestQuasiprob:

    def test_maximally_mixed_qubit(self, capsys, write_json):
        path = write_json("rho.json", matrix_json(np.eye(2) / 2))
        code, out = run(capsys, "quasiprob", "--scenario", "qubit", "--state", str(path))
        assert code == EXIT_OK
        entries = json.loads(out)["entries"]
        assert [e["p"] for e in entries] == pytest.approx([0.25] * 4, abs=1e-12)
        assert not any(e["negative"] for e in entries)

    def test_negative_entry_is_flagged(self, capsys, write_json):
        r = 1.0 / math.sqrt(2.0)
        path = write_json("rho.json", matrix_json(bloch_state(r, 0.0, r)))
        code, out = run(capsys, "quasiprob", "--scenario", "qubit", "--state", str(path))
        assert code == EXIT_OK
        entries = {tuple(e["outcome"]): e for e in json.loads(out)["entries"]}
        assert entries[(-1.0, -1.0)]["p"] == pytest.approx(-0.103553, abs=1e-6)
        assert entries[(-1.0, -1.0)]["negative"] is True
        assert [o for o, e in entries.items() if e["negative"]] == [(-1.0, -1.0)]

    def test_qutrit_state(self, capsys, write_json):
        path = write_json("rho.json", matrix_json(np.eye(3) / 3))
        code, out = run(capsys, "quasiprob", "--scenario", "qutrit", "--state", str(path))
        assert code == EXIT_OK
        fam = family_builder("qutrit")(1.0)
        expected = {o: e.trace().real / 3.0 for o, e in fam.items()}
        for entry in json.loads(out)["entries"]:
            assert entry["p"] == pytest.approx(expected[tuple(entry["outcome"])], abs=1e-9)

    def test_csv(self, capsys, write_json):
        path = write_json("rho.json", matrix_json(np.eye(2) / 2))
        code, out = run(capsys, "quasiprob", "--scenario", "qubit", "--state", str(path), "--format", "csv")
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "x1,x2,p,negative"
        assert lines[1].startswith("1,1,2.500000000e-01,false")

    def test_invalid_state(self, capsys, write_json):
        path = write_json("rho.json", matrix_json(np.eye(2)))
        code, _ = run(capsys, "quasiprob", "--scenario", "qubit", "--state", str(path))
        assert code == EXIT_VALIDATION

    def test_dimension_mismatch(self, capsys, write_json):
        path = write_json("rho.json", matrix_json(np.eye(4) / 4))
        code, _ = run(capsys, "quasiprob", "--scenario", "qubit", "--state", str(path))
        assert code == EXIT_VALIDATION

    def test_missing_state_file(self, capsys, tmp_path):
        code, _ = run(capsys, "quasiprob", "--scenario", "qubit", "--state", str(tmp_path / "nope.json"))
        assert code == EXIT_USAGE


class TestObservablesFile:

    def test_malformed_file(self, capsys, tmp_path):
        path = tmp_path / "obs.json"
        path.write_text("{not json")
        code, _ = run(capsys, "build", "--observables", str(path))
        assert code == EXIT_USAGE

    def test_wrong_entry_count(self, capsys, write_json):
        path = write_json("obs.json", {"observables": [{"dim": 2, "entries": [[1, 0]]}]})
        code, _ = run(capsys, "build", "--observables", str(path))
        assert code == EXIT_USAGE

    def test_non_hermitian_observable(self, capsys, write_json):
        path = write_json("obs.json", {"observables": [matrix_json([[0, 1], [0, 0]])]})
        code, _ = run(capsys, "build", "--observables", str(path))
        assert code == EXIT_VALIDATION

    def test_non_commuting_group(self, capsys, write_json):
        path = write_json("obs.json", {"observables": [matrix_json(X), matrix_json(Z)], "grouping": [[0, 1]]})
        code, _ = run(capsys, "build", "--observables", str(path))
        assert code == EXIT_VALIDATION

    def test_dim_three_only_sharp(self, capsys, write_json):
        path = write_json("obs.json", {"observables": [matrix_json(np.diag([1.0, 0.0, -1.0]))]})
        assert run(capsys, "build", "--observables", str(path))[0] == EXIT_OK
        assert run(capsys, "build", "--observables", str(path), "--eta", "0.5")[0] == EXIT_VALIDATION


def test_verify_suite_passes(capsys):
    code, out = run(capsys, "verify")
    lines = out.strip().splitlines()
    passed = [line for line in lines if line.startswith("PASS ")]
    assert code == 0, out
    assert len(passed) >= 12
    assert any(line.startswith("PASS charfn-vs-jordan") for line in lines)
    assert any(line.startswith("PASS qutrit-closed-form") for line in lines)
    assert not any(line.startswith("FAIL ") for line in lines)


class TestVerifyReport:

    @pytest.fixture
    def one_check(self, monkeypatch):
        def use(passed):
            result = CheckResult(name="eigensolver", passed=passed, detail="stubbed")
            monkeypatch.setattr(VerifyHandler, "run", lambda self: [result])
        return use

    def test_unwritable_report_is_a_usage_error(self, capsys, tmp_path, one_check):
        one_check(True)
        code, out = run(capsys, "verify", "--out", str(tmp_path / "missing" / "report.txt"))
        assert code == EXIT_USAGE
        assert out == ""
        assert not (tmp_path / "missing").exists()

    def test_failed_check_is_named(self, capsys, tmp_path, one_check):
        one_check(False)
        target = tmp_path / "report.txt"
        code, _ = run(capsys, "verify", "--out", str(target))
        assert code == EXIT_VERIFY_FAILED
        lines = target.read_text().splitlines()
        assert lines[0] == "FAIL eigensolver: stubbed"
        assert lines[-1] == "first failure: eigensolver"
