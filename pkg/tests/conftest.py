import json
import math

import numpy as np
import pytest

from services.scenario_service import family_builder
from services.state_service import density_from_bloch

SQRT2 = math.sqrt(2.0)
QUBIT_THRESHOLD = 1.0 / SQRT2
QUTRIT_THRESHOLD = math.sqrt(SQRT2 - 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def builders():
    return {name: family_builder(name) for name in ("qubit", "qutrit", "two-qubit")}


@pytest.fixture
def witness_state():
    """Bloch vector (1/sqrt2, 0, 1/sqrt2), negative on G(-1, -1) at eta = 1"""
    return density_from_bloch((1.0 / SQRT2, 0.0, 1.0 / SQRT2))


def matrix_json(m) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {"dim": m.shape[0], "entries": [[float(v.real), float(v.imag)] for v in m.reshape(-1)]}


@pytest.fixture
def write_json(tmp_path):
    def write(name: str, payload: dict):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return path
    return write
