"""Pydantic models for command input and JSON/CSV artifacts"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from models.measurement import QmoFamily, QuasiProbTable
from models.operators import CMatrix

Verdict = Literal["compatible-by-sufficient-condition", "not-certified"]


class CMatrixPayload(BaseModel):
    """Row-major list of [re, im] pairs"""
    dim: int = Field(..., ge=1)
    entries: List[Tuple[float, float]]

    @model_validator(mode="after")
    def _check_count(self) -> "CMatrixPayload":
        if len(self.entries) != self.dim * self.dim:
            raise ValueError(f"expected {self.dim * self.dim} entries for dim {self.dim}, got {len(self.entries)}")
        return self

    @classmethod
    def from_matrix(cls, m: CMatrix) -> "CMatrixPayload":
        flat = m.array.reshape(-1)
        return cls(dim=m.dim, entries=[(float(v.real), float(v.imag)) for v in flat])

    def to_matrix(self, hermitian: bool = False) -> CMatrix:
        values = np.array([complex(re, im) for re, im in self.entries], dtype=np.complex128)
        return CMatrix(entries=values.reshape(self.dim, self.dim), hermitian=hermitian)


class QmoElementPayload(BaseModel):
    outcome: List[float]
    matrix: CMatrixPayload


class QmoFamilyPayload(BaseModel):
    eta: float
    outcomes: List[List[float]]
    elements: List[QmoElementPayload]

    @classmethod
    def from_family(cls, fam: QmoFamily) -> "QmoFamilyPayload":
        return cls(
            eta=fam.eta,
            outcomes=[list(o) for o in fam.outcomes],
            elements=[
                QmoElementPayload(outcome=list(o), matrix=CMatrixPayload.from_matrix(m))
                for o, m in fam.items()
            ],
        )


class QuasiProbEntryPayload(BaseModel):
    outcome: List[float]
    p: float
    negative: bool = False


class QuasiProbTablePayload(BaseModel):
    eta: float
    entries: List[QuasiProbEntryPayload]

    @classmethod
    def from_table(cls, table: QuasiProbTable, negative_tol: float = 1e-11) -> "QuasiProbTablePayload":
        return cls(
            eta=table.eta,
            entries=[
                QuasiProbEntryPayload(outcome=list(o), p=p, negative=p < -negative_tol)
                for o, p in table.entries.items()
            ],
        )


class ObservablesFilePayload(BaseModel):
    """User-supplied observables: {"observables": [CMatrix...], "grouping": [[0], [1]]}"""
    observables: List[CMatrixPayload] = Field(..., min_length=1)
    grouping: Optional[List[List[int]]] = None


class CurvePoint(BaseModel):
    eta: float
    min_eig: float
    element_eigs: Optional[Dict[str, List[float]]] = None


class VerdictEntry(BaseModel):
    eta: float
    verdict: Verdict


class CompatReport(BaseModel):
    """Minimum-eigenvalue curve plus the bisected threshold"""
    scenario: str
    threshold: Optional[float] = None
    grid: List[CurvePoint] = Field(default_factory=list)
    verdicts: List[VerdictEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_grid(self) -> "CompatReport":
        etas = [p.eta for p in self.grid]
        if any(b <= a for a, b in zip(etas, etas[1:])):
            raise ValueError("grid etas must be strictly increasing")
        if any(not 0.0 <= e <= 1.0 for e in etas):
            raise ValueError("grid etas must lie in [0, 1]")
        return self

    def to_json_dict(self) -> Dict[str, object]:
        """Per-element eigenvalues only when collected, verdicts only when queried"""
        data: Dict[str, object] = {
            "scenario": self.scenario,
            "threshold": self.threshold,
            "grid": [p.model_dump(exclude_none=True) for p in self.grid],
        }
        if self.verdicts:
            data["verdicts"] = [v.model_dump() for v in self.verdicts]
        return data


class RunConfig(BaseModel):
    """Validated command-line configuration"""
    command: Literal["build", "threshold", "scan", "quasiprob", "verify"]
    scenario: Optional[Literal["qubit", "qutrit", "two-qubit"]] = None
    observables: Optional[Path] = None
    state: Optional[Path] = None
    eta: float = Field(1.0, ge=0.0, le=1.0)
    eta_min: float = Field(0.0, ge=0.0, le=1.0)
    eta_max: float = Field(1.0, ge=0.0, le=1.0)
    steps: int = Field(101, ge=2)
    per_element: bool = False
    format: Literal["json", "csv"] = "json"
    out: Optional[Path] = None

    @model_validator(mode="after")
    def _check_sources(self) -> "RunConfig":
        if self.command == "verify":
            return self
        if (self.scenario is None) == (self.observables is None):
            raise ValueError("exactly one of --scenario or --observables is required")
        if self.command == "scan" and not self.eta_min < self.eta_max:
            raise ValueError(f"degenerate eta range [{self.eta_min}, {self.eta_max}]")
        if self.command == "quasiprob" and self.state is None:
            raise ValueError("quasiprob needs --state")
        if self.command == "build" and self.format == "csv":
            raise ValueError("build only emits JSON")
        return self


class CheckResult(BaseModel):
    """One line of the verification summary"""
    name: str
    passed: bool
    detail: str = ""
