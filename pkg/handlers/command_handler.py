import asyncio
import logging
from pathlib import Path
from typing import List, Optional, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from config.settings import settings
from models.measurement import QmoFamily
from models.operators import DensityMatrix
from models.scenario import Scenario
from models.schemas import (
    CMatrixPayload,
    CompatReport,
    CurvePoint,
    ObservablesFilePayload,
    QmoFamilyPayload,
    QuasiProbTablePayload,
    RunConfig,
)
from services.compat_service import CompatService, FamilyBuilder
from services.fuzzing_service import FuzzyFamilyBuilder, as_fuzz_parameter
from services.mhcore_service import qmo_jordan, quasiprob, singleton_grouping, spectral
from services.scenario_service import build_scenario, family_builder
from services.state_service import embed_qutrit_state
from utils.exceptions import DimNotPowerOfTwoException, InputFileException, MhqmoException
from utils.serialization import to_csv, to_json, write_output

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

CUSTOM_LABEL = "custom"

PayloadT = TypeVar("PayloadT", bound=BaseModel)


def load_payload(path: Path, model: Type[PayloadT]) -> PayloadT:
    """Parse a JSON input file into ``model``; any failure is an input-file error"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputFileException(f"cannot read input file {path}: {e}") from e
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        raise InputFileException(f"malformed input file {path}: {e.error_count()} error(s), first: {e.errors()[0]['msg']}") from e


def _sharp_only(sharp: QmoFamily) -> FamilyBuilder:
    """Builder for families that cannot be fuzzified (no qubit embedding)"""
    def build(eta: float) -> QmoFamily:
        if as_fuzz_parameter(eta).eta != 1.0:
            raise DimNotPowerOfTwoException(
                f"cannot fuzzify a family on dim {sharp.space_dim}: dimension is not a power of two"
            )
        return sharp
    return build


class CommandHandler:
    """Runs one build/threshold/scan/quasiprob command and renders its artifact"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.compat = CompatService()
        self.label = CUSTOM_LABEL
        self.scenario: Optional[Scenario] = None
        self.sharp: Optional[QmoFamily] = None
        self.builder: Optional[FamilyBuilder] = None

    def resolve_source(self) -> FamilyBuilder:
        """Scenario name or observables file -> eta -> family"""
        if self.builder is not None:
            return self.builder
        if self.config.scenario is not None:
            self.label = self.config.scenario
            self.scenario, self.sharp = build_scenario(self.config.scenario)
            self.builder = family_builder(self.config.scenario)
            logger.info(f"Using built-in scenario {self.label}")
            return self.builder

        payload = load_payload(self.config.observables, ObservablesFilePayload)
        observables = tuple(spectral(p.to_matrix()) for p in payload.observables)
        grouping = payload.grouping if payload.grouping is not None else singleton_grouping(len(observables))
        self.sharp = qmo_jordan(observables, grouping)
        try:
            self.builder = FuzzyFamilyBuilder(self.sharp)
        except DimNotPowerOfTwoException:
            logger.warning(f"Observables act on dim {self.sharp.space_dim}; only eta = 1 is available")
            self.builder = _sharp_only(self.sharp)
        logger.info(f"Loaded {len(observables)} observables from {self.config.observables}")
        return self.builder

    # ---------- commands ----------
    async def build(self) -> str:
        fam = self.resolve_source()(self.config.eta)
        return to_json(QmoFamilyPayload.from_family(fam))

    async def threshold(self) -> str:
        value = self.compat.threshold(self.resolve_source())
        if self.config.format == "csv":
            return to_csv(["threshold"], [[value]])
        return to_json({"threshold": value})

    async def _curve(self, builder: FamilyBuilder, etas: List[float]) -> List[CurvePoint]:
        """Evaluate grid points in concurrent batches; output keeps grid order"""
        batch_size = settings.SCAN_BATCH_SIZE
        points: List[CurvePoint] = []
        for i in range(0, len(etas), batch_size):
            batch = etas[i:i + batch_size]
            logger.debug(f"Scanning batch {i // batch_size + 1}: eta {batch[0]:.6f}..{batch[-1]:.6f}")
            tasks = [
                asyncio.to_thread(self.compat.curve_point, builder, eta, self.config.per_element)
                for eta in batch
            ]
            points.extend(await asyncio.gather(*tasks))
        return points

    async def scan(self) -> str:
        builder = self.resolve_source()
        cfg = self.config
        etas = [float(e) for e in np.linspace(cfg.eta_min, cfg.eta_max, cfg.steps)]
        points = await self._curve(builder, etas)
        logger.info(f"Scanned {len(points)} points on [{cfg.eta_min}, {cfg.eta_max}]")

        if cfg.format == "csv":
            header = ["eta", "min_eig"]
            keys = list(points[0].element_eigs) if cfg.per_element else []
            for key in keys:
                header.extend(f"{key}[{i}]" for i in range(len(points[0].element_eigs[key])))
            rows = []
            for point in points:
                row = [point.eta, point.min_eig]
                for key in keys:
                    row.extend(point.element_eigs[key])
                rows.append(row)
            return to_csv(header, rows)

        thresh = self.compat.threshold_or_none(builder, self.label)
        report = CompatReport(scenario=self.label, threshold=thresh, grid=points)
        return to_json(report.to_json_dict())

    async def quasiprob(self) -> str:
        builder = self.resolve_source()
        payload = load_payload(self.config.state, CMatrixPayload)
        rho = DensityMatrix(matrix=payload.to_matrix())

        if self.scenario is not None and self.scenario.embedding == "cg-block":
            # qutrit states are evaluated against the embedded 4-dim family
            if rho.dim == 3:
                rho = embed_qutrit_state(rho)
            fam = FuzzyFamilyBuilder(self.sharp)(self.config.eta)
        else:
            fam = builder(self.config.eta)

        table = quasiprob(fam, rho)
        negatives = table.negative_outcomes()
        if negatives:
            logger.info(f"{len(negatives)} negative quasi-probabilities at eta = {self.config.eta}")

        rendered = QuasiProbTablePayload.from_table(table)
        if self.config.format == "csv":
            header = [f"x{k + 1}" for k in range(fam.nslots)] + ["p", "negative"]
            rows = [
                [format(v, "g") for v in entry.outcome] + [entry.p, entry.negative]
                for entry in rendered.entries
            ]
            return to_csv(header, rows)
        return to_json(rendered)

    async def run(self) -> str:
        commands = {
            "build": self.build,
            "threshold": self.threshold,
            "scan": self.scan,
            "quasiprob": self.quasiprob,
        }
        return await commands[self.config.command]()


# Main handler function for app.py
async def handle_command(config: RunConfig) -> int:
    """Run one command and map its outcome to an exit code"""
    if config.command == "verify":
        from handlers.verify_handler import handle_verify
        return await handle_verify(config.out)

    handler = CommandHandler(config)
    try:
        text = await handler.run()
        write_output(text, config.out)
        return EXIT_OK
    except InputFileException as e:
        logger.error(f"Input error in {config.command}: {str(e)}")
        return EXIT_USAGE
    except MhqmoException as e:
        logger.error(f"Validation error in {config.command}: {type(e).__name__}: {str(e)}")
        return EXIT_VALIDATION
    except OSError as e:
        logger.error(f"Cannot write output for {config.command}: {str(e)}")
        return EXIT_USAGE
