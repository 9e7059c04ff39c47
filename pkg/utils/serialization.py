"""Byte-stable JSON/CSV rendering and atomic output"""

import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import pandas as pd
from pydantic import BaseModel

from config.settings import settings


def round_sig(value: float, digits: Optional[int] = None) -> float:
    """Round to ``digits`` significant digits (FLOAT_DIGITS by default)"""
    digits = settings.FLOAT_DIGITS if digits is None else digits
    if not math.isfinite(value):
        return value
    return float(format(value, f".{digits}g")) + 0.0


def _rounded(obj: Any) -> Any:
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def to_json(payload: BaseModel | dict) -> str:
    data = payload.model_dump(mode="python") if isinstance(payload, BaseModel) else payload
    return json.dumps(_rounded(data), indent=2) + "\n"


def _csv_cell(value: Any) -> Any:
    if isinstance(value, bool):
        return "true" if value else "false"
    return value


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV with floats as %.<FLOAT_DIGITS>e, booleans as true/false, None as an empty cell"""
    frame = pd.DataFrame([[_csv_cell(v) for v in row] for row in rows], columns=list(header))
    return frame.to_csv(
        index=False,
        float_format=f"%.{settings.FLOAT_DIGITS}e",
        na_rep="",
        lineterminator="\n",
    )


def write_output(text: str, out: Optional[Path]) -> None:
    """Write to ``out`` via temp file + rename, or to stdout when ``out`` is None"""
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out = Path(out)
    directory = out.parent if str(out.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{out.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
