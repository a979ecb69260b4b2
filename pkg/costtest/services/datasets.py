"""File I/O: CSV ingestion, fixed-direction files, simulate configs and result files."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from numpy.typing import NDArray
from pydantic import TypeAdapter

from costtest.errors import ConfigurationError, DataError, HarnessError
from costtest.schemas.report import RunRecord, RunReport
from costtest.schemas.study import StudyConfig, StudyGrid
from costtest.services.models import Dataset

logger = structlog.get_logger()

RESULT_COLUMNS = [
    "study",
    "n",
    "q",
    "p",
    "a",
    "sigma",
    "reps",
    "completed",
    "failures",
    "rejection_rate",
    "mc_se",
    "mean_stat",
    "sd_stat",
]


@dataclass(frozen=True)
class LoadedTable:
    dataset: Dataset
    path: str
    response: str
    predictors: list[str]


def _resolve_response(columns: list[str], response: str | int) -> str:
    """Column name for a response given by name or by 0-based column index."""
    if isinstance(response, str) and response in columns:
        return response
    try:
        index = int(response)
    except (TypeError, ValueError):
        raise DataError(f"response column {response!r} not found; columns are {columns}") from None
    if not 0 <= index < len(columns):
        raise DataError(f"response index {index} out of range for {len(columns)} columns")
    return columns[index]


def load_csv(path: str | Path, response: str | int) -> LoadedTable:
    """Read a headed, all-numeric CSV; the response column is split off from the predictors.

    Raises:
        FileNotFoundError: path does not exist.
        DataError: malformed file, unknown response, or a blank/non-numeric/non-finite cell.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: file is empty") from None
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: cannot parse CSV: {exc}") from exc

    columns = [str(c) for c in frame.columns]
    if len(columns) < 2:
        raise DataError(f"{path}: need a response and at least one predictor column")
    if frame.empty:
        raise DataError(f"{path}: no data rows after the header")

    numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    values = numeric.to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataError(
            f"{path}: data row {row + 1} (line {row + 2}), column {columns[col]!r}: "
            f"non-numeric or missing value {frame.iat[row, col]!r}"
        )

    target = _resolve_response(columns, response)
    predictors = [c for c in columns if c != target]
    position = columns.index(target)
    keep = [i for i in range(len(columns)) if i != position]
    dataset = Dataset(values[:, keep], values[:, position])

    logger.info("data_loaded", path=str(path), n=dataset.n, q=dataset.q, response=target)
    return LoadedTable(
        dataset=dataset, path=str(path.resolve()), response=target, predictors=predictors
    )


def load_beta(path: str | Path) -> tuple[float, ...]:
    """Fixed direction from a comma- or newline-separated file of numbers."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"beta file not found: {path}")
    try:
        values = np.loadtxt(path, delimiter=",", ndmin=1)
    except ValueError as exc:
        raise DataError(f"{path}: cannot read direction: {exc}") from exc
    values = values.ravel()
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise DataError(f"{path}: direction must be a nonempty vector of finite numbers")
    return tuple(float(v) for v in values)


def load_simulate_file(path: str | Path) -> list[StudyConfig]:
    """Parse a JSON simulate file (one object or an array) into study configs.

    Each entry's list of a values expands to one config per value, in order.
    Schema violations surface as pydantic ValidationError naming the field.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(raw, dict):
        raw = [raw]
    grids = TypeAdapter(list[StudyGrid]).validate_python(raw)
    configs = [cfg for grid in grids for cfg in grid.expand()]
    if not configs:
        raise ConfigurationError(f"{path}: no study configurations")
    return configs


def write_residuals(
    path: str | Path, fitted: NDArray[np.float64], residuals: NDArray[np.float64]
) -> Path:
    """(fitted, residual) pairs, one row per observation."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"fitted": fitted, "residual": residuals}).to_csv(path, index=False)
    return path


def read_report(path: str | Path) -> RunReport:
    path = Path(path)
    if not path.is_file():
        return RunReport()
    try:
        return RunReport.model_validate_json(path.read_text())
    except ValueError as exc:
        raise DataError(f"{path}: not a costtest report: {exc}") from exc


def append_run(path: str | Path, record: RunRecord) -> RunReport:
    """Add record to the report at path, creating the file if needed."""
    path = Path(path)
    report = read_report(path)
    report.runs.append(record)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2) + "\n")
    return report


class ResultsTable:
    """Results CSV written one row at a time, header first."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(columns=RESULT_COLUMNS).to_csv(self.path, index=False)
        self.rows = 0

    def append(self, row: dict[str, object]) -> None:
        for key in RESULT_COLUMNS:
            value = row[key]
            if isinstance(value, float) and not math.isfinite(value):
                raise HarnessError(f"non-finite {key}={value} in results row {row}")
        pd.DataFrame([row], columns=RESULT_COLUMNS).to_csv(
            self.path, mode="a", header=False, index=False
        )
        self.rows += 1
