"""
CSV ingestion: comma-separated, UTF-8, header required, LF or CRLF line endings.

Row numbers in errors are file line numbers (the header is row 1).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from scorelab.errors import SchemaError
from scorelab.gmrf.model import ChainData

PathLike = Union[str, Path]


@dataclass(frozen=True)
class CsvSchema:
    """
    Column contract. `columns` lists names that must appear in the header (extra columns are
    ignored); an empty tuple accepts any named header and keeps every column.
    """

    columns: Tuple[str, ...] = ()
    min_columns: int = 1
    label: str = "table"

    def expected(self) -> str:
        if self.columns:
            return ",".join(self.columns)
        return f"a header row naming at least {self.min_columns} column(s)"


@dataclass(frozen=True)
class DataTable:
    path: str
    columns: Tuple[str, ...]
    values: np.ndarray

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def summary(self) -> dict:
        return {"path": self.path, "rows": self.rows, "columns": self.cols}


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _read_frame(path: PathLike, schema: CsvSchema) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: file is empty; expected {schema.expected()}")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise SchemaError(f"{path}: not a readable UTF-8 CSV file ({e})")

    header = [str(c).strip() for c in frame.columns]
    if all(_is_number(h) for h in header):
        raise SchemaError(f"{path}: missing header row; expected {schema.expected()}", row=1)
    frame.columns = header
    missing = [c for c in schema.columns if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: header {','.join(header)} lacks column(s) {','.join(missing)}; expected {schema.expected()}",
            row=1,
        )
    if schema.columns:
        frame = frame[list(schema.columns)]
    if frame.shape[1] < schema.min_columns:
        raise SchemaError(f"{path}: {frame.shape[1]} column(s), expected {schema.expected()}", row=1)
    if frame.shape[0] == 0:
        raise SchemaError(f"{path}: no data rows under the header")
    return frame


def ingest_csv(path: PathLike, schema: Optional[CsvSchema] = None) -> DataTable:
    """Header-validated numeric table; the first bad cell raises SchemaError(row, column, token)."""
    schema = schema or CsvSchema()
    frame = _read_frame(path, schema)
    values = np.empty(frame.shape, dtype=float)
    for j, name in enumerate(frame.columns):
        for i, token in enumerate(frame[name]):
            token = str(token).strip()
            try:
                values[i, j] = float(token) if token else np.nan
            except ValueError:
                raise SchemaError(f"{path}: non-numeric cell", row=i + 2, column=name, token=token)
            if not np.isfinite(values[i, j]):
                raise SchemaError(f"{path}: empty or non-finite cell", row=i + 2, column=name, token=token)
    table = DataTable(str(path), tuple(frame.columns), values)
    logger.debug("Read {} ({} rows x {} columns)", path, table.rows, table.cols)
    return table


def ingest_labels(path: PathLike, column: str = "x") -> Tuple[List[str], dict]:
    """One column of raw labels (for scoring against a finite-support distribution)."""
    frame = _read_frame(path, CsvSchema((column,), label="labels"))
    labels = []
    for i, token in enumerate(frame[column]):
        token = str(token).strip()
        if not token:
            raise SchemaError(f"{path}: empty label", row=i + 2, column=column, token=token)
        labels.append(token)
    return labels, {"path": str(path), "rows": len(labels), "columns": 1}


def read_vector(path: PathLike, column: str = "x") -> DataTable:
    return ingest_csv(path, CsvSchema((column,), label="vector"))


def read_matrix(path: PathLike) -> DataTable:
    return ingest_csv(path, CsvSchema(label="matrix"))


def read_chain(path: PathLike) -> Tuple[ChainData, DataTable]:
    """nu rows of N chain values each."""
    table = read_matrix(path)
    return ChainData(table.values), table


def read_square(path: PathLike) -> DataTable:
    table = read_matrix(path)
    if table.rows != table.cols:
        raise SchemaError(f"{path}: expected a square matrix, got {table.rows} x {table.cols}")
    return table


def read_survival(path: PathLike) -> DataTable:
    """Columns `time` (observed time m) and `event` (1 = failure seen, 0 = censored)."""
    table = ingest_csv(path, CsvSchema(("time", "event"), label="survival"))
    events = table.column("event")
    bad = np.flatnonzero(~np.isin(events, (0.0, 1.0)))
    if bad.size:
        i = int(bad[0])
        raise SchemaError(f"{path}: event must be 0 or 1", row=i + 2, column="event", token=repr(float(events[i])))
    return table
