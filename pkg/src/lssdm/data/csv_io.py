"""CSV ingestion and emission.

Input layout: header ``time,<sensor1>,<sensor2>,...`` then one row per time
step. An empty field means the value is originally missing. The series is
min-max normalized per sensor and cut into non-overlapping windows of
``window_len`` rows; a trailing remainder shorter than a window is dropped.
"""

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
import torch

from lssdm.domain.errors import DataError, NormalizationError, ParseError
from lssdm.domain.models import DTYPE, Dataset, HeldOutKey, Normalization, TimeSeriesWindow

logger = structlog.get_logger()

_HEADER_LINES = 1


@dataclass(frozen=True, slots=True)
class CsvSchema:
    """Column spec: the time column plus (optionally) the expected sensor columns."""

    time_column: str = "time"
    sensors: tuple[str, ...] | None = None
    window_len: int = 32


@dataclass(frozen=True, slots=True, eq=False)
class RawSeries:
    """A parsed CSV before normalization: sensors x time values and an observed mask."""

    time_index: tuple[str, ...]
    sensor_names: tuple[str, ...]
    values: np.ndarray
    observed: np.ndarray


def _check_field_counts(path: Path) -> None:
    """Reject rows whose field count differs from the header's.

    pandas pads short rows with empty fields, which would read as missing values.
    """
    with path.open(encoding="utf-8", newline="") as handle:
        rows = csv.reader(handle)
        header = next(rows, None)
        if header is None:
            return
        for line, row in enumerate(rows, start=_HEADER_LINES + 1):
            if row and len(row) != len(header):
                msg = f"Line {line} has {len(row)} fields, expected {len(header)}"
                raise ParseError(msg, line=line)


def read_raw(path: Path, schema: CsvSchema | None = None) -> RawSeries:
    """Parse a dataset CSV without normalizing it.

    Raises:
        DataError: If the file does not exist.
        ParseError: On ragged rows or non-numeric cells, citing the line.

    """
    schema = schema or CsvSchema()
    try:
        _check_field_counts(path)
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    except FileNotFoundError as e:
        msg = f"Dataset not found: {path}"
        raise DataError(msg) from e
    except pd.errors.EmptyDataError as e:
        msg = f"Dataset {path} is empty"
        raise ParseError(msg, line=1) from e
    except pd.errors.ParserError as e:
        raise ParseError(f"Dataset {path}: {e}") from e

    columns = [str(c) for c in frame.columns]
    if not columns or columns[0] != schema.time_column:
        msg = f"First column must be '{schema.time_column}', got {columns[:1]}"
        raise ParseError(msg, line=1)
    sensors = tuple(columns[1:])
    if not sensors:
        msg = "Dataset has no sensor columns"
        raise ParseError(msg, line=1)
    if schema.sensors is not None and sensors != schema.sensors:
        msg = f"Sensor columns {list(sensors)} do not match schema {list(schema.sensors)}"
        raise ParseError(msg, line=1)

    cells = frame[list(sensors)]
    empty = (cells == "").to_numpy()
    numeric = cells.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = ~empty & ~np.isfinite(numeric)
    if bool(bad.any()):
        row, col = (int(i) for i in np.argwhere(bad)[0])
        line = row + 1 + _HEADER_LINES
        msg = f"Line {line}, column '{sensors[col]}': non-numeric value {cells.iat[row, col]!r}"
        raise ParseError(msg, line=line)

    observed = ~empty
    values = np.where(observed, numeric, 0.0)
    return RawSeries(
        time_index=tuple(frame[schema.time_column].tolist()),
        sensor_names=sensors,
        values=values.T.copy(),
        observed=observed.T.copy(),
    )


def fit_normalization(raw: RawSeries) -> Normalization:
    """Per-sensor (min, max) over observed entries.

    Raises:
        NormalizationError: If a sensor has max == min or no observations.

    """
    mins = np.empty(len(raw.sensor_names))
    maxs = np.empty(len(raw.sensor_names))
    for s, name in enumerate(raw.sensor_names):
        seen = raw.values[s][raw.observed[s]]
        if seen.size == 0 or seen.max() <= seen.min():
            raise NormalizationError(name)
        mins[s], maxs[s] = seen.min(), seen.max()
    return Normalization(mins=mins, maxs=maxs)


def windows_from_series(
    values: np.ndarray,
    observed: np.ndarray,
    window_len: int,
    eval_mask: np.ndarray | None = None,
) -> tuple[TimeSeriesWindow, ...]:
    """Cut a sensors x time array into non-overlapping windows."""
    n_windows = values.shape[1] // window_len
    if n_windows == 0:
        msg = f"Series of {values.shape[1]} steps is shorter than one window ({window_len})"
        raise DataError(msg)
    remainder = values.shape[1] - n_windows * window_len
    if remainder:
        logger.warning("Trailing rows dropped by windowing", rows=remainder, window_len=window_len)
    windows = []
    for w in range(n_windows):
        span = slice(w * window_len, (w + 1) * window_len)
        obs = observed[:, span].astype(float)
        windows.append(
            TimeSeriesWindow(
                index=w,
                values=torch.from_numpy(np.where(observed[:, span], values[:, span], 0.0)).to(DTYPE),
                observed_mask=torch.from_numpy(obs).to(DTYPE),
                eval_mask=(
                    torch.zeros_like(torch.from_numpy(obs))
                    if eval_mask is None
                    else torch.from_numpy(eval_mask[:, span].astype(float))
                ).to(DTYPE),
            )
        )
    return tuple(windows)


def load_csv(path: Path, schema: CsvSchema | None = None) -> Dataset:
    """Load a dataset CSV as normalized windows with ``observed_mask = 0`` at empty cells.

    Raises:
        DataError: If the file is missing or shorter than one window.
        ParseError: On malformed rows or cells.
        NormalizationError: If a sensor is constant.

    """
    schema = schema or CsvSchema()
    raw = read_raw(path, schema)
    normalization = fit_normalization(raw)
    scaled = normalization.normalize(raw.values)
    windows = windows_from_series(scaled, raw.observed, schema.window_len)
    logger.info(
        "Dataset loaded",
        path=str(path),
        sensors=len(raw.sensor_names),
        windows=len(windows),
        missing=int((~raw.observed).sum()),
    )
    return Dataset(
        windows=windows,
        sensor_names=raw.sensor_names,
        normalization=normalization,
        time_index=raw.time_index[: len(windows) * schema.window_len],
    )


def format_value(value: float) -> str:
    """Shortest text that round-trips a float64 exactly."""
    return repr(float(value))


def write_csv(ds: Dataset, path: Path, held_out_fill: bool = False) -> Path:
    """Write ``ds`` in the input layout, denormalized, empty cells where not observed.

    Args:
        ds: Dataset to write.
        path: Destination file.
        held_out_fill: Also write held-out truth at simulated-missing entries.

    """
    truth_windows = [ds.held_out.dense(w) if held_out_fill else None for w in ds.windows]
    columns: dict[str, list[str]] = {"time": list(ds.time_index) or [str(i) for i in range(len(ds) * ds.n_steps)]}
    blocks = []
    for window, truth in zip(ds.windows, truth_windows, strict=True):
        shown = window.observed_mask.numpy().astype(bool)
        vals = window.values.numpy().copy()
        if truth is not None:
            eval_mask = window.eval_mask.numpy().astype(bool)
            vals = np.where(eval_mask, truth.numpy(), vals)
            shown = shown | eval_mask
        raw = ds.normalization.denormalize(vals)
        blocks.append(np.where(shown, np.vectorize(format_value, otypes=[str])(raw), ""))
    table = np.concatenate(blocks, axis=1) if blocks else np.empty((ds.n_sensors, 0), dtype=str)
    for s, name in enumerate(ds.sensor_names):
        columns[name] = table[s].tolist()
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(columns).to_csv(path, index=False, lineterminator="\n")
    return path


def write_mask_file(keys: Sequence[HeldOutKey], path: Path) -> Path:
    """Write ``window,sensor,step`` triples of evaluation entries."""
    frame = pd.DataFrame(sorted(keys), columns=["window", "sensor", "step"])
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def read_mask_file(path: Path) -> list[HeldOutKey]:
    """Read ``window,sensor,step`` triples.

    Raises:
        DataError: If the file is missing or lacks the three columns.

    """
    try:
        frame = pd.read_csv(path, dtype=int)
    except FileNotFoundError as e:
        msg = f"Mask file not found: {path}"
        raise DataError(msg) from e
    except (ValueError, pd.errors.ParserError) as e:
        msg = f"Mask file {path} is malformed: {e}"
        raise ParseError(msg) from e
    if list(frame.columns) != ["window", "sensor", "step"]:
        msg = f"Mask file columns must be window,sensor,step; got {list(frame.columns)}"
        raise ParseError(msg, line=1)
    return [(int(w), int(s), int(t)) for w, s, t in frame.itertuples(index=False)]
