"""Scoring imputations against held-out truth and assembling the report."""

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import pandas as pd
import structlog
import torch
from pydantic import BaseModel, Field

from lssdm.data.interpolate import interpolation_baseline
from lssdm.diffusion.sampler import sample_windows
from lssdm.diffusion.schedule import NoiseSchedule
from lssdm.domain.enums import PointEstimate
from lssdm.domain.errors import MetricError
from lssdm.domain.models import DTYPE, Dataset, ImputationResult, Normalization, TraceRow
from lssdm.evalmetrics.metrics import crps_ensemble
from lssdm.graph.laplacian import Graph
from lssdm.model.lssdm import LssdmModel
from lssdm.numerics.rng import RngStream

logger = structlog.get_logger()

ENTRY_COLUMNS = ["window", "sensor", "step", "truth", "mean", "p05", "p95", "crps"]


class SensorScore(BaseModel):
    """Per-sensor breakdown."""

    mae: float = Field(ge=0.0)
    crps: float = Field(ge=0.0)
    n: int = Field(ge=0)


class EvalReport(BaseModel):
    """Evaluation summary, serialized as JSON."""

    mae: float = Field(ge=0.0)
    crps_mean: float = Field(ge=0.0)
    baseline_mae: float = Field(ge=0.0)
    baseline_crps: float = Field(ge=0.0)
    per_sensor: dict[str, SensorScore]
    n_eval_points: int = Field(gt=0)
    n_samples: int = Field(ge=1)
    units: Literal["denormalized"] = "denormalized"
    point: PointEstimate = PointEstimate.MEAN
    config: dict[str, Any] = Field(default_factory=dict)


@dataclass(frozen=True, slots=True, eq=False)
class Evaluation:
    """Report, per-entry scores and the optional sampler trace."""

    report: "EvalReport"
    entries: list["EntryScore"]
    trace: tuple[TraceRow, ...] = ()


@dataclass(frozen=True, slots=True)
class EntryScore:
    """One evaluated entry, in raw units."""

    window: int
    sensor: int
    step: int
    truth: float
    mean: float
    p05: float
    p95: float
    crps: float
    point: float
    baseline: float


def _denormalize(normalization: Normalization, scaled: torch.Tensor) -> torch.Tensor:
    spans = torch.as_tensor(normalization.spans, dtype=DTYPE)[:, None]
    mins = torch.as_tensor(normalization.mins, dtype=DTYPE)[:, None]
    return scaled * spans + mins


def score_entries(
    ds: Dataset,
    results: Sequence[ImputationResult],
    point: PointEstimate = PointEstimate.MEAN,
) -> list[EntryScore]:
    """Score every eval entry of ``ds`` against its result; all values denormalized.

    Raises:
        MetricError: If the dataset has no eval entries.

    """
    by_window = {r.window_index: r for r in results}
    entries: list[EntryScore] = []
    for window in ds.windows:
        selected = torch.nonzero(window.eval_mask > 0).tolist()
        if not selected:
            continue
        result = by_window.get(window.index)
        if result is None:
            msg = f"No imputation for window {window.index}"
            raise MetricError(msg)
        samples = _denormalize(ds.normalization, result.samples)
        truth = _denormalize(ds.normalization, ds.held_out.dense(window))
        baseline = _denormalize(ds.normalization, interpolation_baseline(window))
        estimate = _denormalize(ds.normalization, result.point(median=point == PointEstimate.MEDIAN))
        mean = samples.mean(dim=0)
        p05 = torch.quantile(samples, 0.05, dim=0)
        p95 = torch.quantile(samples, 0.95, dim=0)
        crps = crps_ensemble(samples, truth)
        entries.extend(
            EntryScore(
                window=window.index,
                sensor=s,
                step=t,
                truth=float(truth[s, t]),
                mean=float(mean[s, t]),
                p05=float(p05[s, t]),
                p95=float(p95[s, t]),
                crps=float(crps[s, t]),
                point=float(estimate[s, t]),
                baseline=float(baseline[s, t]),
            )
            for s, t in selected
        )
    if not entries:
        msg = "No evaluation entries: the test split has no simulated-missing values"
        raise MetricError(msg)
    return entries


def build_report(
    entries: Sequence[EntryScore],
    sensor_names: Sequence[str],
    n_samples: int,
    point: PointEstimate = PointEstimate.MEAN,
    config: dict[str, Any] | None = None,
) -> EvalReport:
    """Aggregate entry scores into an :class:`EvalReport`."""
    frame = pd.DataFrame(
        {
            "sensor": [e.sensor for e in entries],
            "abs_error": [abs(e.point - e.truth) for e in entries],
            "crps": [e.crps for e in entries],
            "baseline_error": [abs(e.baseline - e.truth) for e in entries],
        }
    )
    per_sensor = {
        sensor_names[int(sensor)]: SensorScore(mae=float(group["abs_error"].mean()), crps=float(group["crps"].mean()), n=len(group))
        for sensor, group in frame.groupby("sensor", sort=True)
    }
    # a single-sample predictor's CRPS is its absolute error
    baseline = float(frame["baseline_error"].mean())
    return EvalReport(
        mae=float(frame["abs_error"].mean()),
        crps_mean=float(frame["crps"].mean()),
        baseline_mae=baseline,
        baseline_crps=baseline,
        per_sensor=per_sensor,
        n_eval_points=len(frame),
        n_samples=n_samples,
        point=point,
        config=config or {},
    )


def evaluate(
    model: LssdmModel,
    ds_test: Dataset,
    graph: Graph,
    schedule: NoiseSchedule,
    n_samples: int,
    rng: RngStream,
    point: PointEstimate = PointEstimate.MEAN,
    workers: int = 1,
    chunk_size: int = 50,
    config: dict[str, Any] | None = None,
    trace: bool = False,
) -> Evaluation:
    """Sample every test window with eval entries and score the result.

    Raises:
        MetricError: If the test split has no eval entries.

    """
    windows = [w for w in ds_test.windows if bool((w.eval_mask > 0).any())]
    if not windows:
        msg = "No evaluation entries: the test split has no simulated-missing values"
        raise MetricError(msg)
    results = sample_windows(
        windows, model, graph, schedule, n_samples, rng, workers=workers, chunk_size=chunk_size, trace=trace
    )
    entries = score_entries(ds_test, results, point)
    report = build_report(entries, ds_test.sensor_names, n_samples, point, config)
    logger.info(
        "Evaluation finished",
        mae=report.mae,
        crps_mean=report.crps_mean,
        baseline_mae=report.baseline_mae,
        n_eval_points=report.n_eval_points,
    )
    return Evaluation(report=report, entries=entries, trace=results[0].trace)


def write_entry_csv(rows: Sequence[EntryScore], path: Path) -> Path:
    """Write ``window,sensor,step,truth,mean,p05,p95,crps`` per entry."""
    frame = pd.DataFrame([{c: getattr(r, c) for c in ENTRY_COLUMNS} for r in rows], columns=ENTRY_COLUMNS)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    return path
