"""Imputation sampler.

The coarse fill is encoded, a latent is drawn and decoded into ``X_bar``; its
missing part is forward-diffused once to step T and then denoised by T reverse
steps conditioned on the observations. Observed entries of every sample are
overwritten with the observations.

Each sample row owns a random stream and draws, in order, the latent noise,
the step-T noise and one state noise per step ``t = T .. 2``. Rows are
processed in fixed ``chunk_size`` chunks on a thread pool; chunk results are
gathered in order, so the output does not depend on the worker count.
"""

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import structlog
import torch

from lssdm.data.interpolate import linear_interpolate
from lssdm.diffusion.process import Conditioning, forward_diffuse_marginal, reverse_step
from lssdm.diffusion.schedule import NoiseSchedule
from lssdm.domain.errors import CheckpointError
from lssdm.domain.models import ImputationResult, TimeSeriesWindow, TraceRow
from lssdm.graph.laplacian import Graph
from lssdm.model.encoder import reparameterize
from lssdm.model.lssdm import LssdmModel
from lssdm.numerics.rng import RngStream, gauss_rows

logger = structlog.get_logger()


@dataclass(slots=True)
class StepStats:
    """Running sums of the missing-entry state at one reverse step."""

    total: float = 0.0
    total_abs: float = 0.0
    total_sq: float = 0.0
    count: int = 0

    def add(self, x: torch.Tensor, missing: torch.Tensor) -> None:
        """Accumulate the entries of ``x`` where ``missing`` is 1."""
        picked = x[missing > 0]
        self.total += float(picked.sum())
        self.total_abs += float(picked.abs().sum())
        self.total_sq += float((picked * picked).sum())
        self.count += int(picked.numel())

    def merge(self, other: "StepStats") -> None:
        """Fold another chunk's sums into this one."""
        self.total += other.total
        self.total_abs += other.total_abs
        self.total_sq += other.total_sq
        self.count += other.count

    def row(self, t: int) -> TraceRow:
        """Trace row for step ``t``."""
        if self.count == 0:
            return TraceRow(t=t, mean_abs=0.0, std=0.0)
        mean = self.total / self.count
        return TraceRow(t=t, mean_abs=self.total_abs / self.count, std=math.sqrt(max(self.total_sq / self.count - mean**2, 0.0)))


@dataclass(slots=True)
class ChunkOutput:
    """Samples of one chunk plus per-step statistics keyed by t."""

    samples: torch.Tensor
    stats: dict[int, StepStats] = field(default_factory=dict)


def _check_model(model: LssdmModel, window: TimeSeriesWindow, schedule: NoiseSchedule) -> None:
    if (window.n_sensors, window.n_steps) != (model.n_sensors, model.n_steps):
        msg = (
            f"Model built for {model.n_sensors}x{model.n_steps} windows, "
            f"window {window.index} is {window.n_sensors}x{window.n_steps}"
        )
        raise CheckpointError(msg, field="n_sensors" if window.n_sensors != model.n_sensors else "n_steps")
    if schedule.T != model.diffusion_steps:
        msg = f"Model trained for T={model.diffusion_steps}, schedule has T={schedule.T}"
        raise CheckpointError(msg, field="diffusion_steps")


def _run_chunk(
    rows: Sequence[tuple[TimeSeriesWindow, RngStream]],
    model: LssdmModel,
    graph: Graph,
    schedule: NoiseSchedule,
    trace: bool,
) -> ChunkOutput:
    # grad mode is thread-local
    with torch.no_grad():
        windows = [w for w, _ in rows]
        streams = [s for _, s in rows]
        mask = torch.stack([w.observed_mask for w in windows])
        missing = 1.0 - mask
        x_co = torch.stack([w.conditional for w in windows])
        x_in = torch.stack([linear_interpolate(w) for w in windows])

        latent = model.encoder(x_in, graph.laplacian)
        z = reparameterize(latent, gauss_rows(streams, tuple(latent.mean.shape[1:])))
        x_bar_ta = missing * model.decoder(z)
        cond = Conditioning(x_co=x_co, x_bar_ta=x_bar_ta, mask=mask)

        x = missing * forward_diffuse_marginal(x_bar_ta, schedule.T, gauss_rows(streams, tuple(mask.shape[1:])), schedule)
        output = ChunkOutput(samples=x)
        for t in range(schedule.T, 0, -1):
            x = missing * reverse_step(x, cond, t, model.denoiser, schedule, streams)
            if trace:
                stats = output.stats.setdefault(t, StepStats())
                stats.add(x, missing)
        output.samples = x_co + missing * x
        return output


def _sample_rows(
    rows: list[tuple[TimeSeriesWindow, RngStream]],
    model: LssdmModel,
    graph: Graph,
    schedule: NoiseSchedule,
    workers: int,
    chunk_size: int,
    trace: bool,
) -> tuple[torch.Tensor, tuple[TraceRow, ...]]:
    if rows:
        _check_model(model, rows[0][0], schedule)
    chunks = [rows[i : i + chunk_size] for i in range(0, len(rows), chunk_size)]
    # dropout is zero throughout, so the module mode does not affect sampling
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outputs = list(pool.map(lambda chunk: _run_chunk(chunk, model, graph, schedule, trace), chunks))

    samples = torch.cat([o.samples for o in outputs])
    rows_out: tuple[TraceRow, ...] = ()
    if trace:
        merged: dict[int, StepStats] = {}
        for output in outputs:
            for t, stats in output.stats.items():
                merged.setdefault(t, StepStats()).merge(stats)
        rows_out = tuple(merged[t].row(t) for t in range(schedule.T, 0, -1))
    return samples, rows_out


def sample_imputation(
    w: TimeSeriesWindow,
    model: LssdmModel,
    graph: Graph,
    schedule: NoiseSchedule,
    n_samples: int = 100,
    rng: RngStream | None = None,
    workers: int = 1,
    chunk_size: int = 50,
    trace: bool = False,
) -> ImputationResult:
    """Draw ``n_samples`` imputations of one window; sample ``s`` uses ``rng.split(s)``.

    Raises:
        CheckpointError: If the model does not fit the window shape or schedule.

    """
    if n_samples < 1:
        msg = f"n_samples must be >= 1, got {n_samples}"
        raise ValueError(msg)
    rng = rng or RngStream(0)
    rows = [(w, rng.split(s)) for s in range(n_samples)]
    samples, trace_rows = _sample_rows(rows, model, graph, schedule, workers, chunk_size, trace)
    return ImputationResult(window_index=w.index, samples=samples, trace=trace_rows)


def sample_windows(
    windows: Sequence[TimeSeriesWindow],
    model: LssdmModel,
    graph: Graph,
    schedule: NoiseSchedule,
    n_samples: int,
    rng: RngStream,
    workers: int = 1,
    chunk_size: int = 50,
    trace: bool = False,
) -> list[ImputationResult]:
    """Sample every window; sample ``s`` of window ``w`` uses ``rng.split(w.index).split(s)``.

    With ``trace`` the per-step rows summarize all windows together and are
    attached to the first result.
    """
    if not windows:
        return []
    rows = [(w, rng.split(w.index).split(s)) for w in windows for s in range(n_samples)]
    logger.info("Sampling imputations", windows=len(windows), samples=n_samples, workers=workers)
    samples, trace_rows = _sample_rows(rows, model, graph, schedule, workers, chunk_size, trace)
    per_window = samples.reshape(len(windows), n_samples, *samples.shape[1:])
    return [
        ImputationResult(window_index=w.index, samples=per_window[i], trace=trace_rows if i == 0 else ())
        for i, w in enumerate(windows)
    ]
