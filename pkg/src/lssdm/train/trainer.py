"""Training loop.

Per batch: one Adam step on L1 over the encoder and decoder, then the
reconstruction is recomputed with the updated weights (and the same latent
noise) as a constant input, and one Adam step on L2 over the noise predictor.
With ``joint_step`` a single Adam step on ``L1 + L2`` updates everything and
the reconstruction is not detached.

Only windows reach this module; held-out truth never does. Model selection
uses a point mask simulated over the validation windows' own observations.
"""

import copy
import json
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import structlog
import torch

from lssdm.config import MaskSpec, TrainConfig
from lssdm.data.masking import simulate_missing
from lssdm.diffusion.sampler import sample_windows
from lssdm.diffusion.schedule import NoiseSchedule
from lssdm.domain.enums import MaskKind
from lssdm.domain.errors import NumericError
from lssdm.domain.models import Dataset, TimeSeriesWindow
from lssdm.evalmetrics.metrics import mae
from lssdm.graph.laplacian import Graph
from lssdm.model.lssdm import LssdmModel
from lssdm.numerics.autodiff import find_nonfinite
from lssdm.numerics.rng import RngStream
from lssdm.train.losses import WindowBatch, diffusion_noise, latent_noise, loss_diffusion, loss_vae

logger = structlog.get_logger()

_VAE_STREAM = 0
_DIFFUSION_STREAM = 1


@dataclass(frozen=True, slots=True)
class EpochRecord:
    """One line of the epoch log."""

    epoch: int
    l1: float
    l2: float
    kl: float
    valid_mae: float | None
    seconds: float

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready dict."""
        return asdict(self)


@dataclass(slots=True)
class TrainResult:
    """Best model (by validation MAE) and the epoch history."""

    model: LssdmModel
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None


@dataclass(frozen=True, slots=True)
class StepLosses:
    """Loss values of one batch."""

    l1: float
    l2: float
    kl: float


class Trainer:
    """Alternating (or joint) optimization of the VAE and the noise predictor."""

    def __init__(
        self,
        model: LssdmModel,
        graph: Graph,
        schedule: NoiseSchedule,
        config: TrainConfig,
        rng: RngStream,
    ) -> None:
        """Set up the optimizers.

        Args:
            model: Initialized model, updated in place.
            graph: Sensor graph.
            schedule: Noise schedule.
            config: Optimization parameters.
            rng: Stream for shuffling and loss noise.

        """
        self.model = model
        self.graph = graph
        self.schedule = schedule
        self.config = config
        self.rng = rng
        if config.joint_step:
            self.joint_opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
        else:
            self.vae_opt = torch.optim.Adam(model.vae_parameters(), lr=config.learning_rate)
            self.diff_opt = torch.optim.Adam(model.denoiser_parameters(), lr=config.learning_rate)

    def _check_finite(
        self, value: torch.Tensor, name: str, epoch: int, batch: int, rerun: Callable[[], object]
    ) -> None:
        if bool(torch.isfinite(value)):
            return
        path = find_nonfinite(self.model, rerun)
        msg = f"Non-finite {name} at epoch {epoch}, batch {batch}"
        logger.error("Training aborted", loss=name, epoch=epoch, batch=batch, path=path)
        raise NumericError(msg, path=path or name)

    def step(self, batch: WindowBatch, rng: RngStream, epoch: int = 0, index: int = 0) -> StepLosses:
        """One optimization step on a batch.

        Raises:
            NumericError: If a loss is non-finite; names the epoch and batch.

        """
        laplacian = self.graph.laplacian
        eps_z = latent_noise(batch, self.model.config.latent_dim, rng.split(_VAE_STREAM))
        vae = loss_vae(batch, laplacian, self.model, eps=eps_z)
        self._check_finite(vae.l1, "l1", epoch, index, lambda: loss_vae(batch, laplacian, self.model, eps=eps_z))
        t, eps = diffusion_noise(vae.batch, self.schedule, rng.split(_DIFFUSION_STREAM))

        if self.config.joint_step:
            self.joint_opt.zero_grad()
            l2 = loss_diffusion(vae.batch, vae.x_bar, self.model, self.schedule, t=t, eps=eps)
            self._check_finite(
                l2, "l2", epoch, index, lambda: loss_diffusion(vae.batch, vae.x_bar, self.model, self.schedule, t=t, eps=eps)
            )
            total = vae.l1 + l2
            if total.requires_grad:
                total.backward()
                self.joint_opt.step()
            return StepLosses(l1=float(vae.l1), l2=float(l2), kl=float(vae.kl))

        self.vae_opt.zero_grad()
        if vae.l1.requires_grad:
            vae.l1.backward()
            self.vae_opt.step()

        with torch.no_grad():
            x_bar = loss_vae(batch, laplacian, self.model, eps=eps_z).x_bar
        self.diff_opt.zero_grad()
        l2 = loss_diffusion(vae.batch, x_bar, self.model, self.schedule, t=t, eps=eps)
        self._check_finite(
            l2, "l2", epoch, index, lambda: loss_diffusion(vae.batch, x_bar, self.model, self.schedule, t=t, eps=eps)
        )
        if l2.requires_grad:
            l2.backward()
            self.diff_opt.step()
        return StepLosses(l1=float(vae.l1), l2=float(l2), kl=float(vae.kl))

    def train_epoch(self, epoch: int, windows: Sequence[TimeSeriesWindow]) -> StepLosses:
        """Shuffle, batch and step through ``windows``; returns batch-mean losses."""
        epoch_rng = self.rng.split(epoch)
        order = epoch_rng.permutation(len(windows))
        size = self.config.batch_size
        totals = StepLosses(0.0, 0.0, 0.0)
        n_batches = 0
        self.model.train()
        for index, start in enumerate(range(0, len(windows), size)):
            batch = WindowBatch.from_windows([windows[int(i)] for i in order[start : start + size]])
            losses = self.step(batch, epoch_rng.split(index), epoch, index)
            totals = StepLosses(totals.l1 + losses.l1, totals.l2 + losses.l2, totals.kl + losses.kl)
            n_batches += 1
        n = max(n_batches, 1)
        return StepLosses(totals.l1 / n, totals.l2 / n, totals.kl / n)


def validation_mask(windows: Sequence[TimeSeriesWindow], rate: float, rng: RngStream, template: Dataset) -> Dataset:
    """Point mask at ``rate`` over the validation windows' observed entries.

    Evaluation entries already present are treated as plain missing values, so
    the returned eval mask covers exactly the newly simulated entries.
    """
    stripped = tuple(
        TimeSeriesWindow(
            index=w.index,
            values=w.values,
            observed_mask=w.observed_mask,
            eval_mask=torch.zeros_like(w.eval_mask),
            graph_id=w.graph_id,
        )
        for w in windows
    )
    ds = Dataset(windows=stripped, sensor_names=template.sensor_names, normalization=template.normalization)
    return simulate_missing(ds, MaskSpec(kind=MaskKind.POINT, rate=rate), rng=rng)


def validation_mae(
    model: LssdmModel,
    masked: Dataset,
    graph: Graph,
    schedule: NoiseSchedule,
    n_samples: int,
    rng: RngStream,
    workers: int = 1,
) -> float | None:
    """MAE of the sample mean on the simulated validation entries (normalized units).

    Returns None when the validation mask selects nothing.
    """
    if not masked.held_out:
        return None
    results = sample_windows(masked.windows, model, graph, schedule, n_samples, rng, workers=workers)
    preds = torch.stack([r.point() for r in results])
    truth = torch.stack([masked.held_out.dense(w) for w in masked.windows])
    mask = torch.stack([w.eval_mask for w in masked.windows])
    return mae(preds, truth, mask)


def train(
    ds_train: Dataset,
    ds_valid: Dataset,
    graph: Graph,
    model: LssdmModel,
    schedule: NoiseSchedule,
    config: TrainConfig,
    mask_rate: float,
    rng: RngStream,
    workers: int = 1,
) -> TrainResult:
    """Run the training loop and return the best model by validation MAE.

    Only the windows of ``ds_train`` and ``ds_valid`` are used; their held-out
    stores are not read.

    Args:
        ds_train: Training split.
        ds_valid: Validation split.
        graph: Sensor graph.
        model: Initialized model; trained in place and restored to the best epoch.
        schedule: Noise schedule.
        config: Optimization parameters.
        mask_rate: Rate of the validation point mask.
        rng: Training stream; split 0 drives batches, 1 the validation mask,
            2 the validation sampler.
        workers: Sampler threads for validation.

    """
    trainer = Trainer(model, graph, schedule, config, rng.split(0))
    train_windows = ds_train.windows
    masked_valid = validation_mask(ds_valid.windows, mask_rate, rng.split(1), ds_valid) if len(ds_valid) else None
    result = TrainResult(model=model)
    best_mae = math.inf
    best_state: dict[str, torch.Tensor] | None = None

    for epoch in range(config.epochs):
        log = logger.bind(epoch=epoch)
        started = time.perf_counter()
        losses = trainer.train_epoch(epoch, train_windows)
        valid = (
            validation_mae(model, masked_valid, graph, schedule, config.valid_samples, rng.split(2), workers)
            if masked_valid is not None
            else None
        )
        seconds = time.perf_counter() - started if config.log_timing else 0.0
        record = EpochRecord(epoch=epoch, l1=losses.l1, l2=losses.l2, kl=losses.kl, valid_mae=valid, seconds=seconds)
        result.history.append(record)
        log.info("Epoch finished", l1=record.l1, l2=record.l2, kl=record.kl, valid_mae=valid)

        if valid is None or valid < best_mae:
            best_mae = valid if valid is not None else best_mae
            best_state = copy.deepcopy(model.state_dict())
            result.best_epoch = epoch

    if best_state is not None:
        model.load_state_dict(best_state)
        logger.info("Best epoch restored", epoch=result.best_epoch, valid_mae=None if math.isinf(best_mae) else best_mae)
    return result


def write_train_log(history: Sequence[EpochRecord], path: Path) -> Path:
    """Write one JSON object per epoch."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for record in history:
            handle.write(json.dumps(record.as_dict(), sort_keys=True) + "\n")
    return path
