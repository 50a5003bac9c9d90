"""Training objectives: the VAE loss L1, the denoising loss L2 and the KL term."""

from collections.abc import Sequence
from dataclasses import dataclass

import structlog
import torch

from lssdm.data.interpolate import linear_interpolate
from lssdm.diffusion.process import forward_diffuse_marginal
from lssdm.diffusion.schedule import NoiseSchedule
from lssdm.domain.models import DTYPE, LatentGaussian, TimeSeriesWindow
from lssdm.model.encoder import reparameterize
from lssdm.model.lssdm import LssdmModel
from lssdm.numerics.rng import RngStream, gauss_rows

logger = structlog.get_logger()


@dataclass(frozen=True, slots=True, eq=False)
class WindowBatch:
    """Stacked ``(B, N, D)`` views of training windows.

    ``values`` holds ``X * M``; ``coarse`` is the interpolated encoder input.
    """

    values: torch.Tensor
    observed: torch.Tensor
    coarse: torch.Tensor
    indices: tuple[int, ...]

    @classmethod
    def from_windows(cls, windows: Sequence[TimeSeriesWindow]) -> "WindowBatch":
        """Stack ``windows`` in order."""
        return cls(
            values=torch.stack([w.conditional for w in windows]),
            observed=torch.stack([w.observed_mask for w in windows]),
            coarse=torch.stack([linear_interpolate(w) for w in windows]),
            indices=tuple(w.index for w in windows),
        )

    @property
    def size(self) -> int:
        """Number of windows B."""
        return int(self.values.shape[0])

    def subset(self, keep: torch.Tensor) -> "WindowBatch":
        """Rows where the boolean ``keep`` is set."""
        rows = torch.nonzero(keep).reshape(-1).tolist()
        return WindowBatch(
            values=self.values[keep],
            observed=self.observed[keep],
            coarse=self.coarse[keep],
            indices=tuple(self.indices[i] for i in rows),
        )


@dataclass(frozen=True, slots=True, eq=False)
class VaeLoss:
    """L1 with its parts and the reconstruction it was computed from."""

    l1: torch.Tensor
    reconstruction: torch.Tensor
    kl: torch.Tensor
    x_bar: torch.Tensor
    batch: WindowBatch


def kl_diag_gauss(lat: LatentGaussian) -> torch.Tensor:
    """``KL(N(u, diag(exp(log_var))) || N(0, I))`` summed over all entries.

    Closed form ``0.5 * sum(exp(log_var) + u**2 - 1 - log_var)``.
    """
    return 0.5 * (lat.log_var.exp() + lat.mean**2 - 1.0 - lat.log_var).sum()


def latent_noise(batch: WindowBatch, latent_dim: int, rng: RngStream) -> torch.Tensor:
    """Reparameterization noise, one ``rng.split(i)`` stream per batch row."""
    n_sensors = int(batch.values.shape[1])
    return gauss_rows([rng.split(i) for i in range(batch.size)], (n_sensors, latent_dim))


def loss_vae(
    batch: WindowBatch,
    laplacian: torch.Tensor,
    model: LssdmModel,
    rng: RngStream | None = None,
    eps: torch.Tensor | None = None,
) -> VaeLoss:
    """One Monte-Carlo draw of L1 over a batch.

    Reconstruction: squared error between ``X * M`` and the decoded sample over
    observed entries, divided by the observed count. KL is divided by
    ``B * N * E``. Windows without observed entries are skipped.

    Args:
        batch: Training windows.
        laplacian: Graph operator.
        model: Model whose encoder and decoder are evaluated.
        rng: Source of the latent noise (used when ``eps`` is None).
        eps: Frozen latent noise of shape ``(B, N, E)``.

    """
    counts = batch.observed.sum(dim=(1, 2))
    keep = counts > 0
    if not bool(keep.all()):
        skipped = [batch.indices[i] for i in torch.nonzero(~keep).reshape(-1).tolist()]
        logger.warning("Windows without observed entries skipped", windows=skipped)
    if eps is None:
        eps = latent_noise(batch, model.config.latent_dim, rng or RngStream(0))
    if not bool(keep.any()):
        zero = torch.zeros((), dtype=DTYPE)
        return VaeLoss(l1=zero, reconstruction=zero, kl=zero, x_bar=torch.zeros_like(batch.values), batch=batch)
    kept = batch.subset(keep)

    latent = model.encoder(kept.coarse, laplacian)
    x_bar = model.decoder(reparameterize(latent, eps[keep]))
    squared = ((kept.values - x_bar) ** 2) * kept.observed
    reconstruction = squared.sum() / kept.observed.sum()
    kl = kl_diag_gauss(latent) / latent.mean.numel()
    return VaeLoss(l1=reconstruction + kl, reconstruction=reconstruction, kl=kl, x_bar=x_bar, batch=kept)


def diffusion_noise(
    batch: WindowBatch,
    schedule: NoiseSchedule,
    rng: RngStream,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-row step ``t ~ U{1..T}`` and noise ``eps``; row ``i`` draws from ``rng.split(i)``."""
    streams = [rng.split(i) for i in range(batch.size)]
    steps = torch.tensor([s.integers(1, schedule.T + 1) for s in streams], dtype=torch.long)
    eps = gauss_rows(streams, tuple(batch.values.shape[1:]))
    return steps, eps


def loss_diffusion(
    batch: WindowBatch,
    x_bar: torch.Tensor,
    model: LssdmModel,
    schedule: NoiseSchedule,
    rng: RngStream | None = None,
    t: torch.Tensor | None = None,
    eps: torch.Tensor | None = None,
) -> torch.Tensor:
    """Denoising loss L2 over non-observed entries, divided by their count.

    ``x_bar`` is used as given; detach it to keep L2 gradients inside theta.
    Returns 0 when the batch has no non-observed entries.
    """
    missing = 1.0 - batch.observed
    if t is None or eps is None:
        t, eps = diffusion_noise(batch, schedule, rng or RngStream(0))
    n_missing = missing.sum()
    if float(n_missing) == 0.0:
        return torch.zeros((), dtype=DTYPE)
    x_bar_ta = missing * x_bar
    x_t = forward_diffuse_marginal(x_bar_ta, t, eps, schedule)
    eps_hat = model.denoiser(x_t, batch.values, x_bar_ta, batch.observed, t)
    return (((eps - eps_hat) ** 2) * missing).sum() / n_missing
