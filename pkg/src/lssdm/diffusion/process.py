"""Forward corruption and single reverse steps."""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import torch

from lssdm.diffusion.schedule import NoiseSchedule
from lssdm.domain.errors import ShapeError
from lssdm.model.denoiser import NoisePredictor
from lssdm.numerics.rng import RngStream, gauss_rows, gauss_sample


@dataclass(frozen=True, slots=True, eq=False)
class Conditioning:
    """What the reverse process conditions on: observations, decoded target and mask."""

    x_co: torch.Tensor
    x_bar_ta: torch.Tensor
    mask: torch.Tensor


def forward_diffuse_step(x_prev: torch.Tensor, t: int, eps: torch.Tensor, s: NoiseSchedule) -> torch.Tensor:
    """``sqrt(alpha_t) * x_prev + sqrt(1 - alpha_t) * eps``."""
    alpha = s.alpha_at(t)
    return math.sqrt(alpha) * x_prev + math.sqrt(1.0 - alpha) * eps


def forward_diffuse_marginal(
    x0: torch.Tensor,
    t: int | torch.Tensor,
    eps: torch.Tensor,
    s: NoiseSchedule,
) -> torch.Tensor:
    """``sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps``.

    ``t`` is one step for the whole tensor or a ``(B,)`` tensor of steps, one
    per leading row.
    """
    if isinstance(t, int):
        alpha_bar = s.alpha_bar_at(t)
        return math.sqrt(alpha_bar) * x0 + math.sqrt(1.0 - alpha_bar) * eps
    steps = t.to(torch.long).reshape(-1)
    if steps.numel() != x0.shape[0]:
        msg = f"{steps.numel()} steps for {x0.shape[0]} rows"
        raise ShapeError(msg)
    if bool(((steps < 1) | (steps > s.T)).any()):
        msg = f"Diffusion steps outside [1, {s.T}]: {steps.tolist()}"
        raise ShapeError(msg)
    alpha_bar = s.alpha_bar[steps - 1].reshape(-1, *([1] * (x0.dim() - 1)))
    return alpha_bar.sqrt() * x0 + (1.0 - alpha_bar).sqrt() * eps


def reverse_mean(x_t: torch.Tensor, eps_hat: torch.Tensor, t: int, s: NoiseSchedule) -> torch.Tensor:
    """``x_t / sqrt(alpha_t) - (1 - alpha_t) / (sqrt(1 - alpha_bar_t) * sqrt(alpha_t)) * eps_hat``.

    The noise coefficient is taken as 0 when ``1 - alpha_bar_t`` is 0.
    """
    alpha, alpha_bar = s.alpha_at(t), s.alpha_bar_at(t)
    coefficient = 0.0 if alpha_bar >= 1.0 else (1.0 - alpha) / (math.sqrt(1.0 - alpha_bar) * math.sqrt(alpha))
    return x_t / math.sqrt(alpha) - coefficient * eps_hat


def reverse_variance(t: int, s: NoiseSchedule) -> float:
    """Posterior variance ``(1 - alpha_t)(1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)``; 0 at ``t = 1``."""
    alpha, alpha_bar = s.alpha_at(t), s.alpha_bar_at(t)
    if alpha_bar >= 1.0:
        return 0.0
    return (1.0 - alpha) * (1.0 - s.alpha_bar_at(t - 1)) / (1.0 - alpha_bar)


def reverse_step(
    x_t: torch.Tensor,
    cond: Conditioning,
    t: int,
    denoiser: NoisePredictor,
    s: NoiseSchedule,
    rng: RngStream | Sequence[RngStream],
) -> torch.Tensor:
    """One ancestral step ``x_{t-1} = mean + sigma_t * z``; ``z = 0`` at ``t = 1``.

    ``rng`` is a single stream for an ``(N, D)`` state, or one stream per row
    of a ``(B, N, D)`` state. No draw is made at ``t = 1``.
    """
    eps_hat = denoiser(x_t, cond.x_co, cond.x_bar_ta, cond.mask, t)
    mean = reverse_mean(x_t, eps_hat, t, s)
    if t == 1:
        return mean
    if isinstance(rng, RngStream):
        z = gauss_sample(rng, tuple(x_t.shape))
    else:
        z = gauss_rows(rng, tuple(x_t.shape[1:]))
    return mean + math.sqrt(reverse_variance(t, s)) * z
