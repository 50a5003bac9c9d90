"""Noise schedules."""

from dataclasses import dataclass

import torch

from lssdm.domain.enums import ScheduleKind
from lssdm.domain.errors import ConfigurationError, ShapeError
from lssdm.domain.models import DTYPE


@dataclass(frozen=True, slots=True, eq=False)
class NoiseSchedule:
    """beta, alpha = 1 - beta and alpha_bar = cumprod(alpha), indexed by ``t - 1``."""

    T: int
    beta: torch.Tensor
    alpha: torch.Tensor
    alpha_bar: torch.Tensor

    @classmethod
    def from_betas(cls, betas: torch.Tensor) -> "NoiseSchedule":
        """Schedule from explicit betas in ``[0, 1)``; zero betas are allowed."""
        beta = betas.to(DTYPE).reshape(-1)
        if beta.numel() < 1 or bool(((beta < 0) | (beta >= 1)).any()):
            msg = "Betas must be a non-empty sequence in [0, 1)"
            raise ConfigurationError(msg)
        alpha = 1.0 - beta
        return cls(T=int(beta.numel()), beta=beta, alpha=alpha, alpha_bar=torch.cumprod(alpha, dim=0))

    def check_step(self, t: int) -> int:
        """Validate a 1-based step index.

        Raises:
            ShapeError: If ``t`` is outside ``[1, T]``.

        """
        if not 1 <= t <= self.T:
            msg = f"Diffusion step {t} outside [1, {self.T}]"
            raise ShapeError(msg)
        return t

    def alpha_at(self, t: int) -> float:
        """alpha_t."""
        return float(self.alpha[self.check_step(t) - 1])

    def alpha_bar_at(self, t: int) -> float:
        """alpha_bar_t, with alpha_bar_0 = 1."""
        if t == 0:
            return 1.0
        return float(self.alpha_bar[self.check_step(t) - 1])


def build_schedule(
    T: int = 50,
    beta_min: float = 1e-4,
    beta_max: float = 0.5,
    kind: ScheduleKind = ScheduleKind.QUADRATIC,
) -> NoiseSchedule:
    """Quadratic (``linspace(sqrt(beta_min), sqrt(beta_max), T) ** 2``) or linear betas.

    Raises:
        ConfigurationError: Unless ``T >= 1`` and ``0 < beta_min <= beta_max < 1``.

    """
    if T < 1 or not 0.0 < beta_min <= beta_max < 1.0:
        msg = f"Schedule needs T >= 1 and 0 < beta_min <= beta_max < 1, got T={T}, [{beta_min}, {beta_max}]"
        raise ConfigurationError(msg)
    if kind == ScheduleKind.QUADRATIC:
        betas = torch.linspace(beta_min**0.5, beta_max**0.5, T, dtype=DTYPE) ** 2
    else:
        betas = torch.linspace(beta_min, beta_max, T, dtype=DTYPE)
    return NoiseSchedule.from_betas(betas)
