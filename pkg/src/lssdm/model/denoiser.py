"""Conditional noise predictor eps_theta (a compact CSDI-style network).

Input channels per entry: the noisy target ``x_t * (1 - M)``, the observed
features ``x_co``, the decoded coarse target ``x_bar * (1 - M)`` and the mask
``M``. Each residual block injects the diffusion-step embedding, attends over
time (length D) and then over sensors (length N), and applies a gated
tanh/sigmoid convolution. Skip outputs are summed, scaled by ``1/sqrt(K)``,
and projected to one channel by a zero-initialized convolution.
"""

import math

import torch
from torch import nn

from lssdm.domain.errors import ShapeError
from lssdm.domain.models import DTYPE
from lssdm.model.gcn import sinusoidal_table, step_table

INPUT_CHANNELS = 4


def _attention_layer(channels: int, n_heads: int) -> nn.TransformerEncoderLayer:
    return nn.TransformerEncoderLayer(
        d_model=channels,
        nhead=n_heads,
        dim_feedforward=channels,
        dropout=0.0,
        activation="gelu",
        batch_first=True,
        dtype=DTYPE,
    )


class StepEmbedding(nn.Module):
    """Sinusoidal diffusion-step table followed by a two-layer SiLU MLP."""

    def __init__(self, n_diffusion_steps: int, dim: int) -> None:
        """Precompute the table for steps ``1 .. n_diffusion_steps``."""
        super().__init__()
        self.register_buffer("table", step_table(n_diffusion_steps, dim), persistent=False)
        self.projection1 = nn.Linear(dim, dim, dtype=DTYPE)
        self.projection2 = nn.Linear(dim, dim, dtype=DTYPE)

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        """Embed 1-based steps ``t`` of shape ``(B,)``."""
        table: torch.Tensor = self.table
        x = nn.functional.silu(self.projection1(table[t - 1]))
        return nn.functional.silu(self.projection2(x))


class ResidualBlock(nn.Module):
    """Step injection, time attention, sensor attention, gated convolution."""

    def __init__(self, channels: int, step_dim: int, n_heads: int) -> None:
        """Build one block of width ``channels``."""
        super().__init__()
        self.step_projection = nn.Linear(step_dim, channels, dtype=DTYPE)
        self.time_layer = _attention_layer(channels, n_heads)
        self.sensor_layer = _attention_layer(channels, n_heads)
        self.mid_projection = nn.Conv1d(channels, 2 * channels, 1, dtype=DTYPE)
        self.output_projection = nn.Conv1d(channels, 2 * channels, 1, dtype=DTYPE)

    def _along_time(self, y: torch.Tensor) -> torch.Tensor:
        batch, channels, n_sensors, n_steps = y.shape
        if n_steps == 1:
            return y
        seq = y.permute(0, 2, 3, 1).reshape(batch * n_sensors, n_steps, channels)
        seq = self.time_layer(seq + sinusoidal_table(n_steps, channels))
        return seq.reshape(batch, n_sensors, n_steps, channels).permute(0, 3, 1, 2)

    def _along_sensors(self, y: torch.Tensor) -> torch.Tensor:
        batch, channels, n_sensors, n_steps = y.shape
        if n_sensors == 1:
            return y
        seq = y.permute(0, 3, 2, 1).reshape(batch * n_steps, n_sensors, channels)
        seq = self.sensor_layer(seq)
        return seq.reshape(batch, n_steps, n_sensors, channels).permute(0, 3, 2, 1)

    def forward(self, x: torch.Tensor, step: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Return ``(residual output, skip output)`` for ``x`` of shape ``(B, C, N, D)``."""
        batch, channels, n_sensors, n_steps = x.shape
        y = x + self.step_projection(step)[:, :, None, None]
        y = self._along_sensors(self._along_time(y))
        y = self.mid_projection(y.reshape(batch, channels, n_sensors * n_steps))
        gate, filt = torch.chunk(y, 2, dim=1)
        y = torch.sigmoid(gate) * torch.tanh(filt)
        residual, skip = torch.chunk(self.output_projection(y), 2, dim=1)
        shape = (batch, channels, n_sensors, n_steps)
        return (x + residual.reshape(shape)) / math.sqrt(2.0), skip.reshape(shape)


class NoisePredictor(nn.Module):
    """eps_theta(x_t | x_co, x_bar, M, t) with output shaped like ``x_t``."""

    def __init__(
        self,
        n_diffusion_steps: int,
        channels: int = 64,
        n_blocks: int = 4,
        n_heads: int = 8,
        step_embedding_dim: int = 128,
    ) -> None:
        """Build the network for steps ``1 .. n_diffusion_steps``."""
        super().__init__()
        if channels % n_heads:
            msg = f"{n_heads} heads do not divide {channels} channels"
            raise ShapeError(msg)
        self.n_diffusion_steps = n_diffusion_steps
        self.channels = channels
        self.step_embedding = StepEmbedding(n_diffusion_steps, step_embedding_dim)
        self.input_projection = nn.Conv1d(INPUT_CHANNELS, channels, 1, dtype=DTYPE)
        self.blocks = nn.ModuleList(ResidualBlock(channels, step_embedding_dim, n_heads) for _ in range(n_blocks))
        self.skip_projection = nn.Conv1d(channels, channels, 1, dtype=DTYPE)
        self.output_projection = nn.Conv1d(channels, 1, 1, dtype=DTYPE)
        nn.init.zeros_(self.output_projection.weight)
        nn.init.zeros_(self.output_projection.bias)

    def _steps(self, t: int | torch.Tensor, batch: int) -> torch.Tensor:
        steps = torch.as_tensor(t, dtype=torch.long).reshape(-1)
        if steps.numel() == 1:
            steps = steps.expand(batch)
        if steps.numel() != batch:
            msg = f"Got {steps.numel()} step indices for a batch of {batch}"
            raise ShapeError(msg)
        if bool(((steps < 1) | (steps > self.n_diffusion_steps)).any()):
            msg = f"Diffusion step out of range [1, {self.n_diffusion_steps}]: {steps.tolist()}"
            raise ShapeError(msg)
        return steps

    def forward(
        self,
        x_t: torch.Tensor,
        x_co: torch.Tensor,
        x_bar: torch.Tensor,
        mask: torch.Tensor,
        t: int | torch.Tensor,
    ) -> torch.Tensor:
        """Predict the noise of ``x_t`` at step ``t``; all inputs ``(N, D)`` or ``(B, N, D)``.

        Raises:
            ShapeError: If shapes disagree or ``t`` is outside ``[1, T]``.

        """
        if not x_t.shape == x_co.shape == x_bar.shape == mask.shape or x_t.dim() not in (2, 3):
            msg = "Noise predictor inputs must share an (N, D) or (B, N, D) shape"
            raise ShapeError(msg)
        squeeze = x_t.dim() == 2
        if squeeze:
            x_t, x_co, x_bar, mask = (a.unsqueeze(0) for a in (x_t, x_co, x_bar, mask))
        batch, n_sensors, n_steps = x_t.shape
        target = 1.0 - mask
        stacked = torch.stack([x_t * target, x_co, x_bar * target, mask], dim=1)
        x = torch.relu(self.input_projection(stacked.reshape(batch, INPUT_CHANNELS, n_sensors * n_steps)))
        x = x.reshape(batch, self.channels, n_sensors, n_steps)

        step = self.step_embedding(self._steps(t, batch))
        skips = []
        for block in self.blocks:
            x, skip = block(x, step)
            skips.append(skip)
        h = torch.stack(skips).sum(dim=0) / math.sqrt(len(self.blocks))
        h = torch.relu(self.skip_projection(h.reshape(batch, self.channels, n_sensors * n_steps)))
        out = self.output_projection(h).reshape(batch, n_sensors, n_steps)
        return out.squeeze(0) if squeeze else out
