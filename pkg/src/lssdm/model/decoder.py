"""Decoder p_psi(X | Z): one transformer block over sensors, two 1-D convolutions, a projection."""

import torch
from torch import nn

from lssdm.domain.errors import ShapeError
from lssdm.domain.models import DTYPE
from lssdm.model.gcn import sinusoidal_table

FF_MULTIPLIER = 4
KERNEL_SIZE = 3


class SensorAttentionBlock(nn.Module):
    """Pre-layer-norm transformer encoder block; the sequence axis is the sensor axis."""

    def __init__(self, width: int, n_heads: int) -> None:
        """Build the attention and feed-forward sublayers."""
        super().__init__()
        if width % n_heads:
            msg = f"{n_heads} heads do not divide width {width}"
            raise ShapeError(msg)
        self.norm1 = nn.LayerNorm(width, dtype=DTYPE)
        self.attention = nn.MultiheadAttention(width, n_heads, dropout=0.0, batch_first=True, dtype=DTYPE)
        self.norm2 = nn.LayerNorm(width, dtype=DTYPE)
        self.feed_forward = nn.Sequential(
            nn.Linear(width, FF_MULTIPLIER * width, dtype=DTYPE),
            nn.ReLU(),
            nn.Linear(FF_MULTIPLIER * width, width, dtype=DTYPE),
        )

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """Attend across sensors of a ``(B, N, E)`` batch."""
        h = self.norm1(z)
        attended, _ = self.attention(h, h, h, need_weights=False)
        z = z + attended
        return z + self.feed_forward(self.norm2(z))


class TransformerCnnDecoder(nn.Module):
    """``X_bar = Linear(CNN(ReLU(CNN(transformer(Z)))))``.

    Each sensor's E-wide latent row is a 1-channel signal for the convolutions
    (kernel 3, same padding, 1 -> 2 -> 2 channels, so widths E -> 2E -> 2E);
    the flattened 2E features are projected to the D time steps. Without
    positional encoding the decoder is equivariant to sensor permutations.
    """

    def __init__(self, latent_dim: int, n_steps: int, n_heads: int, positional_encoding: bool = False) -> None:
        """Build the decoder for ``E = latent_dim`` and ``D = n_steps``."""
        super().__init__()
        self.latent_dim = latent_dim
        self.positional_encoding = positional_encoding
        self.block = SensorAttentionBlock(latent_dim, n_heads)
        self.conv1 = nn.Conv1d(1, 2, KERNEL_SIZE, padding=KERNEL_SIZE // 2, dtype=DTYPE)
        self.conv2 = nn.Conv1d(2, 2, KERNEL_SIZE, padding=KERNEL_SIZE // 2, dtype=DTYPE)
        self.projection = nn.Linear(2 * latent_dim, n_steps, dtype=DTYPE)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """Decode ``(N, E)`` or ``(B, N, E)`` latents into ``(N, D)`` / ``(B, N, D)``."""
        if z.dim() not in (2, 3) or z.shape[-1] != self.latent_dim:
            msg = f"Decoder expects (..., N, {self.latent_dim}) latents, got {tuple(z.shape)}"
            raise ShapeError(msg)
        squeeze = z.dim() == 2
        if squeeze:
            z = z.unsqueeze(0)
        batch, n_sensors, width = z.shape
        if self.positional_encoding:
            z = z + sinusoidal_table(n_sensors, width)
        h = self.block(z).reshape(batch * n_sensors, 1, width)
        h = self.conv2(torch.relu(self.conv1(h)))
        out: torch.Tensor = self.projection(h.reshape(batch, n_sensors, 2 * width))
        return out.squeeze(0) if squeeze else out

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        """Alias of ``forward``."""
        return self(z)  # type: ignore[no-any-return]
