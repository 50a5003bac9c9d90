"""Graph convolution ``act(L H W)`` and the sinusoidal tables shared by the networks."""

import torch

from lssdm.domain.enums import Activation
from lssdm.domain.errors import ShapeError
from lssdm.domain.models import DTYPE


def activate(x: torch.Tensor, act: Activation) -> torch.Tensor:
    """Apply ``act`` elementwise."""
    match act:
        case Activation.RELU:
            return torch.relu(x)
        case Activation.SIGMOID:
            return torch.sigmoid(x)
        case _:
            return x


def gcn_layer(
    laplacian: torch.Tensor,
    h: torch.Tensor,
    w: torch.Tensor,
    act: Activation = Activation.NONE,
) -> torch.Tensor:
    """One graph convolution ``act(L @ H @ W)``.

    Args:
        laplacian: ``N x N`` propagation operator.
        h: Node features, ``(..., N, F)``; leading dims are batch dims.
        w: Weights, ``F x E``.
        act: Output activation.

    Raises:
        ShapeError: If the operands do not chain.

    """
    if laplacian.dim() != 2 or laplacian.shape[0] != laplacian.shape[1]:
        msg = f"Laplacian must be square, got {tuple(laplacian.shape)}"
        raise ShapeError(msg)
    if h.dim() < 2 or h.shape[-2] != laplacian.shape[0]:
        msg = f"Features {tuple(h.shape)} do not match a {laplacian.shape[0]}-node Laplacian"
        raise ShapeError(msg)
    if w.dim() != 2 or w.shape[0] != h.shape[-1]:
        msg = f"Weights {tuple(w.shape)} do not match feature width {h.shape[-1]}"
        raise ShapeError(msg)
    return activate(laplacian @ h @ w, act)


def sinusoidal_table(n_positions: int, dim: int, base: float = 10000.0) -> torch.Tensor:
    """Fixed ``n_positions x dim`` table: sines in the first half, cosines in the second."""
    half = (dim + 1) // 2
    positions = torch.arange(n_positions, dtype=DTYPE)[:, None]
    exponents = torch.arange(half, dtype=DTYPE) / max(half - 1, 1)
    angles = positions / base**exponents[None, :]
    return torch.cat([angles.sin(), angles.cos()], dim=1)[:, :dim]


def step_table(n_steps: int, dim: int) -> torch.Tensor:
    """Diffusion-step embedding rows for steps ``0 .. n_steps-1`` (CSDI frequencies)."""
    half = dim // 2
    steps = torch.arange(n_steps, dtype=DTYPE)[:, None]
    frequencies = 10.0 ** (torch.arange(half, dtype=DTYPE) / max(half - 1, 1) * 4.0)
    angles = steps * frequencies[None, :]
    return torch.cat([angles.sin(), angles.cos()], dim=1)
