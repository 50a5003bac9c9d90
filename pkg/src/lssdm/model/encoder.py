"""Variational graph encoder q_phi(Z | X, A)."""

import torch
from torch import nn

from lssdm.domain.enums import Activation, HeadActivation
from lssdm.domain.errors import ShapeError
from lssdm.domain.models import DTYPE, LatentGaussian
from lssdm.model.gcn import gcn_layer


class GraphEncoder(nn.Module):
    """Two-layer GCN with a shared first layer and separate mean / log-variance heads.

    ``hidden = relu(L X W1)``; ``mean = head(L hidden W2_u)``;
    ``log_var = head(L hidden W2_sigma)`` where ``head`` is a sigmoid in
    faithful mode and the identity in linear-heads mode. The time axis is the
    feature axis, so ``X`` is ``N x D``.
    """

    def __init__(
        self,
        n_steps: int,
        hidden_dim: int,
        latent_dim: int,
        head_activation: HeadActivation = HeadActivation.FAITHFUL,
    ) -> None:
        """Create zero-initialized weights; see :func:`lssdm.model.init_params`."""
        super().__init__()
        self.n_steps = n_steps
        self.head_activation = head_activation
        self.W1 = nn.Parameter(torch.zeros(n_steps, hidden_dim, dtype=DTYPE))
        self.W2_u = nn.Parameter(torch.zeros(hidden_dim, latent_dim, dtype=DTYPE))
        self.W2_sigma = nn.Parameter(torch.zeros(hidden_dim, latent_dim, dtype=DTYPE))

    @property
    def head(self) -> Activation:
        """Activation applied by both output heads."""
        return Activation.SIGMOID if self.head_activation == HeadActivation.FAITHFUL else Activation.NONE

    def forward(self, x_in: torch.Tensor, laplacian: torch.Tensor) -> LatentGaussian:
        """Encode ``(..., N, D)`` inputs into a per-node diagonal Gaussian."""
        if x_in.shape[-1] != self.n_steps:
            msg = f"Encoder expects {self.n_steps} time steps, got input {tuple(x_in.shape)}"
            raise ShapeError(msg)
        hidden = gcn_layer(laplacian, x_in, self.W1, Activation.RELU)
        return LatentGaussian(
            mean=gcn_layer(laplacian, hidden, self.W2_u, self.head),
            log_var=gcn_layer(laplacian, hidden, self.W2_sigma, self.head),
        )

    def encode(self, x_in: torch.Tensor, laplacian: torch.Tensor) -> LatentGaussian:
        """Alias of ``forward`` for call sites that read better with a verb."""
        return self(x_in, laplacian)  # type: ignore[no-any-return]


def reparameterize(lat: LatentGaussian, eps: torch.Tensor) -> torch.Tensor:
    """``Z = mean + exp(0.5 * log_var) * eps``.

    Raises:
        ShapeError: If ``eps`` does not match the latent shape.

    """
    if eps.shape != lat.mean.shape:
        msg = f"Noise shape {tuple(eps.shape)} != latent shape {tuple(lat.mean.shape)}"
        raise ShapeError(msg)
    return lat.mean + torch.exp(0.5 * lat.log_var) * eps
