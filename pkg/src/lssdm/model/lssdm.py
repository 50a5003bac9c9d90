"""The combined model and its seeded initialization."""

import math
from typing import Any

import torch
from torch import nn

from lssdm.config import ModelConfig
from lssdm.domain.models import DTYPE
from lssdm.model.decoder import TransformerCnnDecoder
from lssdm.model.denoiser import NoisePredictor
from lssdm.model.encoder import GraphEncoder
from lssdm.numerics.rng import RngStream


class LssdmModel(nn.Module):
    """Encoder (phi), decoder (psi) and noise predictor (theta) as one parameter tree."""

    def __init__(self, n_sensors: int, n_steps: int, config: ModelConfig, diffusion_steps: int) -> None:
        """Build all three networks for ``N = n_sensors`` and ``D = n_steps``."""
        super().__init__()
        self.n_sensors = n_sensors
        self.n_steps = n_steps
        self.config = config
        self.diffusion_steps = diffusion_steps
        self.encoder = GraphEncoder(n_steps, config.hidden_dim, config.latent_dim, config.head_activation)
        self.decoder = TransformerCnnDecoder(config.latent_dim, n_steps, config.n_heads, config.positional_encoding)
        self.denoiser = NoisePredictor(
            diffusion_steps,
            channels=config.channels,
            n_blocks=config.n_blocks,
            n_heads=config.denoiser_heads,
            step_embedding_dim=config.step_embedding_dim,
        )

    def architecture(self) -> dict[str, Any]:
        """Hyperparameters that fix the parameter layout, as recorded in checkpoints."""
        return {
            "n_sensors": self.n_sensors,
            "n_steps": self.n_steps,
            "diffusion_steps": self.diffusion_steps,
            **self.config.model_dump(mode="json"),
        }

    def vae_parameters(self) -> list[nn.Parameter]:
        """phi and psi."""
        return [*self.encoder.parameters(), *self.decoder.parameters()]

    def denoiser_parameters(self) -> list[nn.Parameter]:
        """theta."""
        return list(self.denoiser.parameters())


def _fan_in(owner: nn.Module, param: torch.Tensor) -> int | None:
    """Fan-in used for a parameter's uniform bound; ``None`` keeps the parameter as is."""
    if isinstance(owner, nn.LayerNorm):
        return None
    if isinstance(owner, nn.Linear):
        return owner.in_features
    if isinstance(owner, nn.Conv1d):
        return owner.in_channels * owner.kernel_size[0] // owner.groups
    if isinstance(owner, nn.MultiheadAttention):
        return owner.embed_dim
    if isinstance(owner, GraphEncoder):
        return int(param.shape[0])
    return int(param.shape[-1]) if param.dim() > 1 else None


def init_params(model: nn.Module, rng: RngStream, zero_final: bool = True) -> nn.Module:
    """Fill every weight and bias with ``uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))`` in place.

    Parameter ``i`` (in ``named_parameters`` order) draws from ``rng.split(i)``.
    Layer norms keep unit scale and zero shift. With ``zero_final`` the noise
    predictor's output projection is zeroed, so predicted noise starts at 0.
    """
    with torch.no_grad():
        for index, (path, param) in enumerate(model.named_parameters()):
            owner_path, _, _ = path.rpartition(".")
            owner = model.get_submodule(owner_path) if owner_path else model
            fan_in = _fan_in(owner, param)
            if fan_in is None:
                continue
            bound = 1.0 / math.sqrt(fan_in)
            draws = rng.split(index).uniform(-bound, bound, tuple(param.shape))
            param.copy_(torch.from_numpy(draws).to(DTYPE))
        if zero_final and isinstance(model, LssdmModel):
            nn.init.zeros_(model.denoiser.output_projection.weight)
            nn.init.zeros_(model.denoiser.output_projection.bias)
    return model


def build_model(n_sensors: int, n_steps: int, config: ModelConfig, diffusion_steps: int, seed: int) -> LssdmModel:
    """Construct and initialize a model from the run seed."""
    model = LssdmModel(n_sensors, n_steps, config, diffusion_steps)
    init_params(model, RngStream(seed).split(1))
    return model
