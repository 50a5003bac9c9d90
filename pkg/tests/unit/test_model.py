"""Tests for the combined model and its initialization."""

import math

import torch
from torch import nn

from lssdm.config import ModelConfig
from lssdm.model.lssdm import LssdmModel, build_model, init_params
from lssdm.numerics.rng import RngStream
from tests.conftest import DIFFUSION_STEPS, N_SENSORS, N_STEPS


class TestLssdmModel:
    """Tests for LssdmModel."""

    def test_parameter_groups_partition(self, tiny_model: LssdmModel) -> None:
        """VAE and denoiser parameters are disjoint and cover the model."""
        vae = {id(p) for p in tiny_model.vae_parameters()}
        denoiser = {id(p) for p in tiny_model.denoiser_parameters()}
        assert not vae & denoiser
        assert vae | denoiser == {id(p) for p in tiny_model.parameters()}

    def test_architecture(self, tiny_model: LssdmModel, tiny_config: ModelConfig) -> None:
        """The architecture echo records sizes and the model config."""
        arch = tiny_model.architecture()
        assert arch["n_sensors"] == N_SENSORS
        assert arch["n_steps"] == N_STEPS
        assert arch["diffusion_steps"] == DIFFUSION_STEPS
        assert arch["latent_dim"] == tiny_config.latent_dim


class TestInitParams:
    """Tests for init_params and build_model."""

    def test_same_seed_same_weights(self, tiny_config: ModelConfig) -> None:
        """Two builds from one seed are identical."""
        a = build_model(N_SENSORS, N_STEPS, tiny_config, DIFFUSION_STEPS, seed=5)
        b = build_model(N_SENSORS, N_STEPS, tiny_config, DIFFUSION_STEPS, seed=5)
        for (path, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters(), strict=True):
            assert torch.equal(pa, pb), path

    def test_different_seed_different_weights(self, tiny_config: ModelConfig) -> None:
        """Different seeds give different encoder weights."""
        a = build_model(N_SENSORS, N_STEPS, tiny_config, DIFFUSION_STEPS, seed=5)
        b = build_model(N_SENSORS, N_STEPS, tiny_config, DIFFUSION_STEPS, seed=6)
        assert not torch.equal(a.encoder.W1, b.encoder.W1)

    def test_zero_final(self, tiny_model: LssdmModel) -> None:
        """The output projection starts at zero."""
        projection = tiny_model.denoiser.output_projection
        assert not bool(projection.weight.any())
        assert not bool(projection.bias.any())

    def test_linear_bounds(self) -> None:
        """Linear weights lie within 1/sqrt(fan_in)."""
        layer = nn.Linear(9, 3, dtype=torch.float64)
        init_params(layer, RngStream(0))
        assert float(layer.weight.abs().max()) <= 1 / math.sqrt(9)

    def test_layer_norm_untouched(self, tiny_model: LssdmModel) -> None:
        """Layer norms keep unit scale and zero shift."""
        norm = tiny_model.decoder.block.norm1
        assert torch.equal(norm.weight, torch.ones_like(norm.weight))
        assert torch.equal(norm.bias, torch.zeros_like(norm.bias))
