"""Pytest configuration and fixtures."""

import numpy as np
import pytest
import torch

from lssdm.config import MaskSpec, ModelConfig
from lssdm.data.masking import simulate_missing
from lssdm.data.synthetic import synth_generate
from lssdm.diffusion.schedule import NoiseSchedule, build_schedule
from lssdm.domain.models import DTYPE, Dataset, Normalization, TimeSeriesWindow
from lssdm.graph.laplacian import Graph
from lssdm.model.lssdm import LssdmModel, build_model
from lssdm.numerics.rng import RngStream

N_SENSORS = 4
N_STEPS = 8
DIFFUSION_STEPS = 5


def make_window(
    values: list[list[float]],
    observed: list[list[float]] | None = None,
    index: int = 0,
) -> TimeSeriesWindow:
    """Build a window from nested lists; values at non-observed entries are zeroed."""
    v = torch.tensor(values, dtype=DTYPE)
    m = torch.ones_like(v) if observed is None else torch.tensor(observed, dtype=DTYPE)
    return TimeSeriesWindow(index=index, values=v * m, observed_mask=m, eval_mask=torch.zeros_like(v))


def unit_normalization(n_sensors: int) -> Normalization:
    """Identity min-max pair (mins 0, maxs 1)."""
    return Normalization(mins=np.zeros(n_sensors), maxs=np.ones(n_sensors))


@pytest.fixture
def tiny_config() -> ModelConfig:
    """Return a model config small enough for per-test construction."""
    return ModelConfig(
        latent_dim=4,
        hidden_dim=6,
        n_heads=2,
        channels=4,
        n_blocks=1,
        denoiser_heads=2,
        step_embedding_dim=8,
    )


@pytest.fixture
def synthetic() -> tuple[Dataset, Graph]:
    """Return a small, fully observed synthetic dataset and its graph."""
    return synth_generate(
        n_sensors=N_SENSORS,
        n_steps=N_STEPS,
        n_windows=12,
        graph_degree=2,
        noise_sd=0.05,
        rng=RngStream(3),
    )


@pytest.fixture
def dataset(synthetic: tuple[Dataset, Graph]) -> Dataset:
    """Return the synthetic dataset."""
    return synthetic[0]


@pytest.fixture
def graph(synthetic: tuple[Dataset, Graph]) -> Graph:
    """Return the synthetic graph."""
    return synthetic[1]


@pytest.fixture
def masked(dataset: Dataset) -> Dataset:
    """Return the synthetic dataset with a 30% point mask simulated."""
    return simulate_missing(dataset, MaskSpec(rate=0.3, seed=1))


@pytest.fixture
def schedule() -> NoiseSchedule:
    """Return a five-step quadratic schedule."""
    return build_schedule(DIFFUSION_STEPS)


@pytest.fixture
def tiny_model(tiny_config: ModelConfig) -> LssdmModel:
    """Return a seeded model for 4 sensors by 8 steps."""
    return build_model(N_SENSORS, N_STEPS, tiny_config, DIFFUSION_STEPS, seed=0)
