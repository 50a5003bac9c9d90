"""Fixtures for end-to-end runs of the command line on a tiny configuration."""

from pathlib import Path

import pytest

from lssdm.cli.app import run

TINY_TOML = """\
seed = 7

[synth]
n_sensors = 4
n_steps = 8
n_windows = 12
graph_degree = 2
noise_sd = 0.05

[data]
window_len = 8

[mask]
rate = 0.3
seed = 1

[model]
latent_dim = 4
hidden_dim = 6
n_heads = 2
channels = 4
n_blocks = 1
denoiser_heads = 2
step_embedding_dim = 8

[diffusion]
steps = 5

[train]
epochs = 1
batch_size = 4
valid_samples = 1

[eval]
n_samples = 3
latent_rates = [0.0, 0.5]
sweep_rates = [0.25]
"""


class Pipeline:
    """Paths of one synthesized and trained tiny run."""

    def __init__(self, root: Path) -> None:
        """Lay out the run directories under ``root``."""
        self.root = root
        self.config = root / "tiny.toml"
        self.synth_dir = root / "synth"
        self.train_dir = root / "train"

    @property
    def dataset(self) -> Path:
        """Synthesized dataset CSV."""
        return self.synth_dir / "dataset.csv"

    @property
    def graph(self) -> Path:
        """Synthesized graph JSON."""
        return self.synth_dir / "graph.json"

    @property
    def checkpoint(self) -> Path:
        """Trained checkpoint directory."""
        return self.train_dir / "checkpoint"

    def data_flags(self, dataset: Path | None = None) -> list[str]:
        """Config and data flags shared by every downstream command."""
        return [
            "--config",
            str(self.config),
            "--set",
            f"data.dataset={dataset or self.dataset}",
            "--set",
            f"data.graph={self.graph}",
        ]


@pytest.fixture
def tiny_toml(tmp_path: Path) -> Path:
    """Return a written tiny run config."""
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory: pytest.TempPathFactory) -> Pipeline:
    """Return a tiny run that has been synthesized and trained once per module."""
    p = Pipeline(tmp_path_factory.mktemp("pipeline"))
    p.config.write_text(TINY_TOML, encoding="utf-8")
    assert run(["synth", "--config", str(p.config), "--out", str(p.synth_dir)]) == 0
    assert run(["train", *p.data_flags(), "--out", str(p.train_dir)]) == 0
    return p
