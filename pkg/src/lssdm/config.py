"""Configuration management using Pydantic Settings.

Two layers: :class:`Settings` holds process-level knobs read from ``LSSDM_*``
environment variables; :class:`RunConfig` is the full, validated description of
one pipeline run, merged from a TOML file and command-line overrides.
"""

import tomllib
from functools import lru_cache
from pathlib import Path
from typing import Any, Self, cast

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from lssdm.domain.enums import HeadActivation, LaplacianKind, MaskKind, PointEstimate, ScheduleKind
from lssdm.domain.errors import ConfigurationError


class Settings(BaseSettings):
    """Process settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="LSSDM_",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = Field(default="INFO", description="Logging level")
    log_json: bool = Field(default=False, description="Use JSON logging format")

    # Torch intra-op threads; 1 keeps reductions bit-reproducible
    torch_threads: int = Field(default=1, ge=1, description="torch.set_num_threads value")


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return cast("Settings", Settings.__call__())


class _Section(BaseModel):
    """Base for config sections: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class SynthConfig(_Section):
    """Synthetic dataset generator parameters."""

    n_sensors: int = Field(default=8, description="Sensors (graph nodes)")
    n_steps: int = Field(default=32, description="Window length D")
    n_windows: int = Field(default=500, ge=1, description="Number of windows")
    graph_degree: int = Field(default=2, ge=1, description="Ring neighbours per node")
    n_chords: int | None = Field(default=None, ge=0, description="Random chords; default n_sensors // 4")
    noise_sd: float = Field(default=0.05, ge=0.0, description="Gaussian noise standard deviation")
    periods: tuple[float, ...] = Field(default=(24.0, 7.0), min_length=1, description="Sinusoid periods")
    amplitudes: tuple[float, ...] | None = Field(default=None, description="Sinusoid amplitudes; default 1/(k+1)")


class DataConfig(_Section):
    """Dataset, graph and windowing inputs."""

    dataset: Path | None = Field(default=None, description="Dataset CSV (time, sensor columns)")
    graph: Path | None = Field(default=None, description="Graph JSON with an 'edges' list")
    adjacency: Path | None = Field(default=None, description="Adjacency CSV (N x N), alternative to graph")
    mask_file: Path | None = Field(default=None, description="Fixed eval mask (window,sensor,step) CSV")
    window_len: int = Field(default=32, ge=2, description="Non-overlapping window length D")
    split: tuple[float, float, float] = Field(default=(0.7, 0.1, 0.2), description="Train/valid/test fractions")


class MaskSpec(_Section):
    """Missing-value simulation spec."""

    kind: MaskKind = MaskKind.POINT
    rate: float = Field(default=0.25, ge=0.0, le=1.0)
    block_min_len: int = Field(default=4, ge=1)
    block_max_len: int = Field(default=12, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def check_block_lengths(self) -> Self:
        """Require ``block_min_len <= block_max_len``."""
        if self.block_min_len > self.block_max_len:
            msg = f"block_min_len={self.block_min_len} exceeds block_max_len={self.block_max_len}"
            raise ValueError(msg)
        return self


class ModelConfig(_Section):
    """Architecture hyperparameters of the three networks."""

    latent_dim: int = Field(default=16, ge=1, description="Latent width E")
    hidden_dim: int = Field(default=64, ge=1, description="Encoder hidden width F")
    n_heads: int = Field(default=8, ge=1, description="Decoder attention heads")
    positional_encoding: bool = Field(default=False, description="Sinusoidal sensor-index encoding in the decoder")
    head_activation: HeadActivation = HeadActivation.FAITHFUL
    laplacian: LaplacianKind = LaplacianKind.LITERAL
    channels: int = Field(default=64, ge=1, description="Noise predictor channel width")
    n_blocks: int = Field(default=4, ge=1, description="Noise predictor residual blocks K")
    denoiser_heads: int = Field(default=8, ge=1, description="Noise predictor attention heads")
    step_embedding_dim: int = Field(default=128, ge=2, description="Sinusoidal diffusion-step embedding")

    @model_validator(mode="after")
    def check_heads(self) -> Self:
        """Require head counts to divide their model widths."""
        if self.latent_dim % self.n_heads:
            msg = f"n_heads={self.n_heads} does not divide latent_dim={self.latent_dim}"
            raise ValueError(msg)
        if self.channels % self.denoiser_heads:
            msg = f"denoiser_heads={self.denoiser_heads} does not divide channels={self.channels}"
            raise ValueError(msg)
        if self.step_embedding_dim % 2:
            msg = "step_embedding_dim must be even"
            raise ValueError(msg)
        return self


class DiffusionConfig(_Section):
    """Noise schedule parameters (CSDI defaults)."""

    steps: int = Field(default=50, ge=1, description="Diffusion steps T")
    beta_min: float = Field(default=1e-4, gt=0.0, lt=1.0)
    beta_max: float = Field(default=0.5, gt=0.0, lt=1.0)
    schedule: ScheduleKind = ScheduleKind.QUADRATIC

    @model_validator(mode="after")
    def check_betas(self) -> Self:
        """Require ``beta_min <= beta_max``."""
        if self.beta_min > self.beta_max:
            msg = f"beta_min={self.beta_min} exceeds beta_max={self.beta_max}"
            raise ValueError(msg)
        return self


class TrainConfig(_Section):
    """Optimization parameters."""

    epochs: int = Field(default=200, ge=0)
    batch_size: int = Field(default=16, ge=1)
    learning_rate: float = Field(default=1e-4, gt=0.0)
    joint_step: bool = Field(default=False, description="One Adam step on L1 + L2 instead of two")
    valid_samples: int = Field(default=8, ge=1, description="Sampler draws per validation window")
    log_timing: bool = Field(default=False, description="Write wall-clock seconds into the epoch log")


class EvalConfig(_Section):
    """Sampling and scoring parameters."""

    n_samples: int = Field(default=100, ge=1)
    point: PointEstimate = PointEstimate.MEAN
    chunk_size: int = Field(default=50, ge=1, description="Sample rows per sampler batch")
    entry_csv: bool = Field(default=True, description="Write the per-entry CSV next to the report")
    latent_rates: tuple[float, ...] = Field(default=(0.0, 0.5))
    sweep_rates: tuple[float, ...] = Field(default=(0.1, 0.25, 0.5))


class RunConfig(BaseSettings):
    """Validated configuration of one pipeline run."""

    model_config = SettingsConfigDict(
        env_prefix="LSSDM_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="forbid",
        frozen=True,
    )

    seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)
    out_dir: Path | None = None
    checkpoint: Path | None = None
    trace: bool = False

    synth: SynthConfig = Field(default_factory=SynthConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    mask: MaskSpec = Field(default_factory=MaskSpec)
    model: ModelConfig = Field(default_factory=ModelConfig)
    diffusion: DiffusionConfig = Field(default_factory=DiffusionConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    def echo(self) -> dict[str, Any]:
        """JSON-ready dump used as the config echo in every output directory."""
        return self.model_dump(mode="json")


def _coerce(raw: str) -> Any:
    """Parse a ``--set`` value with TOML scalar/array syntax, falling back to a string."""
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def parse_overrides(assignments: list[str]) -> dict[str, Any]:
    """Turn ``section.key=value`` strings into a nested dict."""
    nested: dict[str, Any] = {}
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            msg = f"Override '{item}' is not of the form key=value"
            raise ConfigurationError(msg)
        *sections, leaf = key.strip().split(".")
        node = nested
        for section in sections:
            node = node.setdefault(section, {})
        node[leaf] = _coerce(raw.strip())
    return nested


def merge_overrides(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge ``override`` into a copy of ``base``."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_overrides(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(path: Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Load a RunConfig from a TOML file with overrides on top.

    Precedence: overrides > file > ``LSSDM_<SECTION>__<KEY>`` environment > defaults.

    Raises:
        ConfigurationError: If the file is missing or not valid TOML.
        pydantic.ValidationError: If any field fails validation or is unknown.

    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            msg = f"Config file not found: {path}"
            raise ConfigurationError(msg) from e
        except tomllib.TOMLDecodeError as e:
            msg = f"Config file {path} is not valid TOML: {e}"
            raise ConfigurationError(msg) from e
    merged = merge_overrides(data, overrides or {})
    return RunConfig(**merged)
