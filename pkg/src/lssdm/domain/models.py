"""Domain models - immutable dataclasses over float64 tensors."""

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
import torch

from lssdm.domain.errors import ShapeError

DTYPE = torch.float64

HeldOutKey = tuple[int, int, int]


@dataclass(frozen=True, slots=True, eq=False)
class TimeSeriesWindow:
    """One N x D window: N sensors (rows) by D time steps (columns).

    ``observed_mask`` is M (1 = usable for conditioning and training),
    ``eval_mask`` marks simulated-missing entries whose truth lives in a
    :class:`HeldOutStore`. Entries with both masks at zero are originally
    missing. Values at non-observed positions are 0 placeholders.
    """

    index: int
    values: torch.Tensor
    observed_mask: torch.Tensor
    eval_mask: torch.Tensor
    graph_id: str = "default"

    def __post_init__(self) -> None:
        """Validate shapes and the mask partition."""
        if self.values.dim() != 2:
            msg = f"Window values must be 2-D (N x D), got shape {tuple(self.values.shape)}"
            raise ShapeError(msg)
        for name in ("observed_mask", "eval_mask"):
            mask = getattr(self, name)
            if mask.shape != self.values.shape:
                msg = f"{name} shape {tuple(mask.shape)} != values shape {tuple(self.values.shape)}"
                raise ShapeError(msg)
        if bool(((self.observed_mask + self.eval_mask) > 1).any()):
            msg = f"Window {self.index}: an entry is both observed and held out"
            raise ShapeError(msg)

    @property
    def n_sensors(self) -> int:
        """Number of sensors N."""
        return int(self.values.shape[0])

    @property
    def n_steps(self) -> int:
        """Number of time steps D."""
        return int(self.values.shape[1])

    @property
    def conditional(self) -> torch.Tensor:
        """Observed features X_co = X * M."""
        return self.values * self.observed_mask

    @property
    def n_observed(self) -> int:
        """Count of observed entries."""
        return int(self.observed_mask.sum().item())

    @property
    def n_missing(self) -> int:
        """Count of non-observed entries (original plus simulated)."""
        return self.values.numel() - self.n_observed


@dataclass(frozen=True, slots=True, eq=False)
class Normalization:
    """Per-sensor min-max pairs mapping raw units onto [0, 1]."""

    mins: np.ndarray
    maxs: np.ndarray

    @property
    def spans(self) -> np.ndarray:
        """Per-sensor ``max - min``."""
        return self.maxs - self.mins

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        """Map raw values (sensor axis first) onto [0, 1]."""
        return (raw - self.mins[:, None]) / self.spans[:, None]

    def denormalize(self, scaled: np.ndarray) -> np.ndarray:
        """Map normalized values (sensor axis second to last) back to raw units."""
        return scaled * self.spans[:, None] + self.mins[:, None]


class HeldOutStore(Mapping[HeldOutKey, float]):
    """Ground truth of simulated-missing entries keyed by (window, sensor, step).

    Kept apart from :class:`TimeSeriesWindow` so training code paths, which only
    ever receive windows, have no route to the held-out values.
    """

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[HeldOutKey, float] | None = None) -> None:
        """Initialize the store from a key -> normalized value mapping."""
        self._values: Mapping[HeldOutKey, float] = MappingProxyType(dict(values or {}))

    def __getitem__(self, key: HeldOutKey) -> float:
        """Return the held-out value for ``key``."""
        return self._values[key]

    def __iter__(self) -> Iterator[HeldOutKey]:
        """Iterate keys in insertion order."""
        return iter(self._values)

    def __len__(self) -> int:
        """Number of held-out entries."""
        return len(self._values)

    def merged(self, other: "HeldOutStore") -> "HeldOutStore":
        """Return a store holding the entries of both stores."""
        return HeldOutStore({**self._values, **dict(other)})

    def restricted(self, window_indices: set[int]) -> "HeldOutStore":
        """Return the entries belonging to ``window_indices``."""
        return HeldOutStore({k: v for k, v in self._values.items() if k[0] in window_indices})

    def poisoned(self, sentinel: float = 1e30) -> "HeldOutStore":
        """Return a copy with every value replaced by ``sentinel``."""
        return HeldOutStore(dict.fromkeys(self._values, sentinel))

    def dense(self, window: TimeSeriesWindow) -> torch.Tensor:
        """Scatter the window's held-out values into an N x D tensor (zeros elsewhere)."""
        out = torch.zeros_like(window.values)
        for (w, s, t), value in self._values.items():
            if w == window.index:
                out[s, t] = value
        return out


@dataclass(frozen=True, slots=True, eq=False)
class Dataset:
    """Ordered windows sharing N and D, with normalization and held-out truth."""

    windows: tuple[TimeSeriesWindow, ...]
    sensor_names: tuple[str, ...]
    normalization: Normalization
    held_out: HeldOutStore = field(default_factory=HeldOutStore)
    time_index: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Validate that all windows share N and D."""
        shapes = {tuple(w.values.shape) for w in self.windows}
        if len(shapes) > 1:
            msg = f"Windows have differing shapes: {sorted(shapes)}"
            raise ShapeError(msg)
        if self.windows and self.windows[0].n_sensors != len(self.sensor_names):
            msg = f"{len(self.sensor_names)} sensor names for {self.windows[0].n_sensors} sensors"
            raise ShapeError(msg)

    @property
    def n_sensors(self) -> int:
        """Number of sensors N."""
        return len(self.sensor_names)

    @property
    def n_steps(self) -> int:
        """Window length D."""
        return self.windows[0].n_steps if self.windows else 0

    def __len__(self) -> int:
        """Number of windows."""
        return len(self.windows)


@dataclass(frozen=True, slots=True, eq=False)
class LatentGaussian:
    """Per-node diagonal Gaussian: mean u and log-variance log(Sigma)."""

    mean: torch.Tensor
    log_var: torch.Tensor

    def __post_init__(self) -> None:
        """Validate that both moments share a shape."""
        if self.mean.shape != self.log_var.shape:
            msg = f"mean shape {tuple(self.mean.shape)} != log_var shape {tuple(self.log_var.shape)}"
            raise ShapeError(msg)

    @property
    def variance(self) -> torch.Tensor:
        """Diagonal covariance exp(log_var)."""
        return self.log_var.exp()


@dataclass(frozen=True, slots=True)
class TraceRow:
    """Summary of the sampler state at one reverse step."""

    t: int
    mean_abs: float
    std: float


@dataclass(frozen=True, slots=True, eq=False)
class ImputationResult:
    """Imputation samples for one window (normalized units)."""

    window_index: int
    samples: torch.Tensor
    trace: tuple[TraceRow, ...] = ()

    @property
    def n_samples(self) -> int:
        """Number of samples S."""
        return int(self.samples.shape[0])

    def point(self, median: bool = False) -> torch.Tensor:
        """Per-entry sample mean (or median) as an N x D tensor."""
        if median:
            return torch.quantile(self.samples, 0.5, dim=0)
        return self.samples.mean(dim=0)
