"""MAE and the sample-based CRPS."""

import numpy as np
import torch

from lssdm.domain.errors import MetricError, ShapeError


def mae(point_pred: torch.Tensor, truth: torch.Tensor, mask: torch.Tensor) -> float:
    """Mean ``|pred - truth|`` over entries where ``mask`` is 1.

    Raises:
        ShapeError: If the shapes differ.
        MetricError: If the mask selects nothing.

    """
    if not point_pred.shape == truth.shape == mask.shape:
        msg = f"Shapes differ: pred {tuple(point_pred.shape)}, truth {tuple(truth.shape)}, mask {tuple(mask.shape)}"
        raise ShapeError(msg)
    selected = mask > 0
    if not bool(selected.any()):
        msg = "MAE over an empty mask is undefined"
        raise MetricError(msg)
    return float((point_pred - truth).abs()[selected].mean())


def _as_samples(samples: np.ndarray | torch.Tensor | list[float]) -> np.ndarray:
    values = samples.detach().cpu().numpy() if isinstance(samples, torch.Tensor) else np.asarray(samples, dtype=np.float64)
    values = values.reshape(-1).astype(np.float64, copy=False)
    if values.size == 0:
        msg = "CRPS of an empty sample set is undefined"
        raise MetricError(msg)
    return values


def crps_samples(samples: np.ndarray | torch.Tensor | list[float], y: float) -> float:
    """Empirical CRPS ``mean|x_i - y| - sum_ij |x_i - x_j| / (2 S^2)``, O(S log S).

    For sorted samples the pair sum equals ``2 * sum_i (2i - S - 1) x_(i)``
    (1-based ``i``), which gives the second term without the double loop.
    Cancellation can leave a tiny negative value for a point mass at ``y``, so
    the result is clamped at 0.
    """
    x = np.sort(_as_samples(samples))
    s = x.size
    ranks = np.arange(1, s + 1, dtype=np.float64)
    spread = float(np.sum((2.0 * ranks - s - 1.0) * x)) / (s * s)
    return max(float(np.mean(np.abs(x - y))) - spread, 0.0)


def crps_brute(samples: np.ndarray | torch.Tensor | list[float], y: float) -> float:
    """Literal O(S^2) evaluation of the same estimator."""
    x = _as_samples(samples)
    s = x.size
    pairs = 0.0
    for xi in x:
        for xj in x:
            pairs += abs(xi - xj)
    return float(sum(abs(xi - y) for xi in x)) / s - pairs / (2.0 * s * s)


def crps_ensemble(samples: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Per-entry CRPS for a ``(S, ...)`` sample stack against ``truth`` of shape ``(...)``.

    Vectorized sorted form of :func:`crps_samples`.
    """
    if samples.dim() < 1 or samples.shape[0] == 0:
        msg = "CRPS of an empty sample set is undefined"
        raise MetricError(msg)
    if samples.shape[1:] != truth.shape:
        msg = f"Samples {tuple(samples.shape)} do not match truth {tuple(truth.shape)}"
        raise ShapeError(msg)
    s = samples.shape[0]
    ordered, _ = torch.sort(samples, dim=0)
    ranks = torch.arange(1, s + 1, dtype=samples.dtype).reshape(-1, *([1] * truth.dim()))
    spread = ((2.0 * ranks - s - 1.0) * ordered).sum(dim=0) / (s * s)
    return ((samples - truth).abs().mean(dim=0) - spread).clamp_min(0.0)
