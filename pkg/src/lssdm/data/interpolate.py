"""Linear-interpolation coarse fill along the time axis."""

import numpy as np
import torch

from lssdm.domain.models import DTYPE, TimeSeriesWindow

ALL_MISSING_FILL = 0.5


def interpolate_rows(values: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """Fill non-observed entries of each row from its observed neighbours.

    Interior gaps are filled linearly; leading and trailing gaps take the
    nearest observed value; rows without any observation become 0.5.
    """
    out = np.array(values, dtype=np.float64, copy=True)
    steps = np.arange(out.shape[-1])
    for row in range(out.shape[0]):
        seen = observed[row].astype(bool)
        if seen.all():
            continue
        if not seen.any():
            out[row] = ALL_MISSING_FILL
            continue
        # np.interp clamps to the end points outside the observed range
        out[row, ~seen] = np.interp(steps[~seen], steps[seen], out[row, seen])
    return out


def linear_interpolate(w: TimeSeriesWindow) -> torch.Tensor:
    """Coarse fill X~ of a window: observations kept, everything else interpolated."""
    filled = interpolate_rows(w.values.numpy(), w.observed_mask.numpy())
    return torch.from_numpy(filled).to(DTYPE)


def interpolation_baseline(w: TimeSeriesWindow) -> torch.Tensor:
    """Deterministic baseline prediction for every entry of ``w``."""
    return linear_interpolate(w)


def interpolate_batch(values: torch.Tensor, observed: torch.Tensor) -> torch.Tensor:
    """:func:`linear_interpolate` over a ``(B, N, D)`` stack."""
    return torch.stack(
        [
            torch.from_numpy(interpolate_rows(v.numpy(), m.numpy())).to(DTYPE)
            for v, m in zip(values.detach(), observed.detach(), strict=True)
        ]
    )
