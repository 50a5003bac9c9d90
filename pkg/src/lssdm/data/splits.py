"""Temporal train/valid/test split over windows."""

import math

from lssdm.domain.errors import SplitError
from lssdm.domain.models import Dataset

DEFAULT_FRACTIONS = (0.7, 0.1, 0.2)
_FLOOR_SLACK = 1e-9


def split_sizes(count: int, fractions: tuple[float, float, float] = DEFAULT_FRACTIONS) -> tuple[int, int, int]:
    """Window counts per part: valid and test get ``max(1, floor(frac * count))``, train the rest.

    Raises:
        SplitError: If the fractions are invalid or any part would be empty.

    """
    if any(f < 0 for f in fractions) or not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        msg = f"Split fractions must be non-negative and sum to 1, got {fractions}"
        raise SplitError(msg)
    # slack keeps e.g. 0.1 * 10 from flooring to 0
    n_valid = max(1, math.floor(fractions[1] * count + _FLOOR_SLACK))
    n_test = max(1, math.floor(fractions[2] * count + _FLOOR_SLACK))
    n_train = count - n_valid - n_test
    if n_train < 1:
        msg = f"{count} windows are too few for a train/valid/test split"
        raise SplitError(msg)
    return n_train, n_valid, n_test


def _subset(ds: Dataset, start: int, stop: int) -> Dataset:
    windows = ds.windows[start:stop]
    return Dataset(
        windows=windows,
        sensor_names=ds.sensor_names,
        normalization=ds.normalization,
        held_out=ds.held_out.restricted({w.index for w in windows}),
        time_index=ds.time_index[start * ds.n_steps : stop * ds.n_steps] if ds.time_index else (),
    )


def split(ds: Dataset, fractions: tuple[float, float, float] = DEFAULT_FRACTIONS) -> tuple[Dataset, Dataset, Dataset]:
    """Contiguous, disjoint window ranges in temporal order.

    Each part keeps only the held-out truth of its own windows.
    """
    n_train, n_valid, _ = split_sizes(len(ds), fractions)
    return (
        _subset(ds, 0, n_train),
        _subset(ds, n_train, n_train + n_valid),
        _subset(ds, n_train + n_valid, len(ds)),
    )
