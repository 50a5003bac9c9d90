"""Missing-value simulation.

Moved entries leave the observed set (``observed_mask = 0``, value zeroed) and
enter the evaluation set (``eval_mask = 1``); their normalized truth goes to
the dataset's :class:`HeldOutStore`, which training code never receives.
"""

from collections.abc import Iterable

import numpy as np
import structlog
import torch

from lssdm.config import MaskSpec
from lssdm.domain.enums import MaskKind
from lssdm.domain.errors import MaskSpecError
from lssdm.domain.models import DTYPE, Dataset, HeldOutKey, HeldOutStore, TimeSeriesWindow
from lssdm.numerics.rng import RngStream

logger = structlog.get_logger()


def _check_spec(spec: MaskSpec, n_steps: int) -> None:
    if not 0.0 <= spec.rate <= 1.0:
        msg = f"Mask rate must lie in [0, 1], got {spec.rate}"
        raise MaskSpecError(msg)
    if spec.kind == MaskKind.BLOCK:
        if not 1 <= spec.block_min_len <= spec.block_max_len:
            msg = f"Need 1 <= block_min_len <= block_max_len, got {spec.block_min_len}, {spec.block_max_len}"
            raise MaskSpecError(msg)
        if spec.block_max_len > n_steps:
            msg = f"block_max_len={spec.block_max_len} exceeds the window length {n_steps}"
            raise MaskSpecError(msg)


def point_mask(observed: np.ndarray, rate: float, rng: RngStream) -> np.ndarray:
    """Each observed entry independently selected with probability ``rate``."""
    return observed & rng.bernoulli(rate, observed.shape)


def block_mask(observed: np.ndarray, spec: MaskSpec, rng: RngStream) -> np.ndarray:
    """Per sensor, random contiguous spans until ``rate`` of its observed entries are selected."""
    n_sensors, n_steps = observed.shape
    selected = np.zeros_like(observed)
    for s in range(n_sensors):
        row_rng = rng.split(s)
        seen = observed[s]
        n_seen = int(seen.sum())
        target = spec.rate * n_seen
        moved = 0
        while moved < target and moved < n_seen:
            length = row_rng.integers(spec.block_min_len, spec.block_max_len + 1)
            start = row_rng.integers(0, n_steps - length + 1)
            selected[s, start : start + length] |= seen[start : start + length]
            moved = int(selected[s].sum())
    return selected


def _move(window: TimeSeriesWindow, selected: np.ndarray) -> tuple[TimeSeriesWindow, dict[HeldOutKey, float]]:
    values = window.values.numpy()
    truth = {(window.index, int(s), int(t)): float(values[s, t]) for s, t in np.argwhere(selected)}
    moved = torch.from_numpy(selected.astype(np.float64)).to(DTYPE)
    updated = TimeSeriesWindow(
        index=window.index,
        values=window.values * (1.0 - moved),
        observed_mask=window.observed_mask * (1.0 - moved),
        eval_mask=window.eval_mask + moved,
        graph_id=window.graph_id,
    )
    return updated, truth


def _rebuild(ds: Dataset, windows: list[TimeSeriesWindow], truth: dict[HeldOutKey, float]) -> Dataset:
    return Dataset(
        windows=tuple(windows),
        sensor_names=ds.sensor_names,
        normalization=ds.normalization,
        held_out=ds.held_out.merged(HeldOutStore(truth)),
        time_index=ds.time_index,
    )


def simulate_missing(ds: Dataset, spec: MaskSpec, rng: RngStream | None = None) -> Dataset:
    """Move a random subset of observed entries into the evaluation set.

    Args:
        ds: Source dataset.
        spec: Mask kind, rate and block lengths.
        rng: Stream to draw from; defaults to one keyed by ``spec.seed``.
            Window ``w`` always uses ``rng.split(w.index)``.

    Raises:
        MaskSpecError: If the rate is outside [0, 1] or a block length does
            not fit the window.

    """
    _check_spec(spec, ds.n_steps)
    rng = rng or RngStream(spec.seed)
    windows: list[TimeSeriesWindow] = []
    truth: dict[HeldOutKey, float] = {}
    for window in ds.windows:
        observed = window.observed_mask.numpy().astype(bool)
        window_rng = rng.split(window.index)
        if spec.rate == 0.0:
            windows.append(window)
            continue
        if spec.kind == MaskKind.POINT:
            selected = point_mask(observed, spec.rate, window_rng)
        else:
            selected = block_mask(observed, spec, window_rng)
        updated, moved = _move(window, selected)
        windows.append(updated)
        truth.update(moved)
    logger.info("Missing values simulated", kind=str(spec.kind), rate=spec.rate, held_out=len(truth))
    return _rebuild(ds, windows, truth)


def apply_mask_file(ds: Dataset, triples: Iterable[HeldOutKey]) -> Dataset:
    """Move exactly the listed ``(window, sensor, step)`` entries into the evaluation set.

    Raises:
        MaskSpecError: If a triple is out of range or names a non-observed entry.

    """
    by_window: dict[int, list[tuple[int, int]]] = {}
    positions = {w.index: i for i, w in enumerate(ds.windows)}
    for w, s, t in triples:
        if w not in positions or not 0 <= s < ds.n_sensors or not 0 <= t < ds.n_steps:
            msg = f"Mask entry ({w}, {s}, {t}) is outside the dataset"
            raise MaskSpecError(msg)
        by_window.setdefault(w, []).append((s, t))

    windows: list[TimeSeriesWindow] = []
    truth: dict[HeldOutKey, float] = {}
    for window in ds.windows:
        entries = by_window.get(window.index)
        if not entries:
            windows.append(window)
            continue
        selected = np.zeros((ds.n_sensors, ds.n_steps), dtype=bool)
        observed = window.observed_mask.numpy().astype(bool)
        for s, t in entries:
            if not observed[s, t]:
                msg = f"Mask entry ({window.index}, {s}, {t}) is not an observed value"
                raise MaskSpecError(msg)
            selected[s, t] = True
        updated, moved = _move(window, selected)
        windows.append(updated)
        truth.update(moved)
    return _rebuild(ds, windows, truth)


def eval_triples(ds: Dataset) -> list[HeldOutKey]:
    """All ``(window, sensor, step)`` entries with ``eval_mask = 1``, sorted."""
    keys: list[HeldOutKey] = []
    for window in ds.windows:
        keys.extend((window.index, int(s), int(t)) for s, t in torch.nonzero(window.eval_mask > 0).tolist())
    return sorted(keys)
