"""Synthetic ground-truth generator.

Sensors sit on a ring (each linked to its nearest neighbours) with a few
random chords. Each sensor emits a level plus a mixture of sinusoids whose
phases are smoothed over the graph, plus Gaussian noise. The result is fully
observed, so every simulated-missing entry has a known truth.
"""

import math
from collections.abc import Sequence

import numpy as np
import structlog
import torch

from lssdm.data.csv_io import RawSeries, fit_normalization, windows_from_series
from lssdm.domain.enums import LaplacianKind
from lssdm.domain.errors import GeneratorSpecError
from lssdm.domain.models import DTYPE, Dataset
from lssdm.graph.laplacian import Graph, build_laplacian
from lssdm.numerics.rng import RngStream

logger = structlog.get_logger()

DEFAULT_PERIODS = (24.0, 7.0)


def ring_adjacency(n_sensors: int, graph_degree: int, n_chords: int, rng: RngStream) -> np.ndarray:
    """Ring with ``max(1, graph_degree // 2)`` neighbours per side plus ``n_chords`` random chords."""
    adjacency = np.zeros((n_sensors, n_sensors))
    reach = max(1, graph_degree // 2)
    for i in range(n_sensors):
        for k in range(1, reach + 1):
            j = (i + k) % n_sensors
            if j != i:
                adjacency[i, j] = adjacency[j, i] = 1.0
    free = [(i, j) for i in range(n_sensors) for j in range(i + 1, n_sensors) if adjacency[i, j] == 0]
    if free and n_chords:
        order = rng.permutation(len(free))
        for pick in order[:n_chords]:
            i, j = free[int(pick)]
            adjacency[i, j] = adjacency[j, i] = 1.0
    return adjacency


def smooth_over_graph(values: np.ndarray, adjacency: np.ndarray) -> np.ndarray:
    """One step of neighbourhood averaging: ``(v + A v) / (1 + deg)``."""
    return (values + adjacency @ values) / (1.0 + adjacency.sum(axis=1))


def _check(
    n_sensors: int,
    n_steps: int,
    n_windows: int,
    graph_degree: int,
    noise_sd: float,
    periods: Sequence[float],
    amplitudes: Sequence[float],
) -> None:
    problems = []
    if n_sensors < 2:
        problems.append(f"n_sensors={n_sensors} (need >= 2)")
    if n_steps < 4:
        problems.append(f"n_steps={n_steps} (need >= 4)")
    if n_windows < 1:
        problems.append(f"n_windows={n_windows} (need >= 1)")
    if graph_degree < 1:
        problems.append(f"graph_degree={graph_degree} (need >= 1)")
    if noise_sd < 0:
        problems.append(f"noise_sd={noise_sd} (need >= 0)")
    if not periods or any(p <= 0 for p in periods):
        problems.append(f"periods={list(periods)} (need positive values)")
    if len(amplitudes) != len(periods):
        problems.append(f"{len(amplitudes)} amplitudes for {len(periods)} periods")
    if problems:
        raise GeneratorSpecError("Invalid generator parameters: " + "; ".join(problems))


def synth_generate(
    n_sensors: int,
    n_steps: int,
    n_windows: int,
    graph_degree: int,
    noise_sd: float,
    rng: RngStream,
    periods: Sequence[float] = DEFAULT_PERIODS,
    amplitudes: Sequence[float] | None = None,
    n_chords: int | None = None,
) -> tuple[Dataset, Graph]:
    """Generate a fully observed, normalized dataset and its sensor graph.

    Args:
        n_sensors: Number of sensors (graph nodes), at least 2.
        n_steps: Window length D, at least 4.
        n_windows: Number of consecutive windows.
        graph_degree: Ring neighbours per node.
        noise_sd: Standard deviation of the additive noise.
        rng: Random stream; identical streams give identical output.
        periods: Sinusoid periods in time steps.
        amplitudes: Sinusoid amplitudes; defaults to ``1 / (k + 1)``.
        n_chords: Random chords on top of the ring; defaults to ``n_sensors // 4``.

    Raises:
        GeneratorSpecError: On out-of-range parameters.

    """
    amplitudes = tuple(amplitudes) if amplitudes is not None else tuple(1.0 / (k + 1) for k in range(len(periods)))
    _check(n_sensors, n_steps, n_windows, graph_degree, noise_sd, periods, amplitudes)
    n_chords = n_sensors // 4 if n_chords is None else n_chords

    adjacency = ring_adjacency(n_sensors, graph_degree, n_chords, rng.split(0))
    signal_rng = rng.split(1)
    levels = signal_rng.uniform(0.0, 1.0, (n_sensors,))
    phases = smooth_over_graph(signal_rng.uniform(0.0, 2.0 * math.pi, (n_sensors,)), adjacency)

    total = n_steps * n_windows
    t = np.arange(total, dtype=np.float64)
    values = np.repeat(levels[:, None], total, axis=1)
    for k, (period, amplitude) in enumerate(zip(periods, amplitudes, strict=True)):
        values += amplitude * np.sin(2.0 * math.pi * t[None, :] / period + (k + 1) * phases[:, None])
    if noise_sd > 0:
        values += noise_sd * rng.split(2).normal((n_sensors, total))

    names = tuple(f"s{i}" for i in range(n_sensors))
    raw = RawSeries(
        time_index=tuple(str(i) for i in range(total)),
        sensor_names=names,
        values=values,
        observed=np.ones_like(values, dtype=bool),
    )
    normalization = fit_normalization(raw)
    windows = windows_from_series(normalization.normalize(values), raw.observed, n_steps)
    graph = build_laplacian(torch.from_numpy(adjacency).to(DTYPE), LaplacianKind.LITERAL)
    logger.info(
        "Synthetic dataset generated",
        sensors=n_sensors,
        windows=n_windows,
        edges=int(adjacency.sum() // 2),
        seed=rng.seed,
    )
    return Dataset(windows=windows, sensor_names=names, normalization=normalization, time_index=raw.time_index), graph
