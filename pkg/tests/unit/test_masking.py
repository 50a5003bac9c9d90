"""Tests for missing-value simulation."""

import numpy as np
import pytest
import torch

from lssdm.config import MaskSpec
from lssdm.data.csv_io import windows_from_series
from lssdm.data.masking import apply_mask_file, eval_triples, simulate_missing
from lssdm.domain.enums import MaskKind
from lssdm.domain.errors import MaskSpecError
from lssdm.domain.models import Dataset
from tests.conftest import unit_normalization


def _large_dataset() -> Dataset:
    values = np.random.default_rng(0).uniform(size=(10, 1000))
    windows = windows_from_series(values, np.ones_like(values, dtype=bool), 100)
    return Dataset(windows=windows, sensor_names=tuple(f"s{i}" for i in range(10)), normalization=unit_normalization(10))


class TestSimulateMissing:
    """Tests for simulate_missing."""

    def test_rate_zero_is_identity(self, dataset: Dataset) -> None:
        """No entry moves at rate 0."""
        out = simulate_missing(dataset, MaskSpec(rate=0.0))
        assert len(out.held_out) == 0
        for a, b in zip(dataset.windows, out.windows, strict=True):
            assert torch.equal(a.values, b.values)
            assert torch.equal(a.observed_mask, b.observed_mask)

    def test_rate_one_moves_everything(self, dataset: Dataset) -> None:
        """Every observed entry becomes an eval entry at rate 1."""
        out = simulate_missing(dataset, MaskSpec(rate=1.0))
        for window in out.windows:
            assert not bool(window.observed_mask.any())
            assert bool((window.eval_mask == 1).all())

    def test_half_rate_concentrates(self) -> None:
        """At rate 0.5 over 10,000 entries the eval count is near 5,000."""
        out = simulate_missing(_large_dataset(), MaskSpec(rate=0.5, seed=4))
        assert 4700 < len(out.held_out) < 5300

    def test_truth_recorded_and_values_zeroed(self, dataset: Dataset, masked: Dataset) -> None:
        """Moved entries keep their truth in the store and a zero placeholder in the window."""
        (w, s, t) = next(iter(masked.held_out))
        assert masked.held_out[(w, s, t)] == float(dataset.windows[w].values[s, t])
        assert float(masked.windows[w].values[s, t]) == 0.0
        assert float(masked.windows[w].observed_mask[s, t]) == 0.0

    def test_masks_partition(self, masked: Dataset) -> None:
        """No entry is both observed and held out."""
        for window in masked.windows:
            assert not bool(((window.observed_mask + window.eval_mask) > 1).any())

    def test_seeded(self, dataset: Dataset) -> None:
        """Same spec, same selection."""
        spec = MaskSpec(rate=0.3, seed=8)
        assert eval_triples(simulate_missing(dataset, spec)) == eval_triples(simulate_missing(dataset, spec))

    def test_block_mask_makes_runs(self, dataset: Dataset) -> None:
        """Block masks select contiguous spans of at least the minimum length."""
        spec = MaskSpec(kind=MaskKind.BLOCK, rate=0.2, block_min_len=3, block_max_len=4, seed=2)
        out = simulate_missing(dataset, spec)
        row = out.windows[0].eval_mask[0].tolist()
        runs = [len(r) for r in "".join(str(int(v)) for v in row).split("0") if r]
        assert runs
        assert min(runs) >= 3

    def test_block_stops_once_rate_reached(self, dataset: Dataset) -> None:
        """Per sensor, spans are added until the rate is met and not one span longer."""
        spec = MaskSpec(kind=MaskKind.BLOCK, rate=0.3, block_min_len=2, block_max_len=3, seed=5)
        out = simulate_missing(dataset, spec)
        for before, after in zip(dataset.windows, out.windows, strict=True):
            observed = before.observed_mask.sum(dim=1)
            moved = after.eval_mask.sum(dim=1)
            for s in range(before.n_sensors):
                target = spec.rate * float(observed[s])
                assert float(moved[s]) >= target
                assert float(moved[s]) - spec.block_max_len < target

    def test_block_longer_than_window(self, dataset: Dataset) -> None:
        """A block that cannot fit the window is rejected."""
        spec = MaskSpec(kind=MaskKind.BLOCK, rate=0.2, block_min_len=2, block_max_len=dataset.n_steps + 1)
        with pytest.raises(MaskSpecError):
            simulate_missing(dataset, spec)

    def test_rate_outside_unit_interval(self, dataset: Dataset) -> None:
        """An unvalidated spec with a bad rate is still rejected."""
        with pytest.raises(MaskSpecError):
            simulate_missing(dataset, MaskSpec.model_construct(kind=MaskKind.POINT, rate=1.5, seed=0))


class TestApplyMaskFile:
    """Tests for apply_mask_file."""

    def test_moves_listed_entries(self, dataset: Dataset) -> None:
        """Exactly the listed triples become eval entries."""
        out = apply_mask_file(dataset, [(0, 1, 2), (3, 0, 0)])
        assert eval_triples(out) == [(0, 1, 2), (3, 0, 0)]

    def test_out_of_range(self, dataset: Dataset) -> None:
        """A triple outside the dataset is rejected."""
        with pytest.raises(MaskSpecError):
            apply_mask_file(dataset, [(0, dataset.n_sensors, 0)])

    def test_already_missing_entry(self, masked: Dataset) -> None:
        """An entry that is not observed cannot be masked again."""
        key = next(iter(masked.held_out))
        with pytest.raises(MaskSpecError):
            apply_mask_file(masked, [key])
