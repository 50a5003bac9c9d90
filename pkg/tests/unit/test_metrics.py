"""Tests for MAE and CRPS."""

import numpy as np
import pytest
import torch

from lssdm.domain.errors import MetricError, ShapeError
from lssdm.domain.models import DTYPE
from lssdm.evalmetrics.metrics import crps_brute, crps_ensemble, crps_samples, mae
from lssdm.numerics.rng import RngStream


def _t(values: list[float]) -> torch.Tensor:
    return torch.tensor(values, dtype=DTYPE)


class TestMae:
    """Tests for mae."""

    def test_full_mask(self) -> None:
        """Mean absolute error over every entry."""
        assert mae(_t([1, 2]), _t([1, 4]), _t([1, 1])) == 1.0

    def test_partial_mask(self) -> None:
        """Unselected entries are ignored."""
        assert mae(_t([1, 2]), _t([9, 4]), _t([0, 1])) == 2.0

    def test_empty_mask(self) -> None:
        """An empty selection is undefined."""
        with pytest.raises(MetricError):
            mae(_t([1, 2]), _t([1, 4]), _t([0, 0]))

    def test_shape_mismatch(self) -> None:
        """Shapes must agree."""
        with pytest.raises(ShapeError):
            mae(_t([1, 2]), _t([1, 4, 5]), _t([1, 1]))


class TestCrps:
    """Tests for the sample CRPS estimators."""

    def test_two_point_ensemble(self) -> None:
        """Samples {0, 1} against 0.5 score 0.25."""
        assert crps_samples([0.0, 1.0], 0.5) == pytest.approx(0.25)

    def test_single_sample_is_absolute_error(self) -> None:
        """One sample reduces CRPS to |x - y|."""
        assert crps_samples([2.0], 0.5) == pytest.approx(1.5)

    def test_perfect_ensemble(self) -> None:
        """Samples equal to the truth score 0."""
        assert crps_samples([0.3, 0.3, 0.3], 0.3) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("size", [1, 2, 5, 16])
    def test_sorted_matches_brute_force(self, size: int) -> None:
        """The O(S log S) form equals the double loop."""
        samples = RngStream(size).normal((size,))
        for y in (-1.0, 0.0, 0.7):
            assert crps_samples(samples, y) == pytest.approx(crps_brute(samples, y), rel=1e-12, abs=1e-12)

    def test_sorted_matches_brute_force_on_random_sets(self) -> None:
        """A thousand random ensembles of up to 16 members agree to 1e-12."""
        rng = RngStream(11)
        for trial in range(1000):
            stream = rng.split(trial)
            size = stream.integers(1, 17)
            samples = stream.normal((size,))
            y = float(stream.normal((1,))[0])
            assert crps_samples(samples, y) == pytest.approx(crps_brute(samples, y), rel=1e-12, abs=1e-12), trial

    @pytest.mark.parametrize("seed", range(5))
    def test_minimized_within_sample_range(self, seed: int) -> None:
        """On a grid of truths the lowest score lies between the extreme samples."""
        samples = RngStream(seed).normal((7,))
        grid = np.linspace(samples.min() - 2.0, samples.max() + 2.0, 801)
        scores = [crps_samples(samples, float(y)) for y in grid]
        best = grid[int(np.argmin(scores))]
        assert samples.min() <= best <= samples.max()

    def test_linear_outside_sample_range(self) -> None:
        """Beyond the samples the score grows with slope one."""
        samples = RngStream(3).normal((9,))
        top, bottom = float(samples.max()), float(samples.min())
        assert crps_samples(samples, top + 2.0) - crps_samples(samples, top + 1.0) == pytest.approx(1.0, abs=1e-12)
        assert crps_samples(samples, bottom - 2.0) - crps_samples(samples, bottom - 1.0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("value", [0.1, 1 / 3, 0.7, 1e3 / 7])
    def test_point_mass_never_negative(self, value: float) -> None:
        """Identical samples at the truth never score below zero."""
        for size in range(2, 10):
            assert crps_samples([value] * size, value) >= 0.0
            ensemble = crps_ensemble(torch.full((size, 2), value, dtype=DTYPE), torch.full((2,), value, dtype=DTYPE))
            assert bool((ensemble >= 0).all())

    def test_order_invariant(self) -> None:
        """Permuting samples does not change the score."""
        samples = np.array([0.4, -1.2, 3.0, 0.0])
        assert crps_samples(samples, 0.1) == pytest.approx(crps_samples(samples[::-1].copy(), 0.1))

    def test_empty(self) -> None:
        """No samples, no score."""
        with pytest.raises(MetricError):
            crps_samples([], 0.0)

    def test_ensemble_matches_scalar(self) -> None:
        """The vectorized form agrees with the scalar one per entry."""
        samples = torch.from_numpy(RngStream(5).normal((30, 2, 3))).to(DTYPE)
        truth = torch.from_numpy(RngStream(6).normal((2, 3))).to(DTYPE)
        scores = crps_ensemble(samples, truth)
        for i in range(2):
            for j in range(3):
                expected = crps_samples(samples[:, i, j], float(truth[i, j]))
                assert float(scores[i, j]) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_ensemble_shape_mismatch(self) -> None:
        """Truth must match one sample's shape."""
        with pytest.raises(ShapeError):
            crps_ensemble(torch.zeros(4, 2, 3, dtype=DTYPE), torch.zeros(3, 2, dtype=DTYPE))
