"""Tests for the graph convolution and the sinusoidal tables."""

import pytest
import torch

from lssdm.domain.enums import Activation
from lssdm.domain.errors import ShapeError
from lssdm.domain.models import DTYPE
from lssdm.model.gcn import gcn_layer, sinusoidal_table, step_table


def _t(rows: list[list[float]]) -> torch.Tensor:
    return torch.tensor(rows, dtype=DTYPE)


class TestGcnLayer:
    """Tests for gcn_layer."""

    def test_identity_propagation(self) -> None:
        """L = I, W = I, no activation leaves H unchanged."""
        h = _t([[1, 2], [3, 4], [5, 6]])
        assert torch.equal(gcn_layer(torch.eye(3, dtype=DTYPE), h, torch.eye(2, dtype=DTYPE)), h)

    def test_relu_annihilates_negative(self) -> None:
        """All-negative pre-activations give zeros."""
        out = gcn_layer(torch.eye(2, dtype=DTYPE), _t([[-1], [-2]]), _t([[1]]), Activation.RELU)
        assert torch.equal(out, torch.zeros(2, 1, dtype=DTYPE))

    def test_two_node_product(self) -> None:
        """[[1, -1], [-1, 1]] @ [[1], [0]] @ [[1]] = [[1], [-1]]."""
        out = gcn_layer(_t([[1, -1], [-1, 1]]), _t([[1], [0]]), _t([[1]]))
        assert out.tolist() == [[1.0], [-1.0]]

    def test_batched_features(self) -> None:
        """Leading batch dimensions are carried through."""
        h = torch.ones(5, 3, 2, dtype=DTYPE)
        assert gcn_layer(torch.eye(3, dtype=DTYPE), h, torch.ones(2, 4, dtype=DTYPE)).shape == (5, 3, 4)

    def test_sigmoid(self) -> None:
        """Sigmoid of zero is one half."""
        out = gcn_layer(torch.eye(1, dtype=DTYPE), _t([[0]]), _t([[1]]), Activation.SIGMOID)
        assert float(out) == 0.5

    def test_mismatched_weights(self) -> None:
        """Weights that do not chain are a shape error."""
        with pytest.raises(ShapeError):
            gcn_layer(torch.eye(2, dtype=DTYPE), torch.ones(2, 3, dtype=DTYPE), torch.ones(2, 2, dtype=DTYPE))

    def test_mismatched_nodes(self) -> None:
        """Features for the wrong node count are a shape error."""
        with pytest.raises(ShapeError):
            gcn_layer(torch.eye(3, dtype=DTYPE), torch.ones(2, 3, dtype=DTYPE), torch.ones(3, 1, dtype=DTYPE))


class TestTables:
    """Tests for the sinusoidal tables."""

    def test_sinusoidal_shape_and_origin(self) -> None:
        """Row 0 is sines of zero then cosines of zero."""
        table = sinusoidal_table(5, 6)
        assert table.shape == (5, 6)
        assert table[0].tolist() == [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]

    def test_step_table_shape(self) -> None:
        """One row per step, dim columns."""
        assert step_table(50, 128).shape == (50, 128)
