"""Tests for graph construction."""

import numpy as np
import pytest
import torch

from lssdm.domain.enums import LaplacianKind
from lssdm.domain.errors import GraphError
from lssdm.domain.models import DTYPE
from lssdm.graph.laplacian import build_graph, build_laplacian, identity_graph
from lssdm.model.gcn import gcn_layer
from lssdm.numerics.rng import RngStream


def _t(rows: list[list[float]]) -> torch.Tensor:
    return torch.tensor(rows, dtype=DTYPE)


class TestBuildLaplacian:
    """Tests for build_laplacian."""

    def test_two_node_unit_graph(self) -> None:
        """A single unit edge gives D = I and L = I - A."""
        graph = build_laplacian(_t([[0, 1], [1, 0]]))
        assert torch.equal(graph.degree, torch.eye(2, dtype=DTYPE))
        assert torch.allclose(graph.laplacian, _t([[1, -1], [-1, 1]]))

    def test_weighted_two_node_graph(self) -> None:
        """Equal degrees cancel in the conjugation, leaving I - A."""
        graph = build_laplacian(_t([[0, 2], [2, 0]]))
        assert torch.equal(graph.degree, 2 * torch.eye(2, dtype=DTYPE))
        assert torch.allclose(graph.laplacian, _t([[1, -2], [-2, 1]]))

    def test_unequal_degrees(self) -> None:
        """Off-diagonal entries are scaled by sqrt(d_j / d_i)."""
        a = _t([[0, 1, 1], [1, 0, 0], [1, 0, 0]])
        graph = build_laplacian(a)
        assert float(graph.laplacian[0, 1]) == pytest.approx(-((1 / 2) ** 0.5))
        assert float(graph.laplacian[1, 0]) == pytest.approx(-(2**0.5))

    def test_zero_matrix(self) -> None:
        """An isolated node is a zero-degree error naming the node."""
        with pytest.raises(GraphError) as exc_info:
            build_laplacian(torch.zeros(3, 3, dtype=DTYPE))
        assert exc_info.value.node == 0

    def test_asymmetric_rejected(self) -> None:
        """A directed adjacency is rejected."""
        with pytest.raises(GraphError, match="symmetric"):
            build_laplacian(_t([[0, 1], [0, 0]]))

    def test_self_loop_rejected(self) -> None:
        """A non-zero diagonal is rejected."""
        with pytest.raises(GraphError):
            build_laplacian(_t([[1, 1], [1, 0]]))

    def test_gcn_classic(self) -> None:
        """The classic operator normalizes A + I symmetrically."""
        graph = build_laplacian(_t([[0, 1], [1, 0]]), LaplacianKind.GCN_CLASSIC)
        assert torch.allclose(graph.laplacian, torch.full((2, 2), 0.5, dtype=DTYPE))


class TestIdentityGraph:
    """Tests for identity_graph and build_graph."""

    def test_three_nodes(self) -> None:
        """n = 3 gives the 3 x 3 identity."""
        graph = identity_graph(3)
        assert torch.equal(graph.laplacian, torch.eye(3, dtype=DTYPE))
        assert graph.identity

    def test_one_node(self) -> None:
        """n = 1 gives [[1]]."""
        assert identity_graph(1).laplacian.tolist() == [[1.0]]

    def test_gcn_with_identity_is_dense_layer(self) -> None:
        """With L = I a graph convolution is sigma(H W)."""
        h = _t([[1, -2], [0.5, 3]])
        w = _t([[1, 0, 2], [-1, 1, 0]])
        out = gcn_layer(identity_graph(2).laplacian, h, w)
        assert torch.equal(out, h @ w)

    def test_build_graph_without_adjacency(self) -> None:
        """No adjacency falls back to the identity."""
        assert build_graph(None, 4).identity

    def test_build_graph_size_mismatch(self) -> None:
        """An adjacency of the wrong size is rejected."""
        with pytest.raises(GraphError):
            build_graph(_t([[0, 1], [1, 0]]), 3)


def _random_connected(n: int, rng: RngStream) -> torch.Tensor:
    """Weighted ring (so no node is isolated) plus random chords, symmetric."""
    keep = rng.split(0).bernoulli(0.4, (n, n))
    keep[np.arange(n - 1), np.arange(1, n)] = True
    keep[0, n - 1] = True
    upper = np.triu(rng.split(1).uniform(0.5, 2.0, (n, n)) * keep, k=1)
    return torch.from_numpy(upper + upper.T).to(DTYPE)


class TestSpectrum:
    """The literal operator is similar to I - A, so its eigenvalues are real."""

    @pytest.mark.parametrize("seed", range(20))
    def test_real_spectrum(self, seed: int) -> None:
        """Imaginary parts vanish and the eigenvalues match those of I - A."""
        rng = RngStream(seed)
        n = 3 + rng.split(2).integers(0, 6)
        a = _random_connected(n, rng)
        eigenvalues = torch.linalg.eigvals(build_laplacian(a).laplacian)
        assert float(eigenvalues.imag.abs().max()) < 1e-8
        expected = torch.linalg.eigvalsh(torch.eye(n, dtype=DTYPE) - a)
        assert torch.allclose(torch.sort(eigenvalues.real).values, expected, atol=1e-8)

    def test_pure(self) -> None:
        """The same adjacency always gives the same operator."""
        a = _random_connected(6, RngStream(99))
        first = build_laplacian(a)
        second = build_laplacian(a.clone())
        assert torch.equal(first.laplacian, second.laplacian)
        assert torch.equal(first.degree, second.degree)
        assert torch.equal(a, _random_connected(6, RngStream(99)))
