"""Graph construction.

The default operator is the literal ``L = D^{-1/2} (I - A) D^{1/2}``.
``gcn-classic`` gives the usual ``D~^{-1/2} (A + I) D~^{-1/2}`` with
``D~ = diag(rowsum(A + I))``. The literal form is a diagonal conjugation of
``I - A``, so its spectrum is real.
"""

from dataclasses import dataclass

import torch

from lssdm.domain.enums import LaplacianKind
from lssdm.domain.errors import GraphError
from lssdm.domain.models import DTYPE

SYMMETRY_TOLERANCE = 1e-9


@dataclass(frozen=True, slots=True, eq=False)
class Graph:
    """Adjacency A, degree D and propagation operator L (all N x N)."""

    adjacency: torch.Tensor
    degree: torch.Tensor
    laplacian: torch.Tensor
    identity: bool = False
    kind: LaplacianKind = LaplacianKind.LITERAL

    @property
    def n_nodes(self) -> int:
        """Number of nodes N."""
        return int(self.laplacian.shape[0])


def _validate_adjacency(adjacency: torch.Tensor) -> torch.Tensor:
    a = adjacency.to(DTYPE)
    if a.dim() != 2 or a.shape[0] != a.shape[1]:
        msg = f"Adjacency must be square, got shape {tuple(a.shape)}"
        raise GraphError(msg)
    if not bool(torch.isfinite(a).all()):
        msg = "Adjacency has non-finite entries"
        raise GraphError(msg)
    if bool((a < 0).any()):
        msg = "Adjacency has negative entries"
        raise GraphError(msg)
    if bool((a.diagonal() != 0).any()):
        node = int(torch.nonzero(a.diagonal() != 0)[0].item())
        msg = f"Adjacency has a self-loop at node {node}; the diagonal must be zero"
        raise GraphError(msg, node=node)
    asymmetry = float((a - a.T).abs().max().item())
    if asymmetry > SYMMETRY_TOLERANCE:
        msg = f"Adjacency is not symmetric (max |A - A^T| = {asymmetry:.3g})"
        raise GraphError(msg)
    symmetric: torch.Tensor = (a + a.T) / 2
    return symmetric


def build_laplacian(adjacency: torch.Tensor, kind: LaplacianKind = LaplacianKind.LITERAL) -> Graph:
    """Build the propagation operator for a weighted undirected graph.

    Raises:
        GraphError: On a non-square, negative, self-looped or asymmetric
            adjacency, or a node with zero degree (named in the message).

    """
    a = _validate_adjacency(adjacency)
    n = a.shape[0]
    row_sums = a.sum(dim=1)
    if bool((row_sums <= 0).any()):
        node = int(torch.nonzero(row_sums <= 0)[0].item())
        msg = f"Node {node} has zero degree"
        raise GraphError(msg, node=node)
    degree = torch.diag(row_sums)
    eye = torch.eye(n, dtype=DTYPE)

    if kind == LaplacianKind.LITERAL:
        laplacian = torch.diag(row_sums.rsqrt()) @ (eye - a) @ torch.diag(row_sums.sqrt())
    else:
        a_tilde = a + eye
        inv_sqrt = torch.diag(a_tilde.sum(dim=1).rsqrt())
        laplacian = inv_sqrt @ a_tilde @ inv_sqrt
    return Graph(adjacency=a, degree=degree, laplacian=laplacian, identity=False, kind=kind)


def identity_graph(n: int) -> Graph:
    """Graph whose operator is I_n, for data without a predefined structure.

    With ``L = I`` a graph convolution degenerates to a per-node dense layer.
    """
    if n <= 0:
        msg = f"Identity graph needs n >= 1, got {n}"
        raise GraphError(msg)
    eye = torch.eye(n, dtype=DTYPE)
    return Graph(adjacency=torch.zeros(n, n, dtype=DTYPE), degree=eye.clone(), laplacian=eye, identity=True)


def build_graph(adjacency: torch.Tensor | None, n: int, kind: LaplacianKind = LaplacianKind.LITERAL) -> Graph:
    """Identity graph when no adjacency is given, otherwise :func:`build_laplacian`."""
    if adjacency is None:
        return identity_graph(n)
    if adjacency.shape[0] != n:
        msg = f"Adjacency has {adjacency.shape[0]} nodes but the dataset has {n} sensors"
        raise GraphError(msg)
    return build_laplacian(adjacency, kind)
