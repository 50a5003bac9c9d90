"""Graph files: JSON edge lists and dense adjacency CSVs."""

import json
from pathlib import Path
from typing import Any

import pandas as pd
import torch

from lssdm.domain.errors import DataError, GraphError
from lssdm.domain.models import DTYPE
from lssdm.graph.laplacian import Graph


def read_graph_json(path: Path, n_nodes: int | None = None) -> torch.Tensor:
    """Read ``{"edges": [[i, j] | [i, j, w], ...], "n_nodes"?: N}`` into a symmetric adjacency.

    Raises:
        DataError: If the file is missing or not JSON.
        GraphError: If an edge is malformed or out of range.

    """
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        msg = f"Graph file not found: {path}"
        raise DataError(msg) from e
    except json.JSONDecodeError as e:
        msg = f"Graph file {path} is not valid JSON: {e}"
        raise DataError(msg) from e

    edges = payload.get("edges")
    if not isinstance(edges, list):
        msg = f"Graph file {path} lacks an 'edges' list"
        raise GraphError(msg)
    n = n_nodes or payload.get("n_nodes") or (1 + max((max(e[0], e[1]) for e in edges), default=-1))
    adjacency = torch.zeros(n, n, dtype=DTYPE)
    for edge in edges:
        if len(edge) not in (2, 3):
            msg = f"Malformed edge {edge!r}"
            raise GraphError(msg)
        i, j = int(edge[0]), int(edge[1])
        weight = float(edge[2]) if len(edge) == 3 else 1.0
        if not (0 <= i < n and 0 <= j < n):
            msg = f"Edge {edge!r} references a node outside [0, {n})"
            raise GraphError(msg)
        adjacency[i, j] = weight
        adjacency[j, i] = weight
    return adjacency


def write_graph_json(graph: Graph, path: Path, config: dict[str, Any] | None = None) -> Path:
    """Write the upper-triangle edges of ``graph`` plus a generator config echo."""
    a = graph.adjacency
    n = graph.n_nodes
    edges: list[list[Any]] = []
    for i in range(n):
        for j in range(i + 1, n):
            weight = float(a[i, j].item())
            if weight:
                edges.append([i, j] if weight == 1.0 else [i, j, weight])
    payload = {"n_nodes": n, "edges": edges, "config": config or {}}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_adjacency_csv(path: Path) -> torch.Tensor:
    """Read a headerless N x N adjacency CSV."""
    try:
        frame = pd.read_csv(path, header=None, dtype=float)
    except FileNotFoundError as e:
        msg = f"Adjacency file not found: {path}"
        raise DataError(msg) from e
    except (ValueError, pd.errors.ParserError) as e:
        msg = f"Adjacency file {path} is malformed: {e}"
        raise DataError(msg) from e
    return torch.from_numpy(frame.to_numpy(dtype=float)).to(DTYPE)
