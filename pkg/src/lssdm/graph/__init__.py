"""Adjacency handling and the Laplacian operator used by the graph encoder."""

from lssdm.graph.io import read_adjacency_csv, read_graph_json, write_graph_json
from lssdm.graph.laplacian import Graph, build_graph, build_laplacian, identity_graph

__all__ = [
    "Graph",
    "build_graph",
    "build_laplacian",
    "identity_graph",
    "read_adjacency_csv",
    "read_graph_json",
    "write_graph_json",
]
