"""
Probabilistic and weighted deterministic graphs, and thresholding between them.
Both are thin immutable wrappers around a frozen networkx.Graph.
"""
from typing import Iterable, Iterator, Optional

import networkx as nx
import numpy as np

from backend.config import THRESHOLDS

NodeId = str


class ProbabilisticGraph:
    """
    Undirected graph whose edges carry an existence probability in (0, 1].
    Node order is fixed at construction and defines the dense index 0..|V|-1.
    """

    def __init__(self, nodes: Iterable[NodeId], edges: Iterable[tuple[NodeId, NodeId, float]] = ()):
        graph = nx.Graph()
        graph.add_nodes_from(nodes)
        for u, v, p in edges:
            if u == v:
                raise ValueError(f"self-loop on {u!r} is not a valid edge")
            if u not in graph or v not in graph:
                raise ValueError(f"edge ({u!r}, {v!r}) references an unknown node")
            if not 0.0 < p <= 1.0:
                raise ValueError(f"edge ({u!r}, {v!r}) probability {p} outside (0, 1]")
            if graph.has_edge(u, v):
                raise ValueError(f"duplicate edge ({u!r}, {v!r})")
            graph.add_edge(u, v, probability=float(p))
        self._graph = nx.freeze(graph)
        self._nodes = tuple(graph.nodes)
        self._index = {node: i for i, node in enumerate(self._nodes)}

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        return self._nodes

    @property
    def graph(self) -> nx.Graph:
        """The frozen networkx view (edge attribute: ``probability``)."""
        return self._graph

    def index(self, node: NodeId) -> int:
        return self._index[node]

    def edges(self) -> Iterator[tuple[NodeId, NodeId, float]]:
        for u, v, p in self._graph.edges(data="probability"):
            yield u, v, p

    def probability(self, u: NodeId, v: NodeId) -> float:
        """Edge probability, 0.0 when the pair has no edge."""
        data = self._graph.get_edge_data(u, v)
        return data["probability"] if data else 0.0

    def number_of_edges(self) -> int:
        return self._graph.number_of_edges()

    def __len__(self) -> int:
        return len(self._nodes)

    def __repr__(self) -> str:
        return f"ProbabilisticGraph(nodes={len(self)}, edges={self.number_of_edges()})"


class WeightedDeterministicGraph:
    """
    Subgraph of a probabilistic graph keeping edges with p >= lambda,
    each weighted by its source probability.
    """

    def __init__(self, source: ProbabilisticGraph, lam: float):
        graph = nx.Graph()
        graph.add_nodes_from(source.nodes)
        graph.add_weighted_edges_from(
            ((u, v, p) for u, v, p in source.edges() if p >= lam),
            weight="weight",
        )
        self._graph = nx.freeze(graph)
        self._nodes = source.nodes
        self.lam = lam

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        return self._nodes

    @property
    def graph(self) -> nx.Graph:
        return self._graph

    def edges(self) -> Iterator[tuple[NodeId, NodeId, float]]:
        for u, v, w in self._graph.edges(data="weight"):
            yield u, v, w

    def edge_set(self) -> set[frozenset]:
        return {frozenset((u, v)) for u, v in self._graph.edges}

    def weight(self, u: NodeId, v: NodeId) -> float:
        data = self._graph.get_edge_data(u, v)
        return data["weight"] if data else 0.0

    def number_of_edges(self) -> int:
        return self._graph.number_of_edges()

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric |V|x|V| weight matrix in graph node order."""
        return nx.to_numpy_array(self._graph, nodelist=list(self._nodes), weight="weight")

    def __len__(self) -> int:
        return len(self._nodes)

    def __repr__(self) -> str:
        return f"WeightedDeterministicGraph(lambda={self.lam}, nodes={len(self)}, edges={self.number_of_edges()})"


def apply_threshold(g: ProbabilisticGraph, lam: float) -> WeightedDeterministicGraph:
    """Keep exactly the edges with probability >= lam (boundary inclusive)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"threshold {lam} outside [0, 1]")
    return WeightedDeterministicGraph(g, lam)


def threshold_family(
    g: ProbabilisticGraph, thresholds: Optional[Iterable[float]] = None
) -> list[WeightedDeterministicGraph]:
    """The six deterministic subgraphs, ascending threshold order."""
    return [apply_threshold(g, lam) for lam in sorted(thresholds or THRESHOLDS)]
