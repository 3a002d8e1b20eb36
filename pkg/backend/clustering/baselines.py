"""
Reference clusterings the GA is compared against.
"""
import networkx as nx
import numpy as np

from backend.clustering.chromosome import Chromosome, canonicalize
from backend.clustering.ga import pkwik_cluster
from backend.graph.core import ProbabilisticGraph, apply_threshold

COMPONENTS_THRESHOLD = 0.5


def pkwik_baseline(g_prob: ProbabilisticGraph, seed: int = 0) -> Chromosome:
    """One pKwikCluster run on the probabilistic graph (edges weighted by probability)."""
    return pkwik_cluster(apply_threshold(g_prob, 0.0), np.random.default_rng(seed))


def threshold_components(g_prob: ProbabilisticGraph, lam: float = COMPONENTS_THRESHOLD) -> Chromosome:
    """Connected components of the lambda-thresholded subgraph."""
    g = apply_threshold(g_prob, lam)
    labels = np.empty(len(g), dtype=np.int64)
    index = {node: i for i, node in enumerate(g.nodes)}
    for label, component in enumerate(nx.connected_components(g.graph)):
        labels[[index[node] for node in component]] = label
    return canonicalize(labels)
