"""
Higher-order random-walk similarity between nodes of a deterministic graph.

sim^0 = I and sim^t = W @ sim^(t-2) @ W.T, where W is the row-stochastic
transition matrix of the weighted graph. Only even orders exist.
"""
from dataclasses import dataclass

import numpy as np

from backend.graph.core import WeightedDeterministicGraph


@dataclass(frozen=True)
class SimilarityMatrix:
    sim: np.ndarray
    order: int


def transition_matrix(g: WeightedDeterministicGraph) -> np.ndarray:
    """w_ij / sum_k w_ik for nodes with at least one edge; isolated nodes get zero rows."""
    w = g.weight_matrix()
    row_sum = w.sum(axis=1, keepdims=True)
    return np.divide(w, row_sum, out=np.zeros_like(w), where=row_sum > 0)


def random_walk_similarity(omega: np.ndarray, t: int) -> SimilarityMatrix:
    if t < 0 or t % 2:
        raise ValueError(f"walk order must be a non-negative even number, got {t}")
    n = omega.shape[0]
    sim = np.eye(n)
    for _ in range(t // 2):
        sim = omega @ sim @ omega.T
    # symmetric by construction; remove rounding asymmetry
    sim = (sim + sim.T) / 2.0
    return SimilarityMatrix(sim=sim, order=t)


def dissimilarity(sim: SimilarityMatrix) -> np.ndarray:
    """d_ij = 1 - sim_ij / max(sim) off the diagonal, d_ii = 0; all ones if sim is all zero."""
    peak = sim.sim.max() if sim.sim.size else 0.0
    if peak > 0:
        d = 1.0 - sim.sim / peak
    else:
        d = np.ones_like(sim.sim)
    d = np.clip(d, 0.0, 1.0)
    np.fill_diagonal(d, 0.0)
    return d
