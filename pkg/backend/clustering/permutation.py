"""
Optimal node order inside a cluster.

For a candidate reference interval t_C, the order minimizing
DISS = sum |t(rho_i, rho_i+1) - t_C| is a Hamiltonian path problem on
weights |t_lk - t_C|. Each present interval of the cluster is tried as t_C,
a path is built with a Christofides-style heuristic (MST, greedy odd-vertex
matching, Euler circuit, shortcut, drop heaviest cycle edge) and the
candidate with the lowest DISS wins. Clusters small enough for 2-opt are
then refined by re-picking t_C for the winning order and re-running 2-opt.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from backend.config import ABSENT_INTERVAL_PENALTY
from backend.ingest.matrices import TimeMatrix

logger = logging.getLogger(__name__)

DEDUP_TOLERANCE = 1e-9
EXACT_MAX_NODES = 8
REFINE_ROUNDS = 5


@dataclass(frozen=True)
class ClusterPermutation:
    order: tuple[int, ...]  # dense node indices into the TimeMatrix
    diss: float
    t_c: float
    scoreable: bool = True

    def intervals(self, t_matrix: TimeMatrix) -> np.ndarray:
        """Intervals between consecutive nodes of the order (NaN where absent)."""
        if len(self.order) < 2:
            return np.empty(0)
        idx = np.asarray(self.order)
        return t_matrix.values[idx[:-1], idx[1:]]


def diss(order: Sequence[int], t_matrix: TimeMatrix, t_c: float, penalty: float = ABSENT_INTERVAL_PENALTY) -> float:
    """Sum of |t - t_C| over consecutive pairs; absent intervals cost `penalty`."""
    if len(order) < 2:
        return 0.0
    idx = np.asarray(order)
    steps = t_matrix.values[idx[:-1], idx[1:]]
    return float(np.where(np.isnan(steps), penalty, np.abs(steps - t_c)).sum())


def path_cost(path: Sequence[int], weights: np.ndarray) -> float:
    if len(path) < 2:
        return 0.0
    idx = np.asarray(path)
    return float(weights[idx[:-1], idx[1:]].sum())


def _complete_graph(weights: np.ndarray) -> nx.Graph:
    """Complete graph over the matrix indices; zero weights are kept as edges."""
    g = nx.Graph()
    n = weights.shape[0]
    g.add_nodes_from(range(n))
    g.add_weighted_edges_from((u, v, float(weights[u, v])) for u, v in itertools.combinations(range(n), 2))
    return g


def _greedy_matching(odd: list[int], weights: np.ndarray) -> list[tuple[int, int]]:
    """Sort odd-vertex pairs by weight and take disjoint ones (not an exact blossom matching)."""
    pairs = sorted((weights[u, v], u, v) for u, v in itertools.combinations(odd, 2))
    matched: set[int] = set()
    matching = []
    for _, u, v in pairs:
        if u in matched or v in matched:
            continue
        matching.append((u, v))
        matched.update((u, v))
    return matching


def two_opt_path(path: list[int], weights: np.ndarray, max_iters: int = 1000) -> list[int]:
    """First-improvement 2-opt for an open path (segment reversals may touch the ends)."""
    n = len(path)
    best = list(path)
    improved = True
    iters = 0
    while improved and iters < max_iters:
        improved = False
        iters += 1
        for i in range(n - 1):
            for k in range(i + 1, n):
                if i == 0 and k == n - 1:
                    continue
                before = after = 0.0
                if i > 0:
                    before += weights[best[i - 1], best[i]]
                    after += weights[best[i - 1], best[k]]
                if k < n - 1:
                    before += weights[best[k], best[k + 1]]
                    after += weights[best[i], best[k + 1]]
                if after - before < -1e-9:
                    best[i:k + 1] = reversed(best[i:k + 1])
                    improved = True
                    break
            if improved:
                break
    return best


def path_tsp_heuristic(weights: np.ndarray) -> list[int]:
    """
    Hamiltonian path over a complete symmetric non-negative weight matrix:
    MST -> greedy odd-degree matching -> Euler circuit -> shortcut to a
    Hamiltonian cycle -> delete the heaviest cycle edge.
    """
    n = weights.shape[0]
    if n <= 2:
        return list(range(n))

    mst = nx.minimum_spanning_tree(_complete_graph(weights), weight="weight")
    odd = [v for v, degree in mst.degree() if degree % 2]
    multigraph = nx.MultiGraph(mst)
    multigraph.add_edges_from(_greedy_matching(odd, weights))
    circuit = [u for u, _ in nx.eulerian_circuit(multigraph, source=0)]

    seen: set[int] = set()
    cycle = []
    for v in circuit:
        if v not in seen:
            seen.add(v)
            cycle.append(v)

    closing = [weights[cycle[i], cycle[(i + 1) % n]] for i in range(n)]
    k = int(np.argmax(closing))
    return cycle[k + 1:] + cycle[:k + 1]


def _candidates(sub: np.ndarray, limit: int) -> np.ndarray:
    n = sub.shape[0]
    upper = sub[np.triu_indices(n, k=1)]
    values = np.sort(upper[~np.isnan(upper)])
    if values.size == 0:
        return values
    values = values[np.concatenate([[True], np.diff(values) > DEDUP_TOLERANCE])]
    if values.size <= limit:
        return values
    # each node's nearest interval, topped up with quantiles of the rest
    masked = np.where(np.eye(n, dtype=bool) | np.isnan(sub), np.inf, sub)
    nearest = masked.min(axis=1)
    nearest = nearest[np.isfinite(nearest)]
    extra = max(limit - nearest.size, 0)
    quantiles = np.quantile(values, np.linspace(0.0, 1.0, extra)) if extra else np.empty(0)
    pruned = np.sort(np.concatenate([nearest, quantiles]))
    return pruned[np.concatenate([[True], np.diff(pruned) > DEDUP_TOLERANCE])]


def best_permutation(
    cluster: Sequence[int],
    t_matrix: TimeMatrix,
    penalty: float = ABSENT_INTERVAL_PENALTY,
    max_candidates: int = 64,
    two_opt_max_nodes: int = 16,
) -> ClusterPermutation:
    """
    Try every distinct present interval of the cluster as t_C and keep the
    lowest-DISS path. Singletons are degenerate (diss 0); a cluster without a
    single present interval is returned unscoreable.
    """
    nodes = sorted(int(v) for v in cluster)
    n = len(nodes)
    if n == 1:
        return ClusterPermutation(order=(nodes[0],), diss=0.0, t_c=0.0)

    sub = t_matrix.submatrix(nodes)
    candidates = _candidates(sub, max_candidates)
    if candidates.size == 0:
        return ClusterPermutation(order=tuple(nodes), diss=penalty * (n - 1), t_c=0.0, scoreable=False)

    best: Optional[ClusterPermutation] = None
    for t_c in candidates:
        weights = _delta_weights(sub, float(t_c), penalty)
        path = path_tsp_heuristic(weights)
        if 2 < n <= two_opt_max_nodes:
            path = two_opt_path(path, weights)
        cost = path_cost(path, weights)
        if best is None or cost < best.diss - 1e-12:
            best = ClusterPermutation(order=tuple(nodes[i] for i in path), diss=cost, t_c=float(t_c))
            if cost == 0.0:
                return best
    if 2 < n <= two_opt_max_nodes:
        best = _refine(best, nodes, sub, candidates, penalty)
    return best


def _delta_weights(sub: np.ndarray, t_c: float, penalty: float) -> np.ndarray:
    weights = np.where(np.isnan(sub), penalty, np.abs(sub - t_c))
    np.fill_diagonal(weights, 0.0)
    return weights


def _refine(
    best: ClusterPermutation,
    nodes: list[int],
    sub: np.ndarray,
    candidates: np.ndarray,
    penalty: float,
) -> ClusterPermutation:
    """
    Alternate between re-picking t_C for the current order and 2-opt under
    that t_C until neither lowers DISS.
    """
    position = {v: i for i, v in enumerate(nodes)}
    path = [position[v] for v in best.order]
    for _ in range(REFINE_ROUNDS):
        idx = np.asarray(path)
        steps = sub[idx[:-1], idx[1:]]
        costs = np.where(np.isnan(steps)[None, :], penalty, np.abs(steps[None, :] - candidates[:, None])).sum(axis=1)
        t_c = float(candidates[int(np.argmin(costs))])
        weights = _delta_weights(sub, t_c, penalty)
        path = two_opt_path(path, weights)
        cost = path_cost(path, weights)
        if cost >= best.diss - 1e-12:
            break
        best = ClusterPermutation(order=tuple(nodes[i] for i in path), diss=cost, t_c=t_c)
    return best


def exhaustive_best_permutation(
    cluster: Sequence[int],
    t_matrix: TimeMatrix,
    penalty: float = ABSENT_INTERVAL_PENALTY,
) -> ClusterPermutation:
    """Exact optimum over every t_C candidate and every order; small clusters only."""
    nodes = sorted(int(v) for v in cluster)
    n = len(nodes)
    if n > EXACT_MAX_NODES:
        raise ValueError(f"exhaustive search limited to {EXACT_MAX_NODES} nodes, got {n}")
    if n == 1:
        return ClusterPermutation(order=(nodes[0],), diss=0.0, t_c=0.0)

    sub = t_matrix.submatrix(nodes)
    candidates = _candidates(sub, limit=n * n)
    if candidates.size == 0:
        return ClusterPermutation(order=tuple(nodes), diss=penalty * (n - 1), t_c=0.0, scoreable=False)

    perms = np.array([p for p in itertools.permutations(range(n)) if p[0] < p[-1]])
    steps = sub[perms[:, :-1], perms[:, 1:]]
    absent = np.isnan(steps)
    best: Optional[ClusterPermutation] = None
    for t_c in candidates:
        costs = np.where(absent, penalty, np.abs(steps - t_c)).sum(axis=1)
        k = int(np.argmin(costs))
        if best is None or costs[k] < best.diss - 1e-12:
            best = ClusterPermutation(order=tuple(nodes[i] for i in perms[k]), diss=float(costs[k]), t_c=float(t_c))
    return best
