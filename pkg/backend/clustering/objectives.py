"""
Chromosome objectives.

SC(C)   = 1 - tanh(sigma / mu) over the intervals along the cluster's optimal order
SCE(x)  = mean over the clusters of x of (m * SC + kappa * 0.5) / (m + kappa),
          m the number of observed intervals in the cluster
DIST(x) = sum_j (|C_j| / n) [ w * D_inter(C_j) - D_intra(C_j) ]   ("size")
        = sum_j [ w * D_inter(C_j) - D_intra(C_j) ]                 ("sum")
DISIM   = mean silhouette over nodes (reported, not part of fitness)
Fitness = w1 * DIST_normalized + (1 - w1) * SCE

DIST_normalized is min-max scaled and clipped to [0, 1]. A two-light
cluster has a single interval and always scores SC = 1, so kappa
pseudo-intervals at the neutral score are mixed in before averaging.
"""
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from sklearn.metrics import silhouette_samples

from backend.clustering.chromosome import Chromosome, clusters_of, one_hot
from backend.clustering.permutation import ClusterPermutation, best_permutation
from backend.config import ABSENT_INTERVAL_PENALTY, NEUTRAL_SC, FitnessWeights
from backend.ingest.matrices import TimeMatrix
from backend.utils.cache import PermutationCache

SceMode = Literal["intervals", "cluster_size"]
DistScaling = Literal["size", "sum"]


def permutation_context(t_matrix: TimeMatrix, penalty: float, max_tc_candidates: int, two_opt_max_nodes: int) -> str:
    """Everything a cached permutation depends on besides its node set."""
    return f"{t_matrix.fingerprint()}:{penalty}:{max_tc_candidates}:{two_opt_max_nodes}"


@dataclass(frozen=True)
class ClusterScore:
    sc: float
    mu: float = math.nan
    sigma: float = math.nan
    coverage: float = 1.0
    scoreable: bool = True
    evidence: int = 0

    def shrunk(self, kappa: float) -> float:
        """SC pulled toward neutral by kappa pseudo-intervals."""
        if not self.scoreable or kappa <= 0:
            return self.sc
        return (self.evidence * self.sc + kappa * NEUTRAL_SC) / (self.evidence + kappa)


@dataclass
class EvaluationContext:
    """Shared inputs for scoring chromosomes against one thresholded subgraph."""
    t_matrix: TimeMatrix
    dissimilarity: np.ndarray
    weights: FitnessWeights = field(default_factory=FitnessWeights)
    sce_mode: SceMode = "intervals"
    sc_evidence: float = 1.0
    dist_scaling: DistScaling = "size"
    penalty: float = ABSENT_INTERVAL_PENALTY
    max_tc_candidates: int = 64
    two_opt_max_nodes: int = 16
    permutations: Optional[PermutationCache] = None

    def __post_init__(self):
        if self.permutations is None:
            self.permutations = PermutationCache(context=self.cache_context())

    def cache_context(self) -> str:
        return permutation_context(self.t_matrix, self.penalty, self.max_tc_candidates, self.two_opt_max_nodes)

    def permutation(self, cluster: Sequence[int]) -> ClusterPermutation:
        key = frozenset(int(v) for v in cluster)
        return self.permutations.get_or_compute(
            key,
            lambda: best_permutation(
                cluster, self.t_matrix, self.penalty, self.max_tc_candidates, self.two_opt_max_nodes
            ),
        )


def score_intervals(intervals: np.ndarray, n_c: Optional[int] = None, mode: SceMode = "intervals") -> ClusterScore:
    """
    SC from the consecutive intervals of an ordered cluster. Absent (NaN)
    intervals are left out of mu/sigma and scale the score by coverage.
    In cluster_size mode mu and sigma divide by the cluster size n_c.
    """
    intervals = np.asarray(intervals, dtype=float)
    present = intervals[~np.isnan(intervals)]
    if present.size == 0:
        return ClusterScore(sc=NEUTRAL_SC, scoreable=False)

    denom = present.size if mode == "intervals" else (n_c or present.size + 1)
    mu = float(present.sum() / denom)
    if mu <= 0:
        return ClusterScore(sc=NEUTRAL_SC, mu=mu, scoreable=False)
    sigma = float(math.sqrt(((present - mu) ** 2).sum() / denom))
    coverage = present.size / intervals.size
    return ClusterScore(
        sc=(1.0 - math.tanh(sigma / mu)) * coverage,
        mu=mu,
        sigma=sigma,
        coverage=coverage,
        evidence=int(present.size),
    )


def sc(
    cluster: Sequence[int],
    t_matrix: TimeMatrix,
    mode: SceMode = "intervals",
    permutation: Optional[ClusterPermutation] = None,
) -> ClusterScore:
    """Speed consistency of one cluster; singletons and unscoreable clusters are neutral."""
    if len(cluster) < 2:
        return ClusterScore(sc=NEUTRAL_SC, scoreable=False)
    permutation = permutation or best_permutation(cluster, t_matrix)
    if not permutation.scoreable:
        return ClusterScore(sc=NEUTRAL_SC, scoreable=False)
    return score_intervals(permutation.intervals(t_matrix), n_c=len(cluster), mode=mode)


def sce(chromosome: Chromosome, ctx: EvaluationContext) -> float:
    scores = [
        sc(members, ctx.t_matrix, ctx.sce_mode, ctx.permutation(members) if members.size > 1 else None)
        .shrunk(ctx.sc_evidence)
        for members in clusters_of(chromosome)
    ]
    return float(np.mean(scores)) if scores else 0.0


def dist(chromosome: Chromosome, d: np.ndarray, dist_w: float = 0.5, scaling: DistScaling = "size") -> float:
    """
    D_intra(C) = mean dissimilarity over unordered member pairs (0 for singletons),
    D_inter(C) = mean dissimilarity between members and non-members (0 if C = V).

    "size" weighs each cluster's term by its share of the nodes, which keeps
    the total in [-1, w] whatever the number of clusters; "sum" adds the
    terms as they are.
    """
    m = one_hot(chromosome)
    n = m.shape[0]
    sums = m.T @ d @ m
    sizes = m.sum(axis=0)
    within = np.diag(sums)
    across = sums.sum(axis=1) - within
    intra_pairs = sizes * (sizes - 1)
    inter_pairs = sizes * (n - sizes)
    d_intra = np.divide(within, intra_pairs, out=np.zeros_like(within), where=intra_pairs > 0)
    d_inter = np.divide(across, inter_pairs, out=np.zeros_like(across), where=inter_pairs > 0)
    terms = d_inter * dist_w - d_intra
    if scaling == "size":
        terms = terms * sizes / n
    return float(terms.sum())


@dataclass(frozen=True)
class DisimResult:
    value: float
    degenerate: bool = False


def disim(chromosome: Chromosome, d: np.ndarray) -> DisimResult:
    """Silhouette-style (b - a) / max(a, b) averaged over nodes."""
    labels = np.asarray(chromosome)
    k = np.unique(labels).size
    if k < 2:
        return DisimResult(0.0, degenerate=True)
    if k == labels.size:
        # every node alone: silhouette is 0 by convention
        return DisimResult(0.0)
    return DisimResult(float(silhouette_samples(d, labels, metric="precomputed").mean()))


@dataclass(frozen=True)
class RawObjectives:
    dist: float
    sce: float


def evaluate_raw(chromosome: Chromosome, ctx: EvaluationContext) -> RawObjectives:
    return RawObjectives(
        dist=dist(chromosome, ctx.dissimilarity, ctx.weights.dist_w, ctx.dist_scaling),
        sce=sce(chromosome, ctx),
    )


@dataclass(frozen=True)
class DistBounds:
    low: float
    high: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "DistBounds":
        return cls(float(min(values)), float(max(values)))

    @classmethod
    def attainable(cls, dist_w: float, n: int, scaling: DistScaling = "size") -> "DistBounds":
        """The widest range DIST can take on n nodes."""
        if scaling == "size":
            return cls(-1.0, dist_w)
        return cls(-float(n), dist_w * n)

    def normalize(self, value: float) -> float:
        """Min-max position of value, clipped to [0, 1]; 0 for an empty span."""
        span = self.high - self.low
        if span <= 0:
            return 0.0
        return min(1.0, max(0.0, (value - self.low) / span))


def fitness_from_raw(raw: RawObjectives, weights: FitnessWeights, bounds: DistBounds) -> float:
    return weights.w1 * bounds.normalize(raw.dist) + weights.w2 * raw.sce


def population_fitness(
    raws: Sequence[RawObjectives],
    weights: FitnessWeights,
    bounds: Optional[DistBounds] = None,
) -> tuple[np.ndarray, DistBounds]:
    """Weighted-sum fitness; DIST is min-max scaled by `bounds` or, if None, by this population."""
    bounds = bounds or DistBounds.of([r.dist for r in raws])
    return np.array([fitness_from_raw(r, weights, bounds) for r in raws]), bounds


def fitness(
    chromosome: Chromosome,
    ctx: EvaluationContext,
    weights: Optional[FitnessWeights] = None,
    bounds: Optional[DistBounds] = None,
) -> float:
    """Fitness of one chromosome; without bounds DIST is scaled by its attainable range."""
    weights = weights or ctx.weights
    raw = evaluate_raw(chromosome, ctx)
    bounds = bounds or DistBounds.attainable(weights.dist_w, len(chromosome), ctx.dist_scaling)
    return fitness_from_raw(raw, weights, bounds)


@dataclass(frozen=True)
class NeighborEntry:
    node: int
    sector: int
    position: int
    prev: Optional[int]
    next: Optional[int]


def neighbor_table(chromosome: Chromosome, ctx: EvaluationContext) -> list[NeighborEntry]:
    """
    Per light: its sector, its position along the sector's optimal order and
    the lights before and after it. Rows are sorted by (sector, position).
    """
    rows = []
    for sector, members in enumerate(clusters_of(chromosome)):
        order = ctx.permutation(members).order if members.size > 1 else (int(members[0]),)
        for position, node in enumerate(order):
            rows.append(NeighborEntry(
                node=node,
                sector=sector,
                position=position,
                prev=order[position - 1] if position > 0 else None,
                next=order[position + 1] if position + 1 < len(order) else None,
            ))
    return rows
