"""
Multi-population genetic algorithm over the thresholded subgraphs.

One population per threshold evolves independently:
evaluate -> local search (top fraction) -> select top half ->
crossover to refill -> mutate children. The best chromosome of each
population is then re-scored on the lowest-threshold context and the
overall winner returned.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import pandas as pd

from backend.clustering.chromosome import Chromosome, canonicalize, n_clusters, one_hot, same_partition
from backend.clustering.objectives import (
    DisimResult,
    DistBounds,
    EvaluationContext,
    RawObjectives,
    disim,
    evaluate_raw,
    fitness_from_raw,
    permutation_context,
    population_fitness,
)
from backend.clustering.similarity import SimilarityMatrix, dissimilarity, random_walk_similarity, transition_matrix
from backend.config import GAConfig
from backend.errors import InvariantViolation
from backend.graph.core import ProbabilisticGraph, WeightedDeterministicGraph, threshold_family
from backend.ingest.matrices import TimeMatrix
from backend.utils.cache import PermutationCache

logger = logging.getLogger(__name__)

PKWIK_THRESHOLD = 0.5
TRACE_COLUMNS = ["population", "generation", "best_fitness", "mean_fitness", "best_sce", "best_dist", "n_clusters"]


# ============================================================================
# OPERATORS
# ============================================================================

def pkwik_cluster(g: WeightedDeterministicGraph, rng: np.random.Generator) -> Chromosome:
    """
    Random pivot clustering: pick an unassigned node uniformly, group it with
    its unassigned neighbors of weight > 0.5, repeat until every node is placed.
    """
    w = g.weight_matrix()
    n = w.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    unassigned = np.ones(n, dtype=bool)
    label = 0
    while unassigned.any():
        pivot = int(rng.choice(np.flatnonzero(unassigned)))
        members = unassigned & (w[pivot] > PKWIK_THRESHOLD)
        members[pivot] = True
        labels[members] = label
        unassigned &= ~members
        label += 1
    return canonicalize(labels)


def random_chromosome(n: int, rng: np.random.Generator) -> Chromosome:
    """Uniform labels with the cluster count drawn from [2, floor(2 * sqrt(n))]."""
    if n < 2:
        return np.zeros(n, dtype=np.int64)
    k_max = max(2, int(math.floor(2 * math.sqrt(n))))
    k = int(rng.integers(2, k_max + 1))
    return canonicalize(rng.integers(0, k, size=n))


@dataclass
class Population:
    members: list[Chromosome]
    subgraph: WeightedDeterministicGraph
    sim: SimilarityMatrix
    origins: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.members)


def init_population(
    g: WeightedDeterministicGraph,
    sim: SimilarityMatrix,
    cfg: GAConfig,
    rng: np.random.Generator,
) -> Population:
    """Half pKwikCluster runs (independent pivot orders), half random labelings."""
    n_pkwik = cfg.pop_size // 2
    members = [pkwik_cluster(g, rng) for _ in range(n_pkwik)]
    members += [random_chromosome(len(g), rng) for _ in range(cfg.pop_size - n_pkwik)]
    origins = ["pkwik"] * n_pkwik + ["random"] * (cfg.pop_size - n_pkwik)
    return Population(members=members, subgraph=g, sim=sim, origins=origins)


def local_search(x: Chromosome, sim: SimilarityMatrix) -> Chromosome:
    """
    Move every node to the existing cluster with the largest summed similarity
    to its members (the node itself excluded). All nodes are scored against the
    partition as it stood before the pass; ties go to the lowest cluster id and
    a node with no similarity to anyone keeps its label.
    """
    labels = canonicalize(x)
    s = np.array(sim.sim, dtype=float, copy=True)
    np.fill_diagonal(s, 0.0)
    scores = s @ one_hot(labels)
    moved = np.argmax(scores, axis=1)
    isolated = ~(scores > 0).any(axis=1)
    return canonicalize(np.where(isolated, labels, moved))


def select(fitnesses: np.ndarray) -> np.ndarray:
    """Indices of the top half by fitness, best first; ties keep the lower index."""
    fitnesses = np.asarray(fitnesses, dtype=float)
    order = np.argsort(-fitnesses, kind="stable")
    return order[: len(fitnesses) // 2]


def crossover(
    xa: Chromosome,
    xb: Chromosome,
    rng: np.random.Generator,
    point: Optional[int] = None,
) -> tuple[Chromosome, Chromosome]:
    """Single-point crossover at C_p in [1, n-1] (drawn unless `point` is given)."""
    xa, xb = np.asarray(xa), np.asarray(xb)
    if xa.shape != xb.shape:
        raise ValueError(f"crossover parents differ in length: {xa.size} vs {xb.size}")
    n = xa.size
    if n < 2:
        return canonicalize(xa), canonicalize(xb)
    cp = int(rng.integers(1, n)) if point is None else point
    if not 1 <= cp <= n - 1:
        raise ValueError(f"crossover point {cp} outside [1, {n - 1}]")
    child1 = np.concatenate([xa[:cp], xb[cp:]])
    child2 = np.concatenate([xb[:cp], xa[cp:]])
    return canonicalize(child1), canonicalize(child2)


def mutate(x: Chromosome, mutation_prob: float, rng: np.random.Generator) -> Chromosome:
    """With probability mutation_prob percent, set one gene to another label in {0..max+1}."""
    x = np.array(x, dtype=np.int64, copy=True)
    if x.size == 0 or rng.random() * 100.0 >= mutation_prob:
        return canonicalize(x)
    gene = int(rng.integers(x.size))
    old = int(x[gene])
    choices = [v for v in range(int(x.max()) + 2) if v != old]
    x[gene] = int(rng.choice(choices))
    return canonicalize(x)


def merge_clusters(x: Chromosome, weights: np.ndarray, rng: np.random.Generator) -> Chromosome:
    """
    Join the two clusters at the ends of one subgraph edge drawn uniformly
    from the edges that cross clusters. Unchanged if no edge crosses.
    """
    labels = canonicalize(x)
    iu, iv = np.nonzero(np.triu(np.asarray(weights) > 0, 1))
    crossing = np.flatnonzero(labels[iu] != labels[iv])
    if crossing.size == 0:
        return labels
    edge = int(rng.choice(crossing))
    keep, gone = labels[iu[edge]], labels[iv[edge]]
    return canonicalize(np.where(labels == gone, keep, labels))


# ============================================================================
# EVOLUTION
# ============================================================================

@dataclass(frozen=True)
class GenerationStats:
    population: int
    generation: int
    best_fitness: float
    mean_fitness: float
    best_sce: float
    best_dist: float
    n_clusters: int


@dataclass
class PopulationResult:
    index: int
    threshold: float
    best: Chromosome
    best_fitness: float
    best_raw: RawObjectives
    bounds: DistBounds
    trace: list[GenerationStats] = field(default_factory=list)
    stopped_early: bool = False


@dataclass
class GAResult:
    best: Chromosome
    fitness: float
    threshold: float
    raw: RawObjectives
    disim: DisimResult
    populations: list[PopulationResult]
    reference: EvaluationContext
    degenerate: bool = False

    @property
    def trace(self) -> list[GenerationStats]:
        return [row for pop in self.populations for row in pop.trace]

    def trace_frame(self) -> pd.DataFrame:
        rows = [
            (s.population, s.generation, s.best_fitness, s.mean_fitness, s.best_sce, s.best_dist, s.n_clusters)
            for s in self.trace
        ]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)

    def write_trace(self, path: Union[str, Path]) -> None:
        self.trace_frame().to_csv(path, index=False, float_format="%.9f", lineterminator="\n")


def _context_for(
    g: WeightedDeterministicGraph,
    t_matrix: TimeMatrix,
    cfg: GAConfig,
    cache: PermutationCache,
) -> tuple[SimilarityMatrix, EvaluationContext]:
    sim = random_walk_similarity(transition_matrix(g), cfg.walk_order)
    ctx = EvaluationContext(
        t_matrix=t_matrix,
        dissimilarity=dissimilarity(sim),
        weights=cfg.weights,
        sce_mode=cfg.sce_mode,
        sc_evidence=cfg.sc_evidence,
        dist_scaling=cfg.dist_scaling,
        penalty=cfg.penalty,
        max_tc_candidates=cfg.max_tc_candidates,
        two_opt_max_nodes=cfg.two_opt_max_nodes,
        permutations=cache,
    )
    return sim, ctx


def check_elitism(population: int, generation: int, previous: float, current: float) -> None:
    """Raise if a generation best fell below the one before it (frozen DIST bounds only)."""
    if current < previous - 1e-9:
        raise InvariantViolation(
            f"population {population} lost its elite in generation {generation}: "
            f"best fitness {current:.9f} < {previous:.9f}"
        )


def _draw_children(parents: list[Chromosome], need: int, rng: np.random.Generator) -> list[Chromosome]:
    children: list[Chromosome] = []
    while len(children) < need:
        order = rng.permutation(len(parents))
        if order.size == 1:
            order = np.array([0, 0])
        for a, b in zip(order[0::2], order[1::2]):
            children.extend(crossover(parents[a], parents[b], rng))
            if len(children) >= need:
                break
    return children[:need]


def run_population(
    index: int,
    g: WeightedDeterministicGraph,
    t_matrix: TimeMatrix,
    cfg: GAConfig,
    seed: np.random.SeedSequence,
    cache: PermutationCache,
) -> PopulationResult:
    """Evolve one population for cfg.generations (or until it stagnates)."""
    sim, ctx = _context_for(g, t_matrix, cfg, cache)
    weights = g.weight_matrix()
    streams = seed.spawn(cfg.generations + 1)
    members = init_population(g, sim, cfg, np.random.default_rng(streams[0])).members

    bounds: Optional[DistBounds] = None
    trace: list[GenerationStats] = []
    best_seen = -math.inf
    stagnant = 0
    stopped_early = False
    n_local = int(round(cfg.local_search_fraction * cfg.pop_size))

    for gen in range(cfg.generations):
        rng = np.random.default_rng(streams[gen + 1])
        raws = [evaluate_raw(m, ctx) for m in members]
        if bounds is None or cfg.dist_normalization == "generation":
            bounds = DistBounds.of([r.dist for r in raws])
        fit, _ = population_fitness(raws, cfg.weights, bounds)

        for i in np.argsort(-fit, kind="stable")[:n_local]:
            candidate = local_search(members[i], sim)
            if same_partition(candidate, members[i]):
                continue
            raw = evaluate_raw(candidate, ctx)
            score = fitness_from_raw(raw, cfg.weights, bounds)
            if score >= fit[i]:
                members[i], raws[i], fit[i] = candidate, raw, score

        best = int(np.argmax(fit))
        if cfg.dist_normalization == "frozen" and trace:
            check_elitism(index, gen, trace[-1].best_fitness, float(fit[best]))
        trace.append(GenerationStats(
            population=index,
            generation=gen,
            best_fitness=float(fit[best]),
            mean_fitness=float(fit.mean()),
            best_sce=raws[best].sce,
            best_dist=raws[best].dist,
            n_clusters=n_clusters(members[best]),
        ))
        logger.debug("population %d generation %d: best %.6f mean %.6f", index, gen, fit[best], fit.mean())

        if fit[best] > best_seen + 1e-12:
            best_seen, stagnant = float(fit[best]), 0
        else:
            stagnant += 1
        if cfg.stagnation_limit and stagnant >= cfg.stagnation_limit:
            stopped_early = gen < cfg.generations - 1
            break
        if gen == cfg.generations - 1:
            break

        parents = [members[i] for i in select(fit)]
        children = _draw_children(parents, cfg.pop_size - len(parents), rng)
        children = [mutate(c, cfg.mutation_prob, rng) for c in children]
        members = parents + [
            merge_clusters(c, weights, rng) if rng.random() * 100.0 < cfg.merge_prob else c for c in children
        ]

    logger.info(
        "population %d (lambda=%.2f, %d edges): best fitness %.6f with %d clusters after %d generation(s)",
        index, g.lam, g.number_of_edges(), fit[best], n_clusters(members[best]), len(trace),
    )
    return PopulationResult(
        index=index,
        threshold=g.lam,
        best=members[best],
        best_fitness=float(fit[best]),
        best_raw=raws[best],
        bounds=bounds,
        trace=trace,
        stopped_early=stopped_early,
    )


def evolve(
    g_prob: ProbabilisticGraph,
    t_matrix: TimeMatrix,
    cfg: GAConfig,
    thresholds: Optional[Iterable[float]] = None,
    cache_dir: Optional[str] = None,
) -> GAResult:
    """
    Run one population per threshold and return the best chromosome overall.
    Population bests are compared on the lowest-threshold context, with DIST
    scaled by the bounds population 0 evolved under.
    """
    n = len(g_prob)
    if n == 0:
        raise ValueError("cannot cluster an empty graph")
    if len(t_matrix) != n:
        raise ValueError(f"time matrix covers {len(t_matrix)} nodes, graph has {n}")

    family = threshold_family(g_prob, thresholds)
    cache = PermutationCache(
        context=permutation_context(t_matrix, cfg.penalty, cfg.max_tc_candidates, cfg.two_opt_max_nodes),
        cache_dir=cache_dir,
    )
    _, reference = _context_for(family[0], t_matrix, cfg, cache)

    if all(g.number_of_edges() == 0 for g in family):
        logger.warning("All %d thresholded subgraphs are edgeless; returning all-singleton partition", len(family))
        best = np.arange(n, dtype=np.int64)
        raw = evaluate_raw(best, reference)
        return GAResult(
            best=best,
            fitness=fitness_from_raw(raw, cfg.weights, DistBounds.attainable(cfg.weights.dist_w, n, cfg.dist_scaling)),
            threshold=family[0].lam,
            raw=raw,
            disim=disim(best, reference.dissimilarity),
            populations=[],
            reference=reference,
            degenerate=True,
        )

    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(len(family))
    jobs = [(i, g, t_matrix, cfg, seeds[i], cache) for i, g in enumerate(family)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            populations = list(pool.map(lambda job: run_population(*job), jobs))
    else:
        populations = [run_population(*job) for job in jobs]

    raws = [evaluate_raw(p.best, reference) for p in populations]
    scores, _ = population_fitness(raws, cfg.weights, populations[0].bounds)
    winner = int(np.argmax(scores))
    best = populations[winner].best
    logger.info(
        "Best chromosome from lambda=%.2f: %d clusters, fitness %.6f (permutation cache %d hits / %d misses)",
        populations[winner].threshold, n_clusters(best), scores[winner], cache.hits, cache.misses,
    )
    return GAResult(
        best=best,
        fitness=float(scores[winner]),
        threshold=populations[winner].threshold,
        raw=raws[winner],
        disim=disim(best, reference.dissimilarity),
        populations=populations,
        reference=reference,
    )
