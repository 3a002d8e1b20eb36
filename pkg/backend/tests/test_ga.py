"""
Test cases for the genetic algorithm operators and the multi-population run.
"""
import itertools

import numpy as np
import pytest

from backend.clustering.baselines import pkwik_baseline, threshold_components
from backend.clustering.chromosome import same_partition
from backend.clustering.ga import (
    check_elitism,
    crossover,
    evolve,
    init_population,
    local_search,
    merge_clusters,
    mutate,
    pkwik_cluster,
    random_chromosome,
    select,
)
from backend.clustering.similarity import SimilarityMatrix, random_walk_similarity, transition_matrix
from backend.config import GAConfig
from backend.errors import InvariantViolation
from backend.graph.core import ProbabilisticGraph, apply_threshold
from backend.ingest.matrices import TimeMatrix


def two_cliques(size: int, p: float = 0.9, cross: float = 0.0) -> tuple[ProbabilisticGraph, TimeMatrix]:
    """
    Cliques a0..a{size-1} and b0..b{size-1} of probability p, optionally joined
    by one a-b edge of probability `cross`. Along each clique lights sit 3 s
    (a) or 5 s (b) apart; nothing is observed across.
    """
    a = [f"a{i}" for i in range(size)]
    b = [f"b{i}" for i in range(size)]
    edges = [(u, v, p) for group in (a, b) for u, v in itertools.combinations(group, 2)]
    if cross:
        edges.append((a[-1], b[0], cross))
    t = np.full((2 * size, 2 * size), np.nan)
    pos = np.arange(size, dtype=float)
    t[:size, :size] = 3.0 * np.abs(pos[:, None] - pos[None, :])
    t[size:, size:] = 5.0 * np.abs(pos[:, None] - pos[None, :])
    np.fill_diagonal(t, np.nan)
    return ProbabilisticGraph(a + b, edges), TimeMatrix(t)


class ScriptedPivots:
    """Generator stand-in whose `choice` takes the first still-unassigned node of a fixed order."""

    def __init__(self, order):
        self.order = order

    def choice(self, candidates):
        remaining = set(int(v) for v in candidates)
        return next(v for v in self.order if v in remaining)


def block_similarity() -> SimilarityMatrix:
    """Two blocks {0, 1, 2} and {3, 4, 5} plus an isolated node 6."""
    s = np.zeros((7, 7))
    s[:3, :3] = 1.0
    s[3:6, 3:6] = 1.0
    return SimilarityMatrix(sim=s, order=2)


class TestPkwik:
    """Test suite for pivot clustering and random initialization."""

    def test_edgeless_gives_singletons(self):
        """TC-PKW-001: Without edges every node is its own cluster."""
        g = apply_threshold(ProbabilisticGraph(["a", "b", "c"]), 0.0)
        assert pkwik_cluster(g, np.random.default_rng(0)).tolist() == [0, 1, 2]

    def test_complete_strong_graph_gives_one_cluster(self):
        """TC-PKW-002: A complete graph of weight 1 collapses to one cluster."""
        g = ProbabilisticGraph(["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)])
        assert pkwik_cluster(apply_threshold(g, 0.0), np.random.default_rng(0)).tolist() == [0, 0, 0]

    def test_weak_edges_ignored(self):
        """TC-PKW-003: Edges of weight <= 0.5 never join a pivot's cluster."""
        g = ProbabilisticGraph(["a", "b"], [("a", "b", 0.5)])
        assert pkwik_cluster(apply_threshold(g, 0.0), np.random.default_rng(0)).tolist() == [0, 1]

    def test_random_chromosome_cluster_count(self):
        """TC-PKW-004: Random chromosomes use between 2 and floor(2 * sqrt(n)) labels."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = random_chromosome(25, rng)
            assert 1 <= len(np.unique(x)) <= 10
            assert x.max() == len(np.unique(x)) - 1
        assert random_chromosome(1, rng).tolist() == [0]

    def test_population_halves(self, two_roads, small_ga):
        """TC-PKW-005: A population of 10 holds 5 pivot clusterings then 5 random labelings."""
        g_prob, _ = two_roads
        g = apply_threshold(g_prob, 0.3)
        sim = random_walk_similarity(transition_matrix(g), 4)
        population = init_population(g, sim, small_ga, np.random.default_rng(1))
        assert len(population) == small_ga.pop_size
        assert population.origins == ["pkwik"] * 5 + ["random"] * 5
        w = g.weight_matrix()
        for member, origin in zip(population.members, population.origins):
            assert member.size == len(g)
            if origin == "random":
                assert len(np.unique(member)) <= 5
                continue
            for label in np.unique(member):
                idx = np.flatnonzero(member == label)
                assert any(all(w[p, q] > 0.5 for q in idx if q != p) for p in idx)

    def test_two_cliques_under_every_pivot_order(self):
        """TC-PKW-006: Two triangles of probability 0.9 joined by a 0.4 edge split the same way for all 720 pivot orders."""
        g_prob, _ = two_cliques(3, cross=0.4)
        g = apply_threshold(g_prob, 0.0)
        for order in itertools.permutations(range(6)):
            assert pkwik_cluster(g, ScriptedPivots(order)).tolist() == [0, 0, 0, 1, 1, 1]


class TestOperators:
    """Test suite for local search, selection, crossover and mutation."""

    def test_local_search_recovers_blocks(self):
        """TC-OP-001: Nodes move to the cluster they are most similar to; isolated nodes stay."""
        x = np.array([0, 0, 1, 1, 1, 1, 2])
        assert local_search(x, block_similarity()).tolist() == [0, 0, 0, 1, 1, 1, 2]

    def test_local_search_tie_goes_to_lowest_label(self):
        """TC-OP-002: Equal similarity to two clusters picks the lower label."""
        s = np.array([
            [0.0, 1.0, 0.5, 0.0],
            [1.0, 0.0, 0.5, 0.0],
            [0.5, 0.5, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        assert local_search(np.array([0, 0, 1, 1]), SimilarityMatrix(sim=s, order=2)).tolist() == [0, 0, 0, 1]

    def test_select_top_half(self):
        """TC-OP-003: Selection keeps the best half, earlier index first on ties."""
        assert select(np.array([0.1, 0.9, 0.5, 0.9])).tolist() == [1, 3]

    def test_crossover_example(self):
        """TC-OP-004: [1,1,2,2] x [3,3,4,4] at point 2 gives [0,0,1,1] twice."""
        c1, c2 = crossover(np.array([1, 1, 2, 2]), np.array([3, 3, 4, 4]), np.random.default_rng(0), point=2)
        assert c1.tolist() == [0, 0, 1, 1]
        assert c2.tolist() == [0, 0, 1, 1]

    def test_crossover_swaps_tails(self):
        """TC-OP-005: Children take the head of one parent and the tail of the other."""
        c1, c2 = crossover(np.array([5, 5, 5, 5]), np.array([1, 2, 3, 4]), np.random.default_rng(0), point=2)
        assert c1.tolist() == [0, 0, 1, 2]
        assert c2.tolist() == [0, 1, 2, 2]

    def test_crossover_errors(self):
        """TC-OP-006: Mismatched parents and out-of-range points are rejected."""
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            crossover(np.array([0, 1]), np.array([0, 1, 2]), rng)
        with pytest.raises(ValueError):
            crossover(np.array([0, 1, 2]), np.array([0, 1, 2]), rng, point=3)

    def test_mutation_probability_zero(self):
        """TC-OP-007: Probability 0 never mutates."""
        x = np.array([0, 1, 1, 2])
        rng = np.random.default_rng(0)
        assert all(mutate(x, 0.0, rng).tolist() == x.tolist() for _ in range(50))

    def test_mutation_moves_one_node(self):
        """TC-OP-008: Probability 100 moves at most one node between clusters."""
        x = np.array([0, 0, 1, 1, 2, 2])
        rng = np.random.default_rng(3)
        together_x = x[:, None] == x[None, :]
        for _ in range(50):
            y = mutate(x, 100.0, rng)
            diff = together_x != (y[:, None] == y[None, :])
            assert any(not np.delete(np.delete(diff, g, 0), g, 1).any() for g in range(x.size))

    def test_mutation_reproducible(self):
        """TC-OP-009: Same generator state, same mutation."""
        x = np.array([0, 1, 1, 2, 0])
        assert mutate(x, 100.0, np.random.default_rng(9)).tolist() == mutate(x, 100.0, np.random.default_rng(9)).tolist()

    def test_merge_joins_across_an_edge(self):
        """TC-OP-010: The only edge crossing clusters joins its two clusters."""
        w = np.zeros((5, 5))
        w[0, 1] = w[1, 0] = w[2, 3] = w[3, 2] = 0.9
        w[3, 4] = w[4, 3] = 0.6
        assert merge_clusters(np.array([0, 0, 1, 1, 2]), w, np.random.default_rng(0)).tolist() == [0, 0, 1, 1, 1]

    def test_merge_without_crossing_edge(self):
        """TC-OP-011: With every edge inside a cluster nothing changes."""
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 0.9
        assert merge_clusters(np.array([1, 1, 0, 2]), w, np.random.default_rng(0)).tolist() == [0, 0, 1, 2]

    def test_elitism_check(self):
        """TC-OP-012: A falling generation best raises; a steady one does not."""
        check_elitism(0, 1, previous=0.7, current=0.7)
        with pytest.raises(InvariantViolation):
            check_elitism(2, 5, previous=0.8, current=0.7)


class TestEvolve:
    """Test suite for the multi-population GA."""

    @pytest.mark.parametrize("seed", range(20))
    def test_best_fitness_never_drops(self, two_roads, small_ga, seed):
        """TC-GA-001: Over 20 seeds, with frozen DIST bounds each population's best fitness is non-decreasing."""
        g_prob, t = two_roads
        result = evolve(g_prob, t, small_ga.model_copy(update={"rng_seed": seed}))
        assert len(result.populations) == 6
        for pop in result.populations:
            best = [row.best_fitness for row in pop.trace]
            assert len(best) == small_ga.generations
            assert all(b >= a - 1e-12 for a, b in zip(best, best[1:]))

    def test_deterministic(self, two_roads, small_ga):
        """TC-GA-002: Same seed, same result."""
        g_prob, t = two_roads
        first, second = evolve(g_prob, t, small_ga), evolve(g_prob, t, small_ga)
        assert first.best.tolist() == second.best.tolist()
        assert first.fitness == second.fitness
        assert first.trace_frame().equals(second.trace_frame())

    def test_threads_match_serial(self, two_roads, small_ga):
        """TC-GA-003: Running populations in threads does not change the outcome."""
        g_prob, t = two_roads
        serial = evolve(g_prob, t, small_ga)
        threaded = evolve(g_prob, t, small_ga.model_copy(update={"workers": 3}))
        assert serial.best.tolist() == threaded.best.tolist()

    def test_result_is_canonical(self, two_roads, small_ga):
        """TC-GA-004: The returned chromosome covers every node with canonical labels."""
        g_prob, t = two_roads
        result = evolve(g_prob, t, small_ga)
        assert result.best.size == len(g_prob)
        assert result.best[0] == 0
        assert result.threshold in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
        assert set(result.trace_frame()["population"]) == set(range(6))

    def test_edgeless_graph_returns_singletons(self, caplog):
        """TC-GA-005: No edges at any threshold gives all singletons with a warning."""
        g = ProbabilisticGraph(["a", "b", "c"], [("a", "b", 0.1)])
        t = TimeMatrix(np.full((3, 3), np.nan))
        result = evolve(g, t, GAConfig(pop_size=4, generations=2))
        assert result.degenerate is True
        assert result.best.tolist() == [0, 1, 2]
        assert "edgeless" in caplog.text

    def test_size_mismatch(self, two_roads, small_ga):
        """TC-GA-006: The time matrix must cover the graph's nodes."""
        g_prob, _ = two_roads
        with pytest.raises(ValueError):
            evolve(g_prob, TimeMatrix(np.full((3, 3), np.nan)), small_ga)

    def test_early_stop(self, two_roads):
        """TC-GA-007: A stagnation limit can end populations early."""
        g_prob, t = two_roads
        cfg = GAConfig(pop_size=10, generations=40, stagnation_limit=2, rng_seed=1)
        result = evolve(g_prob, t, cfg)
        assert all(len(p.trace) <= cfg.generations for p in result.populations)
        assert any(p.stopped_early for p in result.populations)

    def test_trace_file(self, two_roads, small_ga, tmp_path):
        """TC-GA-008: The trace CSV has one row per population and generation."""
        g_prob, t = two_roads
        result = evolve(g_prob, t, small_ga)
        path = tmp_path / "trace.csv"
        result.write_trace(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("population,generation,best_fitness")
        assert len(lines) == 1 + 6 * small_ga.generations

    def test_recovers_two_cliques(self):
        """TC-GA-009: Two disjoint cliques of probability 0.85 come back as exactly those two clusters after 20 generations."""
        g_prob, t = two_cliques(4, p=0.85)
        result = evolve(g_prob, t, GAConfig(pop_size=20, generations=20, rng_seed=3))
        assert same_partition(result.best, [0, 0, 0, 0, 1, 1, 1, 1])
        assert result.disim.value > 0.8


class TestBaselines:
    """Test suite for the comparison baselines."""

    def test_components_split_roads(self, two_roads):
        """TC-BASE-001: At lambda 0.5 the weak cross link is cut."""
        g_prob, _ = two_roads
        assert threshold_components(g_prob).tolist() == [0, 0, 0, 0, 1, 1, 1, 1]

    def test_pkwik_baseline_deterministic(self, two_roads):
        """TC-BASE-002: The pivot baseline is reproducible per seed."""
        g_prob, _ = two_roads
        assert pkwik_baseline(g_prob, 3).tolist() == pkwik_baseline(g_prob, 3).tolist()
