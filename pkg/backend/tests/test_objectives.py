"""
Test cases for SC / SCE, DIST, DISIM and the weighted fitness.
"""
import math

import numpy as np
import pytest

from backend.clustering.chromosome import canonicalize, clusters_of, one_hot, same_partition
from backend.clustering.objectives import (
    DistBounds,
    EvaluationContext,
    RawObjectives,
    disim,
    dist,
    fitness,
    neighbor_table,
    population_fitness,
    sc,
    sce,
    score_intervals,
)
from backend.config import NEUTRAL_SC, FitnessWeights, TrafficMix
from backend.ingest.matrices import NodeRegistry, TimeMatrix, ingest
from backend.simulator.engine import run_scenario
from backend.simulator.network import ground_truth
from backend.simulator.scenarios import load_scenario


def block_dissimilarity() -> np.ndarray:
    """Four nodes: {0, 1} and {2, 3} at distance 0 inside, 1 across."""
    d = 1.0 - np.eye(4)
    d[0, 1] = d[1, 0] = d[2, 3] = d[3, 2] = 0.0
    return d


def three_chain_times() -> TimeMatrix:
    """Nodes 0-1-2 three seconds apart; node 3 never observed."""
    t = np.full((4, 4), np.nan)
    t[0, 1] = t[1, 0] = t[1, 2] = t[2, 1] = 3.0
    t[0, 2] = t[2, 0] = 6.0
    return TimeMatrix(t)


class TestChromosome:
    """Test suite for chromosome helpers."""

    def test_canonical_labels(self):
        """TC-CHR-001: Labels are renumbered by first occurrence."""
        assert canonicalize([5, 5, 2, 9, 2]).tolist() == [0, 0, 1, 2, 1]

    def test_clusters_and_one_hot(self):
        """TC-CHR-002: Member lists and one-hot columns agree."""
        x = np.array([0, 1, 0, 2])
        assert [c.tolist() for c in clusters_of(x)] == [[0, 2], [1], [3]]
        assert one_hot(x).sum(axis=0).tolist() == [2.0, 1.0, 1.0]

    def test_same_partition(self):
        """TC-CHR-003: Relabelled partitions compare equal."""
        assert same_partition([1, 1, 0], [4, 4, 7])
        assert not same_partition([1, 1, 0], [1, 0, 0])


class TestSpeedConsistency:
    """Test suite for SC and SCE."""

    def test_two_intervals(self):
        """TC-SC-001: Intervals 1 and 3 give mu 2, sigma 1, SC = 1 - tanh(0.5)."""
        result = score_intervals(np.array([1.0, 3.0]))
        assert result.mu == 2.0
        assert result.sigma == 1.0
        assert result.sc == pytest.approx(1.0 - math.tanh(0.5))

    def test_constant_speed(self):
        """TC-SC-002: Identical intervals give SC = 1."""
        assert score_intervals(np.array([3.0, 3.0, 3.0])).sc == 1.0

    def test_cluster_size_denominator(self):
        """TC-SC-003: The cluster-size variant divides mu and sigma by n_c."""
        result = score_intervals(np.array([1.0, 3.0]), n_c=3, mode="cluster_size")
        mu = 4.0 / 3.0
        sigma = math.sqrt(((1.0 - mu) ** 2 + (3.0 - mu) ** 2) / 3.0)
        assert result.sc == pytest.approx(1.0 - math.tanh(sigma / mu))

    def test_missing_interval_scales_by_coverage(self):
        """TC-SC-004: One of two intervals absent halves the score."""
        assert score_intervals(np.array([2.0, np.nan])).sc == pytest.approx(0.5)

    def test_nothing_observed_is_neutral(self):
        """TC-SC-005: No observed interval gives the neutral score."""
        result = score_intervals(np.array([np.nan]))
        assert result.sc == NEUTRAL_SC
        assert result.scoreable is False

    def test_singleton_neutral(self):
        """TC-SC-006: Singletons score neutral."""
        assert sc([2], three_chain_times()).sc == NEUTRAL_SC

    def test_sce_is_mean_over_clusters(self):
        """TC-SC-007: Without shrinkage the chain scores 1, the lone node 0.5, SCE = 0.75."""
        ctx = EvaluationContext(t_matrix=three_chain_times(), dissimilarity=block_dissimilarity(), sc_evidence=0.0)
        assert sce(np.array([0, 0, 0, 1]), ctx) == pytest.approx(0.75)

    def test_evidence_shrinks_toward_neutral(self):
        """TC-SC-008: Two observed intervals and one pseudo-interval: (2 * 1 + 0.5) / 3 for the chain."""
        ctx = EvaluationContext(t_matrix=three_chain_times(), dissimilarity=block_dissimilarity(), sc_evidence=1.0)
        assert sce(np.array([0, 0, 0, 1]), ctx) == pytest.approx((2.5 / 3 + 0.5) / 2)

    def test_pair_no_longer_free(self):
        """TC-SC-009: A perfect pair ranks below a long, slightly uneven chain once shrunk."""
        pair = score_intervals(np.array([4.0]))
        chain = score_intervals(np.array([3.0, 3.2, 2.9, 3.1, 3.0]))
        assert pair.sc > chain.sc
        assert pair.shrunk(1.0) == pytest.approx(0.75)
        assert chain.shrunk(1.0) > pair.shrunk(1.0)

    def test_shrink_skips_neutral_scores(self):
        """TC-SC-010: Unscoreable clusters stay at the neutral score under any shrinkage."""
        assert sc([2], three_chain_times()).shrunk(5.0) == NEUTRAL_SC


class TestDist:
    """Test suite for the DIST objective."""

    def test_block_partition(self):
        """TC-DIST-001: Perfect blocks: D_intra 0, D_inter 1; summed 2 * 0.5 = 1, size-weighted 0.5."""
        x = np.array([0, 0, 1, 1])
        assert dist(x, block_dissimilarity(), dist_w=0.5, scaling="sum") == pytest.approx(1.0)
        assert dist(x, block_dissimilarity(), dist_w=0.5) == pytest.approx(0.5)

    def test_single_cluster(self):
        """TC-DIST-002: Everything together: no inter term, D_intra = 8 / 12."""
        assert dist(np.zeros(4, dtype=int), block_dissimilarity()) == pytest.approx(-2.0 / 3.0)

    def test_singletons_have_no_intra(self):
        """TC-DIST-003: All singletons: D_intra 0 and each D_inter the mean distance to the rest."""
        d = block_dissimilarity()
        expected = sum(0.5 * d[i].sum() / 3 for i in range(4))
        assert dist(np.arange(4), d, scaling="sum") == pytest.approx(expected)
        assert dist(np.arange(4), d) == pytest.approx(expected / 4)

    def test_better_partition_scores_higher(self):
        """TC-DIST-004: The block partition beats a mixed one."""
        d = block_dissimilarity()
        assert dist(np.array([0, 0, 1, 1]), d) > dist(np.array([0, 1, 0, 1]), d)

    def test_size_scaling_does_not_reward_splitting(self):
        """TC-DIST-005: Splitting a tight block into singletons cannot push size-scaled DIST above w."""
        d = block_dissimilarity()
        for x in ([0, 0, 1, 1], [0, 1, 2, 2], [0, 1, 2, 3]):
            assert dist(np.array(x), d) <= 0.5 + 1e-12
        assert dist(np.array([0, 1, 2, 3]), d, scaling="sum") > dist(np.array([0, 1, 2, 3]), d)


class TestDisim:
    """Test suite for the silhouette-style DISIM metric."""

    def test_block_partition(self):
        """TC-DSM-001: Perfect blocks give silhouette 1."""
        assert disim(np.array([0, 0, 1, 1]), block_dissimilarity()).value == pytest.approx(1.0)

    def test_one_cluster_is_degenerate(self):
        """TC-DSM-002: A single cluster is flagged degenerate."""
        result = disim(np.zeros(4, dtype=int), block_dissimilarity())
        assert result.degenerate is True
        assert result.value == 0.0

    def test_all_singletons(self):
        """TC-DSM-003: All singletons score 0."""
        assert disim(np.arange(4), block_dissimilarity()).value == 0.0

    def test_random_labels_on_uniform_dissimilarity(self):
        """TC-DSM-004: Random labels where every pair is equally far apart average to 0."""
        rng = np.random.default_rng(8)
        d = 1.0 - np.eye(12)
        values = [disim(rng.integers(0, 3, size=12), d).value for _ in range(100)]
        assert abs(float(np.mean(values))) < 0.1

    def test_swapped_labels_negative(self):
        """TC-DSM-005: Swapping half of each clique into the other cluster gives a negative score."""
        d = np.ones((8, 8))
        d[:4, :4] = d[4:, 4:] = 0.0
        np.fill_diagonal(d, 0.0)
        assert disim(np.array([0, 0, 0, 0, 1, 1, 1, 1]), d).value == pytest.approx(1.0)
        assert disim(np.array([0, 0, 1, 1, 0, 0, 1, 1]), d).value < 0.0


class TestFitness:
    """Test suite for the weighted fitness."""

    def test_population_min_max(self):
        """TC-FIT-001: DIST is min-max scaled over the population."""
        raws = [RawObjectives(dist=-1.0, sce=0.5), RawObjectives(dist=1.0, sce=1.0), RawObjectives(dist=0.0, sce=0.0)]
        scores, bounds = population_fitness(raws, FitnessWeights(w1=0.5))
        assert bounds == DistBounds(-1.0, 1.0)
        assert scores.tolist() == pytest.approx([0.25, 1.0, 0.25])

    def test_frozen_bounds(self):
        """TC-FIT-002: Supplied bounds are used as given."""
        scores, bounds = population_fitness([RawObjectives(dist=2.0, sce=0.0)], FitnessWeights(w1=1.0), DistBounds(0.0, 4.0))
        assert scores.tolist() == [0.5]
        assert bounds == DistBounds(0.0, 4.0)

    def test_equal_dist_normalizes_to_zero(self):
        """TC-FIT-003: Zero DIST span contributes nothing."""
        assert DistBounds(1.0, 1.0).normalize(1.0) == 0.0

    def test_normalize_clips(self):
        """TC-FIT-005: Values outside frozen bounds are clipped to [0, 1]."""
        bounds = DistBounds(0.0, 1.0)
        assert bounds.normalize(2.0) == 1.0
        assert bounds.normalize(-1.0) == 0.0

    def test_single_chromosome_keeps_dist(self):
        """TC-FIT-006: Without bounds DIST is scaled by its attainable range rather than dropped."""
        ctx = EvaluationContext(t_matrix=three_chain_times(), dissimilarity=block_dissimilarity(),
                                weights=FitnessWeights(w1=1.0))
        assert fitness(np.array([0, 0, 1, 1]), ctx) == pytest.approx(1.0)
        assert fitness(np.zeros(4, dtype=int), ctx) == pytest.approx((1.0 - 2.0 / 3.0) / 1.5)
        assert DistBounds.attainable(0.5, 4, "sum") == DistBounds(-4.0, 2.0)

    def test_sce_only_weight(self):
        """TC-FIT-004: w1 = 0 leaves only SCE."""
        ctx = EvaluationContext(t_matrix=three_chain_times(), dissimilarity=block_dissimilarity(),
                                weights=FitnessWeights(w1=0.0), sc_evidence=0.0)
        assert fitness(np.array([0, 0, 0, 1]), ctx) == pytest.approx(0.75)


class TestSimulatedSpeedConsistency:
    """Test suite for SCE on simulated record streams."""

    def test_truth_beats_relabelings(self):
        """TC-SC-011: On a noise-free constant-speed corner, the road labels score at least as well as 100 shuffles of them."""
        base = load_scenario("l_corner")
        spec = base.model_copy(update={"traffic": TrafficMix(constant_speed=10.0)}).with_sim(n_elements=40)
        run = run_scenario(spec)
        registry = NodeRegistry(run.network.node_ids)
        data = ingest(run.result.records, registry)
        truth = ground_truth(run.network, registry.nodes)
        ctx = EvaluationContext(t_matrix=data.symmetric_times, dissimilarity=np.zeros((len(registry), len(registry))))

        truth_sce = sce(truth, ctx)
        rng = np.random.default_rng(0)
        for _ in range(100):
            assert truth_sce >= sce(rng.permutation(truth), ctx) - 1e-12


class TestNeighborTable:
    """Test suite for per-light neighbor listings."""

    def test_chain_neighbors(self):
        """TC-NB-001: The middle light of the chain has both ends as neighbors."""
        ctx = EvaluationContext(t_matrix=three_chain_times(), dissimilarity=block_dissimilarity())
        rows = {row.node: row for row in neighbor_table(np.array([0, 0, 0, 1]), ctx)}
        assert {rows[1].prev, rows[1].next} == {0, 2}
        assert rows[1].position == 1
        assert rows[3].prev is None and rows[3].next is None
        assert rows[3].sector == 1
