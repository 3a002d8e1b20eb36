"""
Partition agreement between a predicted sectorization and the ground truth.
"""
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from backend.clustering.chromosome import Chromosome
from backend.errors import DataMismatchError
from backend.graph.core import NodeId


@dataclass(frozen=True)
class PartitionScore:
    ari: float
    nmi: float
    purity: float
    n_clusters_pred: int
    n_clusters_true: int

    def to_dict(self) -> dict:
        return asdict(self)


def purity(pred: Chromosome, truth: Chromosome) -> float:
    """Fraction of nodes in the majority true sector of their predicted cluster."""
    table = contingency_matrix(truth, pred)
    return float(table.max(axis=0).sum() / table.sum())


def score(pred: Chromosome, truth: Chromosome) -> PartitionScore:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"partition lengths differ: predicted {pred.size}, truth {truth.size}")
    if pred.size == 0:
        raise ValueError("cannot score empty partitions")
    return PartitionScore(
        ari=float(adjusted_rand_score(truth, pred)),
        nmi=float(normalized_mutual_info_score(truth, pred)),
        purity=purity(pred, truth),
        n_clusters_pred=int(np.unique(pred).size),
        n_clusters_true=int(np.unique(truth).size),
    )


def align_labels(
    pred: dict[NodeId, object],
    truth: dict[NodeId, object],
    context: str = "evaluate",
) -> tuple[list[NodeId], np.ndarray, np.ndarray]:
    """Label arrays over the shared node set (sorted); differing node sets raise DataMismatchError."""
    missing = set(truth) - set(pred)
    unexpected = set(pred) - set(truth)
    if missing or unexpected:
        raise DataMismatchError(missing, unexpected, context)
    nodes = sorted(truth)
    return nodes, _encode([pred[n] for n in nodes]), _encode([truth[n] for n in nodes])


def _encode(values: list) -> np.ndarray:
    _, codes = np.unique(np.asarray([str(v) for v in values]), return_inverse=True)
    return codes.reshape(-1)
