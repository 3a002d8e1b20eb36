"""
Chromosome encoding: one cluster label per node, indexed by dense node index.
Labels are kept canonical (renumbered by first occurrence) so equal
partitions have equal encodings.
"""
import numpy as np

Chromosome = np.ndarray


def canonicalize(labels) -> Chromosome:
    labels = np.asarray(labels)
    if labels.size == 0:
        return labels.astype(np.int64)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


def clusters_of(labels: Chromosome) -> list[np.ndarray]:
    """Member indices per cluster, in label order."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    return np.split(order, bounds)


def n_clusters(labels: Chromosome) -> int:
    return int(np.unique(labels).size)


def one_hot(labels: Chromosome) -> np.ndarray:
    labels = canonicalize(labels)
    k = int(labels.max()) + 1 if labels.size else 0
    m = np.zeros((labels.size, k))
    m[np.arange(labels.size), labels] = 1.0
    return m


def same_partition(a: Chromosome, b: Chromosome) -> bool:
    return np.array_equal(canonicalize(a), canonicalize(b))
