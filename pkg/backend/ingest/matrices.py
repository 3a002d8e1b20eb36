"""
Gateway-side processing of association records:
count matrix C, row-max normalized adjacency P, time matrix T,
and the probabilistic graph built from them.
"""
import hashlib
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Optional, Union

import numpy as np
import pandas as pd

from backend.graph.core import NodeId, ProbabilisticGraph
from backend.ingest.records import AssociationRecord

logger = logging.getLogger(__name__)

IntervalLists = dict[tuple[int, int], list[float]]


class NodeRegistry:
    """Known lights, with a bijective dense index 0..|V|-1."""

    def __init__(self, nodes: Iterable[NodeId]):
        self.nodes: tuple[NodeId, ...] = tuple(nodes)
        self._index = {node: i for i, node in enumerate(self.nodes)}
        if len(self._index) != len(self.nodes):
            raise ValueError("node ids must be unique")

    @classmethod
    def from_records(cls, records: Iterable[AssociationRecord]) -> "NodeRegistry":
        ids = set()
        for r in records:
            ids.add(r.receiver)
            ids.add(r.sender)
        return cls(sorted(ids))

    def __contains__(self, node: NodeId) -> bool:
        return node in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    def index(self, node: NodeId) -> int:
        return self._index[node]


@dataclass
class Accumulation:
    """Raw counts and interval lists; mergeable shard of a record stream."""
    counts: np.ndarray
    intervals: IntervalLists = field(default_factory=lambda: defaultdict(list))
    rejected_unknown: int = 0
    rejected_clock: int = 0
    rejected_self: int = 0

    @property
    def rejected(self) -> int:
        return self.rejected_unknown + self.rejected_clock + self.rejected_self

    def merge(self, other: "Accumulation") -> "Accumulation":
        """Elementwise sum of counts, concatenation of interval lists."""
        if self.counts.shape != other.counts.shape:
            raise ValueError("cannot merge accumulations over different registries")
        intervals: IntervalLists = defaultdict(list)
        for source in (self.intervals, other.intervals):
            for pair, values in source.items():
                intervals[pair].extend(values)
        return Accumulation(
            counts=self.counts + other.counts,
            intervals=intervals,
            rejected_unknown=self.rejected_unknown + other.rejected_unknown,
            rejected_clock=self.rejected_clock + other.rejected_clock,
            rejected_self=self.rejected_self + other.rejected_self,
        )


class TimeMatrix:
    """Mean advertising intervals in seconds; absent pairs are NaN."""

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values, dtype=float)
        self.values.setflags(write=False)

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def get(self, i: int, j: int) -> Optional[float]:
        v = self.values[i, j]
        return None if math.isnan(v) else float(v)

    def submatrix(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        return self.values[np.ix_(idx, idx)]

    def fingerprint(self) -> str:
        """Stable digest used to key persistent caches."""
        data = np.nan_to_num(self.values, nan=-1.0).round(9)
        return hashlib.sha256(data.tobytes()).hexdigest()[:16]

    def __len__(self) -> int:
        return self.values.shape[0]


def accumulate(records: Iterable[AssociationRecord], registry: NodeRegistry) -> Accumulation:
    """
    c_ij = number of records with receiver i and sender j; the interval list
    for (i, j) holds every receiver_time - sender_time. Bad records are
    logged, counted and skipped.
    """
    n = len(registry)
    acc = Accumulation(counts=np.zeros((n, n), dtype=np.int64))
    for record in records:
        if record.receiver not in registry or record.sender not in registry:
            acc.rejected_unknown += 1
            logger.warning("Rejected record with unknown node: %s <- %s", record.receiver, record.sender)
            continue
        if record.receiver == record.sender:
            acc.rejected_self += 1
            logger.warning("Rejected self record for %s", record.receiver)
            continue
        if record.receiver_time < record.sender_time:
            acc.rejected_clock += 1
            logger.warning(
                "Rejected record %s <- %s: receiver time %.6f precedes sender time %.6f",
                record.receiver, record.sender, record.receiver_time, record.sender_time,
            )
            continue
        i, j = registry.index(record.receiver), registry.index(record.sender)
        acc.counts[i, j] += 1
        acc.intervals[(i, j)].append(record.interval)

    if acc.rejected:
        logger.warning(
            "Ingest rejected %d record(s): %d unknown node, %d clock anomaly, %d self",
            acc.rejected, acc.rejected_unknown, acc.rejected_clock, acc.rejected_self,
        )
    return acc


def normalize(counts: np.ndarray) -> np.ndarray:
    """p_ij = c_ij / max_k c_ik; all-zero rows stay zero."""
    c = np.asarray(counts, dtype=float)
    row_max = c.max(axis=1, keepdims=True) if c.size else np.zeros((c.shape[0], 1))
    p = np.divide(c, row_max, out=np.zeros_like(c), where=row_max > 0)
    np.fill_diagonal(p, 0.0)
    return p


def mean_intervals(intervals: IntervalLists, n: int) -> TimeMatrix:
    """Directed mean interval per ordered pair; pairs without observations are absent."""
    t = np.full((n, n), np.nan)
    for (i, j), values in intervals.items():
        if values:
            # fsum keeps the mean independent of record order
            t[i, j] = math.fsum(values) / len(values)
    return TimeMatrix(t)


def symmetrize_times(t: TimeMatrix) -> TimeMatrix:
    """Mean of the present directed entries; a single observed direction is used as-is."""
    v = t.values
    both = np.stack([v, v.T])
    present = ~np.isnan(both)
    total = np.where(present, both, 0.0).sum(axis=0)
    count = present.sum(axis=0)
    sym = np.divide(total, count, out=np.full(v.shape, np.nan), where=count > 0)
    return TimeMatrix(sym)


def build_graph(
    p: np.ndarray,
    registry: NodeRegistry,
    mode: Literal["max", "mean"] = "max",
) -> ProbabilisticGraph:
    """Undirected edge (u, v) iff max(p_uv, p_vu) > 0, probability by `mode` symmetrization."""
    if mode == "max":
        sym = np.maximum(p, p.T)
    elif mode == "mean":
        sym = (p + p.T) / 2.0
    else:
        raise ValueError(f"unknown symmetrization mode {mode!r}")
    iu, ju = np.nonzero(np.triu(np.maximum(p, p.T), k=1) > 0)
    edges = [(registry.nodes[i], registry.nodes[j], float(sym[i, j])) for i, j in zip(iu, ju)]
    return ProbabilisticGraph(registry.nodes, edges)


@dataclass
class IngestResult:
    registry: NodeRegistry
    counts: np.ndarray
    adjacency: np.ndarray
    times: TimeMatrix
    symmetric_times: TimeMatrix
    graph: ProbabilisticGraph
    rejected: int = 0


class IngestAccumulator:
    """
    Incremental gateway: feed one reporting period (T_c batch) at a time,
    take a snapshot of C/P/T/graph whenever needed.
    """

    def __init__(self, registry: NodeRegistry, symmetrize: Literal["max", "mean"] = "max"):
        self.registry = registry
        self.symmetrize = symmetrize
        self._acc = Accumulation(counts=np.zeros((len(registry), len(registry)), dtype=np.int64))
        self.batches_seen = 0

    def add_batch(self, records: Iterable[AssociationRecord]) -> None:
        self._acc = self._acc.merge(accumulate(records, self.registry))
        self.batches_seen += 1

    def snapshot(self) -> IngestResult:
        return _result_from(self._acc, self.registry, self.symmetrize)


def ingest(
    records: Iterable[AssociationRecord],
    registry: NodeRegistry,
    symmetrize: Literal["max", "mean"] = "max",
) -> IngestResult:
    """One-shot accumulate -> normalize -> mean_intervals -> build_graph."""
    return _result_from(accumulate(records, registry), registry, symmetrize)


def _result_from(acc: Accumulation, registry: NodeRegistry, symmetrize: str) -> IngestResult:
    p = normalize(acc.counts)
    t = mean_intervals(acc.intervals, len(registry))
    graph = build_graph(p, registry, mode=symmetrize)
    logger.info(
        "Ingested %d records over %d lights: %d graph edges",
        int(acc.counts.sum()), len(registry), graph.number_of_edges(),
    )
    return IngestResult(
        registry=registry,
        counts=acc.counts,
        adjacency=p,
        times=t,
        symmetric_times=symmetrize_times(t),
        graph=graph,
        rejected=acc.rejected,
    )


def write_matrix(matrix: np.ndarray, registry: NodeRegistry, path: Union[str, Path], float_format: str = "%.6f") -> None:
    """CSV with node-id header row and column; NaN (absent) written as empty."""
    frame = pd.DataFrame(matrix, index=list(registry.nodes), columns=list(registry.nodes))
    frame.index.name = "node"
    frame.to_csv(path, float_format=float_format, lineterminator="\n")
