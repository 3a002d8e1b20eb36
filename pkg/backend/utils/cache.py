"""
Caching for per-cluster permutation results.
Clusters recur across chromosomes and generations, so each node set is
solved once. An in-process dict fronts an optional persistent diskcache.
"""
import hashlib
import threading
from typing import Callable, Optional

import diskcache

from backend.clustering.permutation import ClusterPermutation


class PermutationCache:
    """
    Memoize best_permutation per cluster node set.

    `context` identifies everything the result depends on besides the node
    set (time-matrix fingerprint, penalty, candidate settings); it is part of
    the persistent key so one cache directory can serve many datasets.
    """

    def __init__(self, context: str = "", cache_dir: Optional[str] = None, ttl: int = 3600 * 24 * 7):
        self.context = context
        self.ttl = ttl
        self._memory: dict[frozenset, ClusterPermutation] = {}
        self._lock = threading.Lock()
        self._disk = diskcache.Cache(cache_dir) if cache_dir else None
        self.hits = 0
        self.misses = 0

    def _make_key(self, cluster: frozenset) -> str:
        content = f"{self.context}:{','.join(str(v) for v in sorted(cluster))}"
        return hashlib.sha256(content.encode()).hexdigest()

    def get(self, cluster: frozenset) -> Optional[ClusterPermutation]:
        cached = self._memory.get(cluster)
        if cached is not None:
            return cached
        if self._disk is not None:
            cached = self._disk.get(self._make_key(cluster))
            if cached is not None:
                with self._lock:
                    self._memory[cluster] = cached
        return cached

    def set(self, cluster: frozenset, result: ClusterPermutation) -> None:
        with self._lock:
            self._memory[cluster] = result
        if self._disk is not None:
            self._disk.set(self._make_key(cluster), result, expire=self.ttl)

    def get_or_compute(self, cluster: frozenset, compute: Callable[[], ClusterPermutation]) -> ClusterPermutation:
        cached = self.get(cluster)
        with self._lock:
            if cached is not None:
                self.hits += 1
            else:
                self.misses += 1
        if cached is not None:
            return cached
        result = compute()
        self.set(cluster, result)
        return result

    def __len__(self) -> int:
        return len(self._memory)

    def clear(self) -> None:
        with self._lock:
            self._memory.clear()
        if self._disk is not None:
            self._disk.clear()
