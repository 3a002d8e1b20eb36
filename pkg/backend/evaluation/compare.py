"""
Compare the GA against the baselines on one scenario over several seeds.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Union

import pandas as pd

from backend.clustering.baselines import pkwik_baseline, threshold_components
from backend.clustering.chromosome import Chromosome
from backend.clustering.ga import evolve
from backend.config import GAConfig
from backend.evaluation.metrics import score
from backend.ingest.matrices import IngestResult, NodeRegistry, ingest
from backend.simulator.engine import run_scenario
from backend.simulator.network import ground_truth
from backend.simulator.scenarios import ScenarioSpec

logger = logging.getLogger(__name__)

Method = Literal["proposed", "pkwik", "components"]
METHODS: tuple[Method, ...] = ("proposed", "pkwik", "components")
RUN_COLUMNS = ["scenario", "method", "seed", "ari", "nmi", "purity", "n_clusters"]
METRICS = ["ari", "nmi", "purity", "n_clusters"]


def run_method(method: Method, data: IngestResult, ga: GAConfig, seed: int) -> Chromosome:
    if method == "proposed":
        return evolve(data.graph, data.symmetric_times, ga.model_copy(update={"rng_seed": seed})).best
    if method == "pkwik":
        return pkwik_baseline(data.graph, seed)
    if method == "components":
        return threshold_components(data.graph)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class Comparison:
    runs: pd.DataFrame

    def aggregate(self) -> pd.DataFrame:
        """Mean and standard deviation of each metric per method (method order preserved)."""
        grouped = self.runs.groupby("method", sort=False)[METRICS]
        table = grouped.agg(["mean", "std"])
        table.columns = [f"{metric}_{stat}" for metric, stat in table.columns]
        return table.reset_index()

    def to_text(self) -> str:
        agg = self.aggregate()
        lines = [f"{'method':<12}" + "".join(f"{m:>20}" for m in METRICS)]
        for _, row in agg.iterrows():
            cells = "".join(
                f"{row[f'{m}_mean']:>11.4f} ± {0.0 if pd.isna(row[f'{m}_std']) else row[f'{m}_std']:<6.4f}"
                for m in METRICS
            )
            lines.append(f"{row['method']:<12}{cells}")
        return "\n".join(lines)

    def write(self, out_dir: Union[str, Path]) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.runs.to_csv(out / "comparison_runs.csv", index=False, float_format="%.6f", lineterminator="\n")
        self.aggregate().to_csv(out / "comparison_summary.csv", index=False, float_format="%.6f", lineterminator="\n")
        (out / "comparison.txt").write_text(self.to_text() + "\n", encoding="utf-8")


def _one_seed(spec: ScenarioSpec, seed: int, methods: Iterable[Method], ga: GAConfig, symmetrize: str) -> list[tuple]:
    run = run_scenario(spec.with_sim(rng_seed=seed))
    registry = NodeRegistry(run.network.node_ids)
    data = ingest(run.result.records, registry, symmetrize=symmetrize)
    truth = ground_truth(run.network, registry.nodes)
    rows = []
    for method in methods:
        s = score(run_method(method, data, ga, seed), truth)
        logger.info("%s seed %d %s: ari=%.4f nmi=%.4f purity=%.4f", spec.name, seed, method, s.ari, s.nmi, s.purity)
        rows.append((spec.name, method, seed, s.ari, s.nmi, s.purity, s.n_clusters_pred))
    return rows


def compare(
    spec: ScenarioSpec,
    seeds: Iterable[int],
    ga: GAConfig,
    methods: Iterable[Method] = METHODS,
    symmetrize: str = "max",
    workers: int = 1,
) -> Comparison:
    """One simulation per seed; every method clusters the same ingested data."""
    seeds, methods = list(seeds), list(methods)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda s: _one_seed(spec, s, methods, ga, symmetrize), seeds))
    else:
        chunks = [_one_seed(spec, s, methods, ga, symmetrize) for s in seeds]
    rows = [row for chunk in chunks for row in chunk]
    return Comparison(runs=pd.DataFrame(rows, columns=RUN_COLUMNS))
