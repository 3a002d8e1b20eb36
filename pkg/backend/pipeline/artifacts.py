"""
Files written into a run directory by each stage.

simulate: records.csv, truth.csv, metadata.json
ingest:   counts.csv, probability.csv, times.csv, graph.txt, graph.dot
cluster:  labels.csv, trace.csv, neighbors.csv, cluster_summary.json
evaluate: score.csv
"""
import csv
import json
from pathlib import Path
from typing import Union

from backend.clustering.ga import GAResult
from backend.clustering.objectives import neighbor_table
from backend.evaluation.metrics import PartitionScore
from backend.graph.core import NodeId
from backend.graph.io import to_dot, write_graph
from backend.ingest.matrices import IngestResult, write_matrix
from backend.ingest.records import write_labels, write_records
from backend.simulator.engine import ScenarioRun

PathLike = Union[str, Path]


def _dir(out_dir: PathLike) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_json(data: dict, path: PathLike) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_simulation(run: ScenarioRun, out_dir: PathLike) -> list[Path]:
    out = _dir(out_dir)
    paths = [out / "records.csv", out / "truth.csv", out / "metadata.json"]
    write_records(run.result.records, paths[0])
    write_labels(run.network.sector_labels(), paths[1])
    write_json(run.metadata, paths[2])
    return paths


def write_ingest(data: IngestResult, out_dir: PathLike) -> list[Path]:
    out = _dir(out_dir)
    write_matrix(data.counts, data.registry, out / "counts.csv", float_format="%d")
    write_matrix(data.adjacency, data.registry, out / "probability.csv")
    write_matrix(data.times.values, data.registry, out / "times.csv")
    write_graph(data.graph, out / "graph.txt")
    (out / "graph.dot").write_text(to_dot(data.graph), encoding="utf-8")
    return [out / name for name in ("counts.csv", "probability.csv", "times.csv", "graph.txt", "graph.dot")]


def prediction_labels(result: GAResult, nodes: tuple[NodeId, ...]) -> dict[NodeId, int]:
    return {node: int(label) for node, label in zip(nodes, result.best)}


def write_clustering(result: GAResult, nodes: tuple[NodeId, ...], out_dir: PathLike) -> list[Path]:
    out = _dir(out_dir)
    write_labels(prediction_labels(result, nodes), out / "labels.csv")
    result.write_trace(out / "trace.csv")

    with open(out / "neighbors.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["node", "sector", "position", "prev", "next"])
        for row in neighbor_table(result.best, result.reference):
            writer.writerow([
                nodes[row.node],
                row.sector,
                row.position,
                "" if row.prev is None else nodes[row.prev],
                "" if row.next is None else nodes[row.next],
            ])

    write_json(cluster_summary(result), out / "cluster_summary.json")
    return [out / name for name in ("labels.csv", "trace.csv", "neighbors.csv", "cluster_summary.json")]


def cluster_summary(result: GAResult) -> dict:
    return {
        "fitness": result.fitness,
        "threshold": result.threshold,
        "sce": result.raw.sce,
        "dist": result.raw.dist,
        "disim": result.disim.value,
        "disim_degenerate": result.disim.degenerate,
        "n_clusters": int(result.best.max()) + 1 if result.best.size else 0,
        "degenerate": result.degenerate,
        "populations": [
            {
                "index": p.index,
                "threshold": p.threshold,
                "best_fitness": p.best_fitness,
                "generations": len(p.trace),
                "stopped_early": p.stopped_early,
            }
            for p in result.populations
        ],
    }


def write_score(score: PartitionScore, out_dir: PathLike) -> Path:
    path = _dir(out_dir) / "score.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["ari", "nmi", "purity", "n_clusters_pred", "n_clusters_true"])
        writer.writerow([f"{score.ari:.6f}", f"{score.nmi:.6f}", f"{score.purity:.6f}",
                         score.n_clusters_pred, score.n_clusters_true])
    return path
