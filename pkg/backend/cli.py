"""
Command-line interface.

    simulate  scenario -> records.csv, truth.csv, metadata.json
    ingest    records  -> count/probability/time matrices and the probabilistic graph
    cluster   records  -> labels.csv, trace.csv, neighbors.csv
    evaluate  labels + truth -> ARI / NMI / purity
    pipeline  all stages on one scenario (or re-run a stored run_config.json)
    bench     compare the GA with the baselines across seeds
    serve     start the HTTP API

Exit codes: 0 success, 2 input error, 3 data mismatch, 4 internal error.
"""
import argparse
import logging
import sys
import uuid
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from backend.clustering.ga import evolve
from backend.config import CACHE_DIR, LOG_LEVEL, OUTPUT_ROOT, GAConfig, RunConfig
from backend.errors import InputError, SectorizationError
from backend.evaluation.compare import METHODS, compare
from backend.evaluation.metrics import align_labels, score
from backend.ingest.matrices import NodeRegistry, ingest
from backend.ingest.records import read_labels, read_records
from backend.pipeline import artifacts
from backend.pipeline.graph import run_pipeline
from backend.pipeline.state import create_initial_state
from backend.simulator.engine import run_scenario
from backend.simulator.scenarios import load_scenario

logger = logging.getLogger("backend.cli")

SIM_FLAGS = {
    "n_elements": "n-elements",
    "duration": "duration",
    "report_period": "report-period",
    "detection_radius": "detection-radius",
    "radio_radius": "radio-radius",
    "message_loss_prob": "loss",
    "advert_ttl": "advert-ttl",
}


# ============================================================================
# ARGUMENT GROUPS
# ============================================================================

def _add_sim_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("simulation")
    group.add_argument("--n-elements", type=int, help="Number of traffic elements")
    group.add_argument("--duration", type=float, help="Spawn window, seconds")
    group.add_argument("--report-period", type=float, help="Reporting period T_c, seconds")
    group.add_argument("--detection-radius", type=float, help="Radar detection radius, meters")
    group.add_argument("--radio-radius", type=float, help="Advertising radio range, meters")
    group.add_argument("--loss", type=float, help="Message loss probability in [0, 1]")
    group.add_argument("--advert-ttl", type=float, help="Seconds a cached advertisement stays pairable")


def _add_ga_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("genetic algorithm")
    group.add_argument("--pop-size", type=int, default=50)
    group.add_argument("--generations", type=int, default=100)
    group.add_argument("--mutation-prob", type=float, default=10.0, help="Percent")
    group.add_argument("--local-search-fraction", type=float, default=0.2)
    group.add_argument("--walk-order", type=int, default=4)
    group.add_argument("--w1", type=float, default=0.2, help="Weight of DIST in the fitness")
    group.add_argument("--dist-w", type=float, default=0.5, help="Inter/intra weight inside DIST")
    group.add_argument("--dist-scaling", choices=["size", "sum"], default="size",
                       help="Weigh each cluster's DIST term by its share of the lights, or add them as they are")
    group.add_argument("--sc-evidence", type=float, default=1.0,
                       help="Pseudo-intervals pulling small clusters' SC toward 0.5; 0 disables")
    group.add_argument("--merge-prob", type=float, default=30.0, help="Percent of children that join two adjacent clusters")
    group.add_argument("--cluster-size-sce", "--paper-literal-sce", dest="cluster_size_sce", action="store_true",
                       help="Divide SC mean/deviation by the cluster size instead of the interval count")
    group.add_argument("--dist-normalization", choices=["frozen", "generation"], default="frozen")
    group.add_argument("--early-stop", type=int, nargs="?", const=25, default=None, metavar="N",
                       help="Stop a population after N generations without improvement (default 25)")
    group.add_argument("--workers", type=int, default=1, help="Threads for the six populations")
    group.add_argument("--symmetrize", choices=["max", "mean"], default="max")


def _ga_config(args: argparse.Namespace) -> GAConfig:
    return GAConfig(
        pop_size=args.pop_size,
        generations=args.generations,
        mutation_prob=args.mutation_prob,
        local_search_fraction=args.local_search_fraction,
        walk_order=args.walk_order,
        weights={"w1": args.w1, "dist_w": args.dist_w},
        sce_mode="cluster_size" if args.cluster_size_sce else "intervals",
        sc_evidence=args.sc_evidence,
        dist_scaling=args.dist_scaling,
        merge_prob=args.merge_prob,
        dist_normalization=args.dist_normalization,
        stagnation_limit=args.early_stop,
        workers=args.workers,
        rng_seed=args.seed,
    )


def _sim_overrides(args: argparse.Namespace) -> dict:
    return {field: getattr(args, flag.replace("-", "_")) for field, flag in SIM_FLAGS.items()
            if getattr(args, flag.replace("-", "_"), None) is not None}


def _out_dir(args: argparse.Namespace, default_name: str) -> Path:
    out = Path(args.out) if args.out else Path(OUTPUT_ROOT) / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_simulate(args: argparse.Namespace) -> int:
    spec = load_scenario(args.scenario)
    spec = spec.with_sim(**{**_sim_overrides(args), "rng_seed": args.seed})
    run = run_scenario(spec)
    out = _out_dir(args, f"{spec.name}-seed{args.seed}")
    for path in artifacts.write_simulation(run, out):
        print(path)
    return 0


def _registry(records, nodes_path: Optional[str]) -> NodeRegistry:
    if nodes_path:
        return NodeRegistry(sorted(read_labels(nodes_path)))
    return NodeRegistry.from_records(records)


def cmd_ingest(args: argparse.Namespace) -> int:
    records = read_records(args.records)
    data = ingest(records, _registry(records, args.nodes), symmetrize=args.symmetrize)
    out = _out_dir(args, Path(args.records).stem + "-ingest")
    for path in artifacts.write_ingest(data, out):
        print(path)
    print(f"{len(data.registry)} lights, {data.graph.number_of_edges()} edges, {data.rejected} rejected record(s)")
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    records = read_records(args.records)
    registry = _registry(records, args.nodes)
    if len(registry) == 0:
        raise InputError(f"{args.records}: no records and no node list")
    cfg = _ga_config(args)
    data = ingest(records, registry, symmetrize=args.symmetrize)
    result = evolve(data.graph, data.symmetric_times, cfg, cache_dir=CACHE_DIR)

    out = _out_dir(args, Path(args.records).stem + "-cluster")
    for path in artifacts.write_clustering(result, registry.nodes, out):
        print(path)
    artifacts.write_json({"records": str(args.records), "nodes": args.nodes, "ga": cfg.model_dump(mode="json"),
                          "symmetrize": args.symmetrize}, out / "run_config.json")
    print(f"{int(result.best.max()) + 1} sectors, fitness {result.fitness:.6f} (lambda={result.threshold:.1f})")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    pred = read_labels(args.pred)
    truth = read_labels(args.truth)
    _, p, t = align_labels(pred, truth, context=f"{args.pred} vs {args.truth}")
    result = score(p, t)
    print(f"ari={result.ari:.6f} nmi={result.nmi:.6f} purity={result.purity:.6f} "
          f"clusters={result.n_clusters_pred} sectors={result.n_clusters_true}")
    if args.out:
        print(artifacts.write_score(result, _out_dir(args, "evaluate")))
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    if args.from_config:
        run_config = RunConfig.model_validate_json(Path(args.from_config).read_text(encoding="utf-8"))
    else:
        if not args.scenario:
            raise InputError("pipeline needs a scenario or --from-config")
        ga = _ga_config(args)
        name = load_scenario(args.scenario).name
        run_config = RunConfig(
            scenario=args.scenario,
            seed=args.seed,
            output_dir=str(_out_dir(args, f"{name}-seed{args.seed}")),
            sim_overrides=_sim_overrides(args),
            ga=ga,
            symmetrize=args.symmetrize,
        )
    out = Path(args.out) if args.out else Path(run_config.output_dir or OUTPUT_ROOT)
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_json(run_config.model_dump(mode="json"), out / "run_config.json")

    state = create_initial_state(
        run_id=str(uuid.uuid4()),
        scenario=run_config.scenario,
        output_dir=str(out),
        seed=run_config.seed,
        sim_overrides=run_config.sim_overrides,
        ga_config=run_config.ga.model_dump(),
        symmetrize=run_config.symmetrize,
    )
    final = run_pipeline(state)
    if final.get("error_message"):
        print(f"error: {final['error_message']}", file=sys.stderr)
        return final.get("exit_code") or 4
    s = final.get("score") or {}
    print(f"{out}: ari={s.get('ari', float('nan')):.6f} nmi={s.get('nmi', float('nan')):.6f} "
          f"purity={s.get('purity', float('nan')):.6f} stages={','.join(final['stages_completed'])}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    if args.from_config:
        run_config = RunConfig.model_validate_json(Path(args.from_config).read_text(encoding="utf-8"))
    else:
        if not args.scenario:
            raise InputError("bench needs a scenario or --from-config")
        run_config = RunConfig(
            scenario=args.scenario,
            seed=args.seed,
            sim_overrides=_sim_overrides(args),
            ga=_ga_config(args),
            seeds=args.seeds or [args.seed],
            symmetrize=args.symmetrize,
        )
    if not run_config.seeds:
        raise InputError("bench needs at least one seed")
    spec = load_scenario(run_config.scenario)
    if run_config.sim_overrides:
        spec = spec.with_sim(**run_config.sim_overrides)
    out = _out_dir(args, f"{spec.name}-bench")
    artifacts.write_json(run_config.model_copy(update={"output_dir": str(out)}).model_dump(mode="json"),
                         out / "run_config.json")

    comparison = compare(spec, run_config.seeds, run_config.ga, methods=args.methods,
                         symmetrize=run_config.symmetrize, workers=args.bench_workers)
    comparison.write(out)
    print(comparison.to_text())
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn
    uvicorn.run("backend.app:app", host=args.host, port=args.port)
    return 0


# ============================================================================
# ENTRY POINT
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streetlight", description="Streetlight neighbor-relationship discovery")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="DEBUG, INFO, WARNING, ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Simulate a scenario into association records")
    p.add_argument("scenario", help="Bundled scenario name or path to a .scenario file")
    p.add_argument("--out", help="Output directory")
    p.add_argument("--seed", type=int, default=0)
    _add_sim_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="Build matrices and the probabilistic graph from records")
    p.add_argument("records")
    p.add_argument("--nodes", help="node,sector CSV fixing the light set (e.g. truth.csv)")
    p.add_argument("--symmetrize", choices=["max", "mean"], default="max")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster", help="Discover sectors from records")
    p.add_argument("records")
    p.add_argument("--nodes", help="node,sector CSV fixing the light set (e.g. truth.csv)")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    _add_ga_args(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="Score predicted labels against ground truth")
    p.add_argument("pred")
    p.add_argument("truth")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="Simulate, ingest, cluster and evaluate")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--from-config", help="Re-run a stored run_config.json")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    _add_sim_args(p)
    _add_ga_args(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("bench", help="Compare the GA with the baselines across seeds")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--from-config", help="Re-run a stored bench run_config.json")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", nargs="+", choices=list(METHODS), default=list(METHODS))
    p.add_argument("--bench-workers", type=int, default=1, help="Seeds run in parallel")
    p.add_argument("--out")
    _add_sim_args(p)
    _add_ga_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="Start the HTTP API")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=7860)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SectorizationError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return InputError.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        return 4


if __name__ == "__main__":
    sys.exit(main())
