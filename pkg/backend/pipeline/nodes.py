"""
LangGraph node implementations for the sectorization pipeline.
Stages: simulate (optional), ingest, cluster, evaluate (optional).
"""
import logging
import time
from functools import wraps
from pathlib import Path
from typing import Callable

from pydantic import ValidationError

from backend.clustering.ga import evolve
from backend.config import CACHE_DIR, GAConfig, SimConfig
from backend.errors import InputError, SectorizationError
from backend.evaluation.metrics import align_labels, score
from backend.ingest.matrices import IngestAccumulator, NodeRegistry
from backend.ingest.records import batch_by_period, read_labels, read_records
from backend.pipeline import artifacts
from backend.pipeline.state import PipelineState, StageRecord, record_stage
from backend.simulator.engine import run_scenario
from backend.simulator.scenarios import load_scenario

logger = logging.getLogger(__name__)


def _stage(name: str) -> Callable:
    """Time the stage, record it, and turn failures into error_message + exit_code."""
    def decorator(fn: Callable[[PipelineState], PipelineState]):
        @wraps(fn)
        def wrapper(state: PipelineState) -> PipelineState:
            start = time.time()
            try:
                state = fn(state)
                record_stage(state, StageRecord(name, int((time.time() - start) * 1000), True))
            except ValidationError as e:
                logger.error("Stage %s rejected its configuration: %s", name, e)
                state["error_message"] = f"invalid configuration: {e}"
                state["exit_code"] = InputError.exit_code
                state["current_stage"] = "done"
                record_stage(state, StageRecord(name, int((time.time() - start) * 1000), False, str(e)))
            except SectorizationError as e:
                logger.error("Stage %s failed: %s", name, e)
                state["error_message"] = str(e)
                state["exit_code"] = e.exit_code
                state["current_stage"] = "done"
                record_stage(state, StageRecord(name, int((time.time() - start) * 1000), False, str(e)))
            except Exception as e:
                logger.exception("Stage %s failed unexpectedly", name)
                state["error_message"] = f"{type(e).__name__}: {e}"
                state["exit_code"] = 4
                state["current_stage"] = "done"
                record_stage(state, StageRecord(name, int((time.time() - start) * 1000), False, str(e)))
            return state
        return wrapper
    return decorator


def _out(state: PipelineState):
    return Path(state["output_dir"]) if state.get("output_dir") else None


@_stage("simulate")
def simulate_node(state: PipelineState) -> PipelineState:
    spec = load_scenario(state["scenario"])
    spec = spec.with_sim(**{**state["sim_overrides"], "rng_seed": state["seed"]})
    run = run_scenario(spec)

    state["records"] = run.result.records
    state["node_ids"] = list(run.network.node_ids)
    state["truth"] = run.network.sector_labels()
    state["sim_metadata"] = run.metadata
    state["report_period"] = spec.sim.report_period
    if _out(state):
        artifacts.write_simulation(run, _out(state))
    state["current_stage"] = "ingest"
    return state


@_stage("ingest")
def ingest_node(state: PipelineState) -> PipelineState:
    if state.get("records_path"):
        state["records"] = read_records(state["records_path"])
    if state.get("truth_path"):
        state["truth"] = read_labels(state["truth_path"])

    if state.get("node_ids"):
        registry = NodeRegistry(state["node_ids"])
    elif state.get("truth"):
        registry = NodeRegistry(sorted(state["truth"]))
    else:
        registry = NodeRegistry.from_records(state["records"])
    if len(registry) == 0:
        raise InputError("no lights to cluster: empty record set and no node list")

    period = state.get("report_period") or SimConfig().report_period
    gateway = IngestAccumulator(registry, symmetrize=state["symmetrize"])
    for batch in batch_by_period(state["records"], period):
        gateway.add_batch(batch)
    data = gateway.snapshot()
    logger.info("Gateway ingested %d reporting period(s) of %.0f s", gateway.batches_seen, period)
    state["ingest_result"] = data
    if _out(state):
        artifacts.write_ingest(data, _out(state))
    state["current_stage"] = "cluster"
    return state


@_stage("cluster")
def cluster_node(state: PipelineState) -> PipelineState:
    data = state["ingest_result"]
    cfg = GAConfig.model_validate({**state["ga_config"], "rng_seed": state["seed"]})
    result = evolve(data.graph, data.symmetric_times, cfg, cache_dir=CACHE_DIR)

    state["ga_result"] = result
    state["prediction"] = artifacts.prediction_labels(result, data.registry.nodes)
    if _out(state):
        artifacts.write_clustering(result, data.registry.nodes, _out(state))
    state["current_stage"] = "evaluate" if state.get("truth") else "done"
    return state


@_stage("evaluate")
def evaluate_node(state: PipelineState) -> PipelineState:
    _, pred, truth = align_labels(state["prediction"], state["truth"])
    result = score(pred, truth)
    state["score"] = result.to_dict()
    if _out(state):
        artifacts.write_score(result, _out(state))
    logger.info("Run %s: ari=%.4f nmi=%.4f purity=%.4f", state["run_id"], result.ari, result.nmi, result.purity)
    state["current_stage"] = "done"
    return state


def route_stage(state: PipelineState) -> str:
    """Route to the next stage based on current state."""
    if state.get("error_message"):
        return "end"
    current = state.get("current_stage", "done")
    if current in ("simulate", "ingest", "cluster", "evaluate"):
        return current
    elif current == "done":
        return "done"
    else:
        return "end"
