"""
LangGraph definition for the sectorization pipeline.
Flow: Simulate (if scenario) -> Ingest -> Cluster -> Evaluate (if ground truth)
"""
from typing import Optional

from langgraph.graph import END, StateGraph

from backend.pipeline.nodes import (
    cluster_node,
    evaluate_node,
    ingest_node,
    route_stage,
    simulate_node,
)
from backend.pipeline.state import PipelineState
from backend.utils.tracing import create_run_config


def _entry(state: PipelineState) -> PipelineState:
    return state


def build_graph():
    """Build and compile the pipeline graph."""
    workflow = StateGraph(PipelineState)

    workflow.add_node("start", _entry)
    workflow.add_node("simulate", simulate_node)
    workflow.add_node("ingest", ingest_node)
    workflow.add_node("cluster", cluster_node)
    workflow.add_node("evaluate", evaluate_node)

    workflow.set_entry_point("start")

    # Start -> Simulate, or straight to Ingest when records are supplied
    workflow.add_conditional_edges(
        "start",
        route_stage,
        {
            "simulate": "simulate",
            "ingest": "ingest",
            "end": END,
        }
    )

    workflow.add_conditional_edges(
        "simulate",
        route_stage,
        {
            "ingest": "ingest",
            "end": END,
        }
    )

    workflow.add_conditional_edges(
        "ingest",
        route_stage,
        {
            "cluster": "cluster",
            "end": END,
        }
    )

    # Cluster -> Evaluate only when ground truth exists
    workflow.add_conditional_edges(
        "cluster",
        route_stage,
        {
            "evaluate": "evaluate",
            "done": END,
            "end": END,
        }
    )

    workflow.add_edge("evaluate", END)

    return workflow.compile()


# Create the compiled graph
pipeline_graph = build_graph()


def run_pipeline(state: PipelineState, config: Optional[dict] = None) -> PipelineState:
    """Invoke the compiled graph with LangSmith tracing metadata for this run."""
    return pipeline_graph.invoke(state, config=config or create_run_config(state["run_id"]))
