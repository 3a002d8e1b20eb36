"""
State for the simulate -> ingest -> cluster -> evaluate LangGraph pipeline.
Includes stage tracking fields for observability.
"""
import time
from dataclasses import dataclass
from typing import Any, Literal, Optional, TypedDict

Stage = Literal["simulate", "ingest", "cluster", "evaluate", "done"]


@dataclass
class StageRecord:
    """Timing of one executed stage."""
    stage: str
    duration_ms: int
    success: bool
    error: Optional[str] = None


class PipelineState(TypedDict):
    """
    One pipeline run. Inputs are either a scenario (simulated first) or a
    record file; ground truth is optional and evaluation is skipped without it.
    """
    run_id: str

    # Inputs
    scenario: Optional[str]          # bundled name or path
    records_path: Optional[str]
    truth_path: Optional[str]
    output_dir: Optional[str]
    seed: int
    sim_overrides: dict
    ga_config: dict
    symmetrize: Literal["max", "mean"]
    report_period: Optional[float]   # T_c; the gateway ingests one period at a time

    # Flow control
    current_stage: Stage

    # Stage outputs
    records: list                    # AssociationRecord
    node_ids: Optional[list]         # full light list when known (simulation)
    truth: Optional[dict]            # node -> sector
    sim_metadata: dict
    ingest_result: Optional[Any]     # IngestResult
    ga_result: Optional[Any]         # GAResult
    prediction: Optional[dict]       # node -> predicted sector
    score: Optional[dict]

    # Error handling
    error_message: Optional[str]
    exit_code: int

    # Tracking
    stages_completed: list[str]
    stage_durations_ms: dict
    start_time: float


def create_initial_state(
    run_id: str,
    scenario: Optional[str] = None,
    records_path: Optional[str] = None,
    truth_path: Optional[str] = None,
    output_dir: Optional[str] = None,
    seed: int = 0,
    sim_overrides: Optional[dict] = None,
    ga_config: Optional[dict] = None,
    symmetrize: Literal["max", "mean"] = "max",
    report_period: Optional[float] = None,
) -> PipelineState:
    """Create the initial state; runs from a record file skip simulation."""
    if not scenario and not records_path:
        raise ValueError("a pipeline run needs a scenario or a record file")
    return PipelineState(
        run_id=run_id,
        scenario=scenario,
        records_path=records_path,
        truth_path=truth_path,
        output_dir=output_dir,
        seed=seed,
        sim_overrides=sim_overrides or {},
        ga_config=ga_config or {},
        symmetrize=symmetrize,
        report_period=report_period,
        current_stage="ingest" if records_path else "simulate",
        records=[],
        node_ids=None,
        truth=None,
        sim_metadata={},
        ingest_result=None,
        ga_result=None,
        prediction=None,
        score=None,
        error_message=None,
        exit_code=0,
        stages_completed=[],
        stage_durations_ms={},
        start_time=time.time(),
    )


def record_stage(state: PipelineState, record: StageRecord) -> None:
    """Record that a stage ran."""
    if record.success and record.stage not in state["stages_completed"]:
        state["stages_completed"].append(record.stage)
    state["stage_durations_ms"][record.stage] = record.duration_ms


def get_total_duration_ms(state: PipelineState) -> int:
    """Get total duration since start."""
    start_time = state.get("start_time")
    if start_time is None:
        return 0
    return int((time.time() - start_time) * 1000)
