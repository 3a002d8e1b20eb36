"""
FastAPI application: start pipeline runs on bundled scenarios and browse the run registry.
"""
import asyncio
import json
import logging
import uuid
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Literal, Optional

from dotenv import load_dotenv

load_dotenv()

from fastapi import Depends, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field, ValidationError
from sqlalchemy import delete, select
from sqlalchemy.ext.asyncio import AsyncSession

from backend.config import OUTPUT_ROOT, GAConfig, RunConfig
from backend.database.models import Run, get_db, init_db
from backend.pipeline.graph import run_pipeline
from backend.pipeline.state import create_initial_state, get_total_duration_ms
from backend.simulator.scenarios import list_scenarios, load_scenario
from backend.utils.tracing import create_run_config, get_tracing_status, setup_langsmith

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Initialize database and LangSmith on startup."""
    await init_db()
    setup_langsmith()
    yield


app = FastAPI(
    title="Streetlight Sectorization API",
    description="Neighbor-relationship discovery for smart streetlights",
    version="1.0.0",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Pydantic models
class RunRequest(BaseModel):
    scenario: str
    seed: int = Field(0, ge=0, lt=2**64)
    ga: dict = Field(default_factory=dict)
    sim_overrides: dict = Field(default_factory=dict)
    symmetrize: Literal["max", "mean"] = "max"
    persist: bool = False


class RunResponse(BaseModel):
    id: str
    scenario: str
    seed: int
    status: str
    ari: Optional[float] = None
    nmi: Optional[float] = None
    purity: Optional[float] = None
    n_clusters: Optional[int] = None
    n_clusters_true: Optional[int] = None
    error: Optional[str] = None
    config: dict = Field(default_factory=dict)
    created_at: str


class ScenarioResponse(BaseModel):
    name: str
    description: str
    n_segments: int


def _to_response(run: Run) -> RunResponse:
    return RunResponse(
        id=run.id,
        scenario=run.scenario,
        seed=run.seed,
        status=run.status,
        ari=run.ari,
        nmi=run.nmi,
        purity=run.purity,
        n_clusters=run.n_clusters,
        n_clusters_true=run.n_clusters_true,
        error=run.error,
        config=json.loads(run.config or "{}"),
        created_at=run.created_at.isoformat(),
    )


# API Routes
@app.get("/api/health")
async def health_check():
    """Health check endpoint."""
    return {"status": "healthy", "service": "streetlight-sectorization"}


@app.get("/api/scenarios", response_model=list[ScenarioResponse])
async def scenarios():
    """Bundled scenarios."""
    result = []
    for name in list_scenarios():
        spec = load_scenario(name)
        result.append(ScenarioResponse(name=name, description=spec.description, n_segments=len(spec.segments)))
    return result


@app.post("/api/runs", response_model=RunResponse)
async def create_run(request: RunRequest, db: AsyncSession = Depends(get_db)):
    """Run the full pipeline on a bundled scenario (in a worker thread) and store the outcome."""
    if request.scenario not in list_scenarios():
        raise HTTPException(status_code=404, detail=f"Unknown scenario {request.scenario!r}")
    try:
        ga = GAConfig.model_validate({**request.ga, "rng_seed": request.seed})
    except ValidationError as e:
        raise HTTPException(status_code=422, detail=json.loads(e.json()))

    run_id = str(uuid.uuid4())
    output_dir = str(Path(OUTPUT_ROOT) / run_id) if request.persist else None
    run_config = RunConfig(
        scenario=request.scenario,
        seed=request.seed,
        output_dir=output_dir,
        sim_overrides=request.sim_overrides,
        ga=ga,
        symmetrize=request.symmetrize,
    )
    run = Run(id=run_id, scenario=request.scenario, seed=request.seed, status="running",
              config=run_config.model_dump_json())
    db.add(run)
    await db.commit()

    state = create_initial_state(
        run_id=run_id,
        scenario=request.scenario,
        output_dir=output_dir,
        seed=request.seed,
        sim_overrides=request.sim_overrides,
        ga_config=ga.model_dump(),
        symmetrize=request.symmetrize,
    )
    final = await asyncio.to_thread(run_pipeline, state, create_run_config(run_id, request.scenario))
    logger.info("Run %s finished in %d ms", run_id, get_total_duration_ms(final))

    if final.get("error_message"):
        run.status = "failed"
        run.error = final["error_message"]
    else:
        run.status = "completed"
        score = final.get("score") or {}
        run.ari = score.get("ari")
        run.nmi = score.get("nmi")
        run.purity = score.get("purity")
        run.n_clusters = score.get("n_clusters_pred")
        run.n_clusters_true = score.get("n_clusters_true")
    await db.commit()
    await db.refresh(run)
    return _to_response(run)


@app.get("/api/runs", response_model=list[RunResponse])
async def list_runs(db: AsyncSession = Depends(get_db)):
    """List all runs, newest first."""
    result = await db.execute(select(Run).order_by(Run.created_at.desc()))
    return [_to_response(r) for r in result.scalars().all()]


@app.get("/api/runs/{run_id}", response_model=RunResponse)
async def get_run(run_id: str, db: AsyncSession = Depends(get_db)):
    run = await db.get(Run, run_id)
    if not run:
        raise HTTPException(status_code=404, detail="Run not found")
    return _to_response(run)


@app.delete("/api/runs/{run_id}")
async def delete_run(run_id: str, db: AsyncSession = Depends(get_db)):
    """Delete a run record (output files on disk are kept)."""
    result = await db.execute(delete(Run).where(Run.id == run_id))
    await db.commit()
    if result.rowcount == 0:
        raise HTTPException(status_code=404, detail="Run not found")
    return {"status": "deleted", "id": run_id}


@app.get("/api/tracing-status")
async def tracing_status():
    """Get LangSmith tracing status."""
    return get_tracing_status()


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=7860)
