"""
LangSmith tracing configuration for pipeline runs.
Tracing is optional: without LANGSMITH_API_KEY runs carry metadata only.
"""
import logging
import os
from typing import Optional

LANGSMITH_API_KEY = os.getenv("LANGSMITH_API_KEY")
LANGSMITH_PROJECT = os.getenv("LANGSMITH_PROJECT", "streetlight-sectorization")
LANGSMITH_TRACING = os.getenv("LANGSMITH_TRACING", "true").lower() == "true"

logger = logging.getLogger(__name__)


def setup_langsmith() -> bool:
    """
    Configure LangSmith tracing.
    Call this at application startup.
    """
    if not LANGSMITH_API_KEY:
        logger.info("LANGSMITH_API_KEY not set - tracing disabled")
        return False

    os.environ["LANGCHAIN_TRACING_V2"] = "true" if LANGSMITH_TRACING else "false"
    os.environ["LANGCHAIN_API_KEY"] = LANGSMITH_API_KEY
    os.environ["LANGCHAIN_PROJECT"] = LANGSMITH_PROJECT
    os.environ["LANGCHAIN_ENDPOINT"] = "https://api.smith.langchain.com"

    logger.info("LangSmith tracing enabled for project: %s", LANGSMITH_PROJECT)
    return True


def get_tracer_callbacks() -> list:
    """
    LangSmith tracer callbacks for LangGraph invocation.
    Returns an empty list if LangSmith is not configured.
    """
    if not LANGSMITH_API_KEY or not LANGSMITH_TRACING:
        return []

    try:
        from langchain_core.tracers import LangChainTracer
        return [LangChainTracer(project_name=LANGSMITH_PROJECT)]
    except Exception as e:
        logger.warning("Could not create LangSmith tracer: %s", e)
        return []


def create_run_config(run_id: str, scenario: Optional[str] = None) -> dict:
    """
    Run configuration with callbacks and metadata for a pipeline invocation.

    Args:
        run_id: Pipeline run ID
        scenario: Optional scenario name

    Returns:
        Dict accepted as the `config` of a compiled graph's invoke()
    """
    return {
        "callbacks": get_tracer_callbacks(),
        "metadata": {
            "run_id": run_id,
            "scenario": scenario or "records",
        },
        "tags": ["streetlight-sectorization", f"run:{run_id}"],
        "run_name": f"sectorize-{run_id[:8]}",
    }


def get_tracing_status() -> dict:
    """Get current LangSmith tracing status."""
    return {
        "enabled": LANGSMITH_TRACING and bool(LANGSMITH_API_KEY),
        "project": LANGSMITH_PROJECT,
        "api_key_set": bool(LANGSMITH_API_KEY),
    }
