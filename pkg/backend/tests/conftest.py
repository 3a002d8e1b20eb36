"""
Shared fixtures: an isolated run database and small synthetic road data.
"""
import os
import tempfile

# Must be set before backend.config is imported anywhere
_DB_DIR = tempfile.mkdtemp(prefix="streetlight-test-")
os.environ["STREETLIGHT_DATABASE_URL"] = f"sqlite+aiosqlite:///{_DB_DIR}/runs.db"
os.environ["STREETLIGHT_OUTPUT_ROOT"] = os.path.join(_DB_DIR, "runs")
os.environ.pop("STREETLIGHT_CACHE_DIR", None)
os.environ.pop("LANGSMITH_API_KEY", None)

import numpy as np
import pytest

from backend.config import GAConfig, SimConfig, TrafficMix
from backend.graph.core import ProbabilisticGraph
from backend.ingest.matrices import TimeMatrix
from backend.simulator.scenarios import RouteSpec, ScenarioSpec, SegmentSpec


def two_road_data() -> tuple[ProbabilisticGraph, TimeMatrix]:
    """
    Eight lights on two roads: a0-a1-a2-a3 (3 s apart) and b0-b1-b2-b3 (5 s apart),
    strong links along each road and one weak link a3-b0 across.
    """
    nodes = [f"a{i}" for i in range(4)] + [f"b{i}" for i in range(4)]
    edges = [("a0", "a1", 1.0), ("a1", "a2", 0.9), ("a2", "a3", 1.0),
             ("b0", "b1", 1.0), ("b1", "b2", 0.9), ("b2", "b3", 1.0),
             ("a3", "b0", 0.35)]
    t = np.full((8, 8), np.nan)
    for i in range(3):
        t[i, i + 1] = t[i + 1, i] = 3.0
        t[4 + i, 5 + i] = t[5 + i, 4 + i] = 5.0
    t[3, 4] = t[4, 3] = 20.0
    return ProbabilisticGraph(nodes, edges), TimeMatrix(t)


@pytest.fixture
def two_roads():
    return two_road_data()


@pytest.fixture
def small_ga() -> GAConfig:
    return GAConfig(pop_size=10, generations=6, rng_seed=7)


@pytest.fixture
def one_car_road() -> ScenarioSpec:
    """300 m road, one vehicle at a constant 10 m/s, lossless radio."""
    return ScenarioSpec(
        name="one_car",
        spacing=30.0,
        segments=[SegmentSpec(id="main", points=[(0.0, 0.0), (300.0, 0.0)])],
        routes=[RouteSpec(legs=[("main", True)])],
        traffic=TrafficMix(pedestrian_fraction=0.0, constant_speed=10.0),
        sim=SimConfig(n_elements=1, duration=10.0, detection_radius=15.0, radio_radius=50.0),
    )


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path
