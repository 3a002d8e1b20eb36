"""
Configuration for the sectorization pipeline.
Environment-driven defaults plus validated pydantic models for each stage.
"""
import os
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

load_dotenv()

# Environment defaults
OUTPUT_ROOT = os.getenv("STREETLIGHT_OUTPUT_ROOT", "./runs")
DATABASE_URL = os.getenv("STREETLIGHT_DATABASE_URL", "sqlite+aiosqlite:///./streetlight_runs.db")
CACHE_DIR = os.getenv("STREETLIGHT_CACHE_DIR")  # None = in-memory permutation cache only
LOG_LEVEL = os.getenv("STREETLIGHT_LOG_LEVEL", "INFO")

# Thresholds used to build the six deterministic subgraphs
THRESHOLDS: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)

# Penalty (seconds) for a missing pairwise interval
ABSENT_INTERVAL_PENALTY = 1e6

# SC assigned to singleton / unscoreable clusters
NEUTRAL_SC = 0.5


class FitnessWeights(BaseModel):
    """Weights of the scalar fitness: w1 * DIST + (1 - w1) * SCE."""
    w1: float = Field(0.2, ge=0.0, le=1.0, description="Weight of normalized DIST")
    dist_w: float = Field(0.5, gt=0.0, description="Inter/intra tradeoff weight inside DIST")

    @property
    def w2(self) -> float:
        return 1.0 - self.w1


class GAConfig(BaseModel):
    """Genetic algorithm parameters (one set shared by all six populations)."""
    pop_size: int = Field(50, ge=2)
    generations: int = Field(100, ge=1)
    mutation_prob: float = Field(10.0, ge=0.0, le=100.0, description="Percent")
    local_search_fraction: float = Field(0.2, ge=0.0, le=1.0)
    rng_seed: int = Field(0, ge=0, lt=2**64)
    weights: FitnessWeights = Field(default_factory=FitnessWeights)
    walk_order: int = Field(4, ge=2)

    stagnation_limit: Optional[int] = Field(None, ge=1)
    workers: int = Field(1, ge=1)
    sce_mode: Literal["intervals", "cluster_size"] = "intervals"
    sc_evidence: float = Field(1.0, ge=0.0, description="Shrinks SC of clusters with few intervals toward neutral; 0 disables")
    dist_scaling: Literal["size", "sum"] = "size"
    dist_normalization: Literal["frozen", "generation"] = "frozen"
    merge_prob: float = Field(30.0, ge=0.0, le=100.0, description="Percent of children that join two adjacent clusters")
    penalty: float = Field(ABSENT_INTERVAL_PENALTY, gt=0.0)
    max_tc_candidates: int = Field(64, ge=1)
    two_opt_max_nodes: int = Field(16, ge=0)

    @field_validator("pop_size")
    @classmethod
    def _even_population(cls, v: int) -> int:
        if v % 2:
            raise ValueError("pop_size must be even so parents pair up for crossover")
        return v

    @field_validator("walk_order")
    @classmethod
    def _even_walk_order(cls, v: int) -> int:
        if v % 2:
            raise ValueError("walk_order must be even")
        return v


class SimConfig(BaseModel):
    """Simulator parameters. Radio and radar ranges are plausibility defaults."""
    detection_radius: float = Field(15.0, gt=0.0)
    radio_radius: float = Field(50.0, gt=0.0)
    message_loss_prob: float = Field(0.0, ge=0.0, le=1.0)
    n_elements: int = Field(200, ge=0)
    duration: float = Field(3600.0, gt=0.0)
    report_period: float = Field(300.0, gt=0.0, description="T_c, seconds")
    rng_seed: int = Field(0, ge=0, lt=2**64)
    advert_ttl: float = Field(30.0, gt=0.0)

    @model_validator(mode="after")
    def _ranges(self) -> "SimConfig":
        if self.radio_radius < self.detection_radius:
            raise ValueError("radio_radius must be >= detection_radius")
        return self


class TrafficMix(BaseModel):
    """How traffic elements are drawn for a scenario."""
    pedestrian_fraction: float = Field(0.0, ge=0.0, le=1.0)
    pedestrian_speed: float = Field(1.4, gt=0.0)
    vehicle_speed_range: tuple[float, float] = (8.0, 16.0)
    constant_speed: Optional[float] = Field(None, gt=0.0, description="Every vehicle at this speed on every segment")
    speed_jitter: float = Field(0.0, ge=0.0, lt=1.0, description="Relative spread around a segment speed limit")
    junction_dwell: tuple[float, float] = Field((0.0, 0.0), description="Seconds waited between route legs, uniform")

    @field_validator("vehicle_speed_range")
    @classmethod
    def _ordered(cls, v: tuple[float, float]) -> tuple[float, float]:
        lo, hi = v
        if lo <= 0 or hi < lo:
            raise ValueError("vehicle_speed_range must satisfy 0 < low <= high")
        return v

    @field_validator("junction_dwell")
    @classmethod
    def _dwell_ordered(cls, v: tuple[float, float]) -> tuple[float, float]:
        lo, hi = v
        if lo < 0 or hi < lo:
            raise ValueError("junction_dwell must satisfy 0 <= low <= high")
        return v


class RunConfig(BaseModel):
    """Everything needed to reproduce a pipeline run; stored next to its outputs."""
    scenario: str
    seed: int = Field(0, ge=0, lt=2**64)
    output_dir: Optional[str] = OUTPUT_ROOT
    sim_overrides: dict = Field(default_factory=dict)
    ga: GAConfig = Field(default_factory=GAConfig)
    seeds: list[int] = Field(default_factory=list)
    symmetrize: Literal["max", "mean"] = "max"
