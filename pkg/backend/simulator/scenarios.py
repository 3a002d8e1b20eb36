"""
Declarative scenario descriptions and the bundled scenario library.

A scenario file (`*.scenario`) is JSON:

    {
      "name": "straight",
      "description": "...",
      "spacing": 30.0,
      "segments": [{"id": "main", "points": [[0, 0], [300, 0]], "start_offset": 0.0, "speed": 12.0}],
      "routes": [{"legs": [["main", true]], "weight": 1.0}],
      "traffic": {"pedestrian_fraction": 0.1, "vehicle_speed_range": [8, 16], "junction_dwell": [0, 0]},
      "sim": {"n_elements": 200, "radio_radius": 50.0}
    }

Route legs are (segment id, forward) pairs; consecutive legs must share an endpoint.
A segment with a posted `speed` is driven at that speed (spread by the
traffic `speed_jitter`); other segments draw from `vehicle_speed_range`.
"""
import json
import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from backend.config import SimConfig, TrafficMix
from backend.errors import InputError, ScenarioError

logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).parent / "library"
SCENARIO_SUFFIX = ".scenario"

# Defaults the source system never quantified; recorded in run metadata
ASSUMPTIONS = (
    "radio_radius relative to light spacing is a plausibility default",
    "detection_radius of 15 m is a plausibility default",
    "vehicle speeds 8-16 m/s and pedestrian speed 1.4 m/s are plausibility defaults",
    "posted segment speeds and junction dwell times are scenario choices",
)


class SegmentSpec(BaseModel):
    id: str = Field(..., min_length=1)
    points: list[tuple[float, float]] = Field(..., min_length=2)
    start_offset: float = Field(0.0, ge=0.0, description="Distance from the first point to the first light")
    spacing: Optional[float] = Field(None, gt=0.0, description="Overrides the scenario spacing")
    speed: Optional[float] = Field(None, gt=0.0, description="Posted vehicle speed, m/s")


class RouteSpec(BaseModel):
    legs: list[tuple[str, bool]] = Field(..., min_length=1)
    weight: float = Field(1.0, gt=0.0)


class ScenarioSpec(BaseModel):
    name: str
    description: str = ""
    spacing: float = Field(30.0, gt=0.0)
    segments: list[SegmentSpec] = Field(..., min_length=1)
    routes: list[RouteSpec] = Field(..., min_length=1)
    traffic: TrafficMix = Field(default_factory=TrafficMix)
    sim: SimConfig = Field(default_factory=SimConfig)

    @field_validator("segments")
    @classmethod
    def _unique_ids(cls, segments: list[SegmentSpec]) -> list[SegmentSpec]:
        ids = [s.id for s in segments]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate segment ids in {ids}")
        return segments

    @model_validator(mode="after")
    def _routes_reference_segments(self) -> "ScenarioSpec":
        known = {s.id for s in self.segments}
        for route in self.routes:
            for segment_id, _ in route.legs:
                if segment_id not in known:
                    raise ValueError(f"route references unknown segment {segment_id!r}")
        return self

    def with_sim(self, **overrides) -> "ScenarioSpec":
        """Copy with SimConfig fields replaced (validated)."""
        sim = SimConfig.model_validate({**self.sim.model_dump(), **overrides})
        return self.model_copy(update={"sim": sim})


def list_scenarios() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob(f"*{SCENARIO_SUFFIX}"))


def resolve_scenario_path(name_or_path: Union[str, Path]) -> Path:
    """A bundled scenario name or a path to a scenario file."""
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = SCENARIO_DIR / f"{name_or_path}{SCENARIO_SUFFIX}"
    if bundled.exists():
        return bundled
    raise InputError(f"scenario not found: {name_or_path} (bundled: {', '.join(list_scenarios())})")


def load_scenario(name_or_path: Union[str, Path]) -> ScenarioSpec:
    path = resolve_scenario_path(name_or_path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
    try:
        spec = ScenarioSpec.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"{path}: {e}")
    logger.debug("Loaded scenario %s from %s", spec.name, path)
    return spec
