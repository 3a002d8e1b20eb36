"""
Traffic elements and their trajectories over the road network.

Vehicles keep one speed per segment (changes happen only at junctions and
corners); pedestrians keep one speed for the whole route. A segment with a
posted speed is driven at that speed, spread by `speed_jitter`. Elements may
wait at each junction between route legs (`junction_dwell`). Every trajectory
starts `lead` meters before the route's first point and ends `lead` meters
past its last point, so the first and last lights are approached from outside
their detection radius.
"""
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from backend.config import SimConfig, TrafficMix
from backend.errors import ScenarioError
from backend.simulator.network import GEOMETRY_EPS, RoadNetwork
from backend.simulator.scenarios import RouteSpec

logger = logging.getLogger(__name__)

Kind = Literal["pedestrian", "vehicle"]


@dataclass(frozen=True)
class Leg:
    """Straight piece of a trajectory traversed at constant velocity; start == end while waiting."""
    start: np.ndarray
    end: np.ndarray
    t0: float
    t1: float

    @property
    def stationary(self) -> bool:
        return bool(np.array_equal(self.start, self.end))


@dataclass(frozen=True)
class TrafficElement:
    id: int
    kind: Kind
    route: tuple[tuple[str, bool], ...]
    speed_per_segment: tuple[float, ...]
    spawn_time: float
    dwell_per_junction: tuple[float, ...] = ()

    def legs(self, network: RoadNetwork, lead: float = 0.0) -> list[Leg]:
        """Timed straight legs; `lead` extends the first and last piece outward."""
        # (start, end, speed, wait): a move when wait is 0, else a stop at start
        pieces: list[tuple[np.ndarray, np.ndarray, float, float]] = []
        for k, ((segment_id, forward), speed) in enumerate(zip(self.route, self.speed_per_segment)):
            line = network.segments[segment_id].polyline(forward)
            if 0 < k <= len(self.dwell_per_junction) and self.dwell_per_junction[k - 1] > 0:
                pieces.append((line[0].copy(), line[0].copy(), speed, self.dwell_per_junction[k - 1]))
            for a, b in zip(line[:-1], line[1:]):
                pieces.append((a.copy(), b.copy(), speed, 0.0))

        if lead > 0:
            a, b, speed, _ = pieces[0]
            direction = (b - a) / np.linalg.norm(b - a)
            pieces.insert(0, (a - lead * direction, a, speed, 0.0))
            a, b, speed, _ = pieces[-1]
            direction = (b - a) / np.linalg.norm(b - a)
            pieces.append((b, b + lead * direction, speed, 0.0))

        legs, t = [], self.spawn_time
        for a, b, speed, wait in pieces:
            duration = wait if wait > 0 else float(np.linalg.norm(b - a)) / speed
            legs.append(Leg(start=a, end=b, t0=t, t1=t + duration))
            t += duration
        return legs


def validate_route(route: RouteSpec, network: RoadNetwork) -> None:
    """Consecutive legs must meet: the end of one is the start of the next."""
    for (prev_id, prev_fwd), (next_id, next_fwd) in zip(route.legs[:-1], route.legs[1:]):
        prev_end = network.segments[prev_id].polyline(prev_fwd)[-1]
        next_start = network.segments[next_id].polyline(next_fwd)[0]
        if np.linalg.norm(prev_end - next_start) > GEOMETRY_EPS:
            raise ScenarioError(f"route leg {prev_id!r} does not connect to {next_id!r}")


def _vehicle_speeds(
    route: RouteSpec,
    network: RoadNetwork,
    mix: TrafficMix,
    rng: np.random.Generator,
) -> tuple[float, ...]:
    if mix.constant_speed is not None:
        return (mix.constant_speed,) * len(route.legs)
    posted = [network.segments[segment_id].speed for segment_id, _ in route.legs]
    if all(v is None for v in posted):
        low, high = mix.vehicle_speed_range
        return tuple(float(v) for v in rng.uniform(low, high, size=len(route.legs)))
    speeds = []
    for v in posted:
        if v is None:
            speeds.append(float(rng.uniform(*mix.vehicle_speed_range)))
        elif mix.speed_jitter > 0:
            speeds.append(float(v * rng.uniform(1.0 - mix.speed_jitter, 1.0 + mix.speed_jitter)))
        else:
            speeds.append(float(v))
    return tuple(speeds)


def generate_traffic(
    network: RoadNetwork,
    routes: list[RouteSpec],
    mix: TrafficMix,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> list[TrafficElement]:
    """cfg.n_elements elements with uniform spawn times in [0, duration), routes drawn by weight."""
    for route in routes:
        validate_route(route, network)
    weights = np.array([r.weight for r in routes], dtype=float)
    weights /= weights.sum()

    elements = []
    for i in range(cfg.n_elements):
        route = routes[int(rng.choice(len(routes), p=weights))]
        spawn = float(rng.uniform(0.0, cfg.duration))
        if rng.random() < mix.pedestrian_fraction:
            kind: Kind = "pedestrian"
            speeds = (mix.pedestrian_speed,) * len(route.legs)
        else:
            kind = "vehicle"
            speeds = _vehicle_speeds(route, network, mix, rng)
        dwell: tuple[float, ...] = ()
        if mix.junction_dwell[1] > 0 and len(route.legs) > 1:
            lo, hi = mix.junction_dwell
            dwell = tuple(float(v) for v in rng.uniform(lo, hi, size=len(route.legs) - 1))
        elements.append(TrafficElement(
            id=i,
            kind=kind,
            route=tuple((segment_id, bool(forward)) for segment_id, forward in route.legs),
            speed_per_segment=speeds,
            spawn_time=spawn,
            dwell_per_junction=dwell,
        ))
    elements.sort(key=lambda e: (e.spawn_time, e.id))
    logger.info(
        "Generated %d traffic elements (%d pedestrians)",
        len(elements), sum(e.kind == "pedestrian" for e in elements),
    )
    return elements
