"""
Road networks with streetlights placed at even spacing along each segment.
The segment a light sits on is its ground-truth sector.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from backend.clustering.chromosome import Chromosome, canonicalize
from backend.errors import ScenarioError
from backend.graph.core import NodeId
from backend.simulator.scenarios import ScenarioSpec, SegmentSpec

logger = logging.getLogger(__name__)

# Placement and endpoint-matching tolerance, meters
GEOMETRY_EPS = 1e-6


def mac_address(i: int) -> NodeId:
    """Locally administered MAC-style id; lexicographic order equals numeric order."""
    return "02:00:" + ":".join(f"{(i >> shift) & 0xFF:02x}" for shift in (24, 16, 8, 0))


@dataclass(frozen=True)
class Light:
    node: NodeId
    position: tuple[float, float]
    segment: str
    offset: float


class Segment:
    """A polyline road section; arc-length offsets are measured from its first point."""

    def __init__(self, segment_id: str, points, speed: Optional[float] = None):
        self.id = segment_id
        self.speed = speed
        self.points = np.asarray(points, dtype=float)
        steps = np.diff(self.points, axis=0)
        self._lengths = np.hypot(steps[:, 0], steps[:, 1])
        if (self._lengths <= GEOMETRY_EPS).any():
            raise ScenarioError(f"segment {segment_id!r} has a zero-length piece")
        self._cumulative = np.concatenate([[0.0], np.cumsum(self._lengths)])
        self.lights: tuple[NodeId, ...] = ()

    @property
    def length(self) -> float:
        return float(self._cumulative[-1])

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def point_at(self, offset: float) -> np.ndarray:
        offset = min(max(offset, 0.0), self.length)
        k = min(int(np.searchsorted(self._cumulative, offset, side="right")) - 1, len(self._lengths) - 1)
        frac = (offset - self._cumulative[k]) / self._lengths[k]
        return self.points[k] + frac * (self.points[k + 1] - self.points[k])

    def polyline(self, forward: bool = True) -> np.ndarray:
        return self.points if forward else self.points[::-1]


def light_offsets(length: float, spacing: float, start_offset: float = 0.0) -> np.ndarray:
    """Offsets start_offset, start_offset + spacing, ... up to the segment end."""
    count = int(np.floor((length - start_offset) / spacing + GEOMETRY_EPS)) + 1 if length >= start_offset else 0
    return start_offset + spacing * np.arange(max(count, 0))


class RoadNetwork:
    """Segments, the lights on them and a radio-range index over light positions."""

    def __init__(self, segments: list[Segment], lights: list[Light]):
        self.segments = {s.id: s for s in segments}
        self.lights = {light.node: light for light in lights}
        self.node_ids: tuple[NodeId, ...] = tuple(light.node for light in lights)
        self.positions = np.array([light.position for light in lights], dtype=float).reshape(-1, 2)
        self._tree = cKDTree(self.positions) if lights else None

    def __len__(self) -> int:
        return len(self.node_ids)

    @property
    def junctions(self) -> list[tuple[float, float]]:
        """Points shared by the endpoints of two or more segments."""
        ends = [tuple(np.round(p, 6)) for s in self.segments.values() for p in (s.start, s.end)]
        return sorted({p for p in ends if ends.count(p) > 1})

    def radio_neighbors(self, radius: float) -> list[list[int]]:
        """For each light, the other lights within `radius` (ascending index)."""
        if self._tree is None:
            return []
        hits = self._tree.query_ball_point(self.positions, r=radius)
        return [sorted(j for j in row if j != i) for i, row in enumerate(hits)]

    def sector_labels(self) -> dict[NodeId, str]:
        return {node: light.segment for node, light in self.lights.items()}

    def __repr__(self) -> str:
        return f"RoadNetwork(segments={len(self.segments)}, lights={len(self)})"


def _place(spec: SegmentSpec, spacing: float) -> tuple[Segment, np.ndarray]:
    segment = Segment(spec.id, spec.points, spec.speed)
    if segment.length + GEOMETRY_EPS < 2 * spacing:
        raise ScenarioError(
            f"segment {spec.id!r} is {segment.length:.1f} m long, shorter than twice the spacing ({spacing} m)"
        )
    offsets = light_offsets(segment.length, spacing, spec.start_offset)
    if offsets.size < 2:
        raise ScenarioError(f"segment {spec.id!r} holds {offsets.size} light(s); at least 2 are required")
    return segment, offsets


def build_network(spec: ScenarioSpec) -> RoadNetwork:
    """Place lights along every segment; node ids are assigned in segment then offset order."""
    segments, lights = [], []
    for seg_spec in spec.segments:
        segment, offsets = _place(seg_spec, seg_spec.spacing or spec.spacing)
        ids = []
        for offset in offsets:
            node = mac_address(len(lights) + 1)
            x, y = segment.point_at(float(offset))
            lights.append(Light(node=node, position=(float(x), float(y)), segment=segment.id, offset=float(offset)))
            ids.append(node)
        segment.lights = tuple(ids)
        segments.append(segment)

    network = RoadNetwork(segments, lights)
    if _coincident(network):
        raise ScenarioError(f"scenario {spec.name!r} places two lights at the same position")
    logger.info("Built network %s: %d segments, %d lights", spec.name, len(segments), len(network))
    return network


def _coincident(network: RoadNetwork) -> bool:
    if network._tree is None:
        return False
    return bool(network._tree.query_pairs(r=GEOMETRY_EPS))


def ground_truth(network: RoadNetwork, nodes: Optional[tuple[NodeId, ...]] = None) -> Chromosome:
    """Canonical chromosome labeling each light (in `nodes` order) with its segment."""
    nodes = nodes or network.node_ids
    order = {segment_id: i for i, segment_id in enumerate(network.segments)}
    return canonicalize(np.array([order[network.lights[node].segment] for node in nodes], dtype=np.int64))
