"""
Discrete-event simulation of streetlight detection and advertising (simpy).

Each traffic element is a process that sleeps until its next detection.
On detection a light
  1. pairs the detection with its most recent cached advertisement (if not
     older than advert_ttl) and emits an AssociationRecord,
  2. clears its advertisement cache,
  3. advertises; every other light within radio_radius receives the
     advertisement unless it is lost.
Advertisements are single hop.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import simpy

from backend.config import SimConfig
from backend.ingest.records import AssociationRecord, batch_by_period
from backend.simulator.network import RoadNetwork, build_network
from backend.simulator.scenarios import ASSUMPTIONS, ScenarioSpec
from backend.simulator.traffic import Leg, TrafficElement, generate_traffic

logger = logging.getLogger(__name__)

# Chords shorter than this (meters) are tangent grazes, not detections
TANGENT_EPS = 1e-6
MERGE_EPS = 1e-9


def rng_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (traffic, radio) generators from one seed."""
    traffic, radio = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(traffic), np.random.default_rng(radio)


def detection_events(legs: list[Leg], positions: np.ndarray, radius: float) -> list[tuple[float, int]]:
    """
    Times at which the trajectory enters each light's detection disc, sorted.
    Presence spans that continue across leg boundaries (including a stop
    inside the disc) count as one entry.
    """
    spans: dict[int, list[list[float]]] = defaultdict(list)
    for leg in legs:
        if leg.stationary:
            inside = ((positions - leg.start) ** 2).sum(axis=1) < radius * radius
            for i in np.flatnonzero(inside):
                spans[int(i)].append([leg.t0, leg.t1])
            continue
        d = leg.end - leg.start
        a = float(d @ d)
        f = leg.start - positions
        b = 2.0 * (f @ d)
        c = (f * f).sum(axis=1) - radius * radius
        disc = b * b - 4.0 * a * c
        for i in np.flatnonzero(disc > 0):
            root = math.sqrt(disc[i])
            s1, s2 = (-b[i] - root) / (2 * a), (-b[i] + root) / (2 * a)
            if (s2 - s1) * math.sqrt(a) <= TANGENT_EPS:
                continue
            lo, hi = max(s1, 0.0), min(s2, 1.0)
            if hi < lo:
                continue
            spans[int(i)].append([leg.t0 + lo * (leg.t1 - leg.t0), leg.t0 + hi * (leg.t1 - leg.t0)])

    events = []
    for light, intervals in spans.items():
        intervals.sort()
        current_end = -math.inf
        for start, end in intervals:
            if start > current_end + MERGE_EPS:
                events.append((start, light))
            current_end = max(current_end, end)
    events.sort()
    return events


class StreetlightNode:
    """Advertisement cache of one light: latest advert per sender, plus the latest overall."""

    def __init__(self, index: int, node_id: str):
        self.index = index
        self.node_id = node_id
        self.cache: dict[int, float] = {}
        self.latest: Optional[tuple[int, float]] = None

    def receive(self, sender: int, sent_at: float) -> None:
        self.cache[sender] = sent_at
        self.latest = (sender, sent_at)

    def clear(self) -> None:
        self.cache.clear()
        self.latest = None


@dataclass
class SimulationResult:
    records: list[AssociationRecord]
    report_period: float
    n_detections: int = 0
    n_adverts_delivered: int = 0
    n_adverts_lost: int = 0
    n_expired: int = 0

    def batches(self) -> list[list[AssociationRecord]]:
        """The record stream as the gateway receives it, one list per reporting period."""
        return batch_by_period(self.records, self.report_period)


class _Engine:
    def __init__(self, network: RoadNetwork, cfg: SimConfig, radio_rng: np.random.Generator):
        self.env = simpy.Environment()
        self.network = network
        self.cfg = cfg
        self.rng = radio_rng
        self.nodes = [StreetlightNode(i, node) for i, node in enumerate(network.node_ids)]
        self.neighbors = network.radio_neighbors(cfg.radio_radius)
        self.result = SimulationResult(records=[], report_period=cfg.report_period)

    def element(self, events: list[tuple[float, int]]):
        for t, light in events:
            yield self.env.timeout(max(t - self.env.now, 0.0))
            self.detect(light, t)

    def detect(self, light: int, now: float) -> None:
        node = self.nodes[light]
        self.result.n_detections += 1
        if node.latest is not None:
            sender, sent_at = node.latest
            if now - sent_at <= self.cfg.advert_ttl:
                self.result.records.append(AssociationRecord(
                    receiver=node.node_id,
                    receiver_time=now,
                    sender=self.nodes[sender].node_id,
                    sender_time=sent_at,
                ))
            else:
                self.result.n_expired += 1
        node.clear()
        self.advertise(light, now)

    def advertise(self, sender: int, now: float) -> None:
        for receiver in self.neighbors[sender]:
            if self.rng.random() < self.cfg.message_loss_prob:
                self.result.n_adverts_lost += 1
                continue
            self.nodes[receiver].receive(sender, now)
            self.result.n_adverts_delivered += 1


def simulate(network: RoadNetwork, traffic: list[TrafficElement], cfg: SimConfig) -> SimulationResult:
    """Run every element to the end of its route; deterministic given cfg.rng_seed."""
    _, radio_rng = rng_streams(cfg.rng_seed)
    engine = _Engine(network, cfg, radio_rng)
    for element in traffic:
        legs = element.legs(network, lead=cfg.detection_radius)
        engine.env.process(engine.element(detection_events(legs, network.positions, cfg.detection_radius)))
    engine.env.run()

    result = engine.result
    logger.info(
        "Simulated %d elements: %d detections, %d records, %d adverts delivered, %d lost, %d expired",
        len(traffic), result.n_detections, len(result.records),
        result.n_adverts_delivered, result.n_adverts_lost, result.n_expired,
    )
    return result


@dataclass
class ScenarioRun:
    spec: ScenarioSpec
    network: RoadNetwork
    traffic: list[TrafficElement]
    result: SimulationResult
    metadata: dict = field(default_factory=dict)


def run_scenario(spec: ScenarioSpec) -> ScenarioRun:
    """Build the network, draw traffic and simulate with the scenario's own SimConfig."""
    network = build_network(spec)
    traffic_rng, _ = rng_streams(spec.sim.rng_seed)
    traffic = generate_traffic(network, spec.routes, spec.traffic, spec.sim, traffic_rng)
    result = simulate(network, traffic, spec.sim)
    metadata = {
        "scenario": spec.model_dump(mode="json"),
        "n_lights": len(network),
        "n_sectors": len(network.segments),
        "n_records": len(result.records),
        "n_detections": result.n_detections,
        "n_adverts_delivered": result.n_adverts_delivered,
        "n_adverts_lost": result.n_adverts_lost,
        "n_expired": result.n_expired,
        "assumptions": list(ASSUMPTIONS),
    }
    return ScenarioRun(spec=spec, network=network, traffic=traffic, result=result, metadata=metadata)
