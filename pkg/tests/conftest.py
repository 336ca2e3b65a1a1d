"""Shared fixtures."""

import numpy as np
import pytest

from vanet_aggregator.crypto import Directory, DigestAlgo, generate_keypair
from vanet_aggregator.settings import SimConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def keys(rng):
    """Key pairs for nodes 1..30."""
    return {nid: generate_keypair(nid, rng) for nid in range(1, 31)}


@pytest.fixture
def directory(keys):
    registry = Directory()
    for key in keys.values():
        registry.register(key)
    return registry


@pytest.fixture
def algo():
    return DigestAlgo.SHA1


@pytest.fixture
def small_config():
    """A short, dense network that forms groups quickly."""
    return SimConfig(node_count=12, sim_duration=120, seed=7)


@pytest.fixture
def report():
    """Traffic jam reported by node 1 at (100, 2)."""
    from vanet_aggregator.geo import Position, RoadProfile, ZoneRadii
    from vanet_aggregator.packets import Direction, EventReport, EventType

    return EventReport.create(
        position=Position(100.0, 2.0),
        event_type=EventType.TRAFFIC_JAM,
        direction=Direction.FORWARD,
        road_id=1,
        road=RoadProfile(lanes_per_direction=3, speed_limit=120),
        radii=ZoneRadii(100, 500, 2000),
        timestamp=40_000,
        source=1,
    )
