#!/usr/bin/env python3
"""
Road-strip mobility.
Vehicles drive at a constant speed along their lane and re-enter at the
other end of the strip. Positions are closed-form in time, so the engine can
ask for them at any instant.
"""

from dataclasses import dataclass

import numpy as np

from vanet_aggregator.config import LANE_WIDTH_M
from vanet_aggregator.geo import Position
from vanet_aggregator.packets import Direction


def lane_offset(lane: int, direction: Direction) -> float:
    """Lateral coordinate of a lane centre; forward lanes lie at y > 0."""
    return direction.sign * (LANE_WIDTH_M / 2 + LANE_WIDTH_M * lane)


def carriageway_center(lanes_per_direction: int, direction: Direction) -> float:
    return direction.sign * LANE_WIDTH_M * lanes_per_direction / 2


def mobility_step(x: np.ndarray, speed_ms: np.ndarray, sign: np.ndarray, dt: float, strip_length: float) -> np.ndarray:
    """
    Advance positions along the strip by dt seconds.

    Args:
        x: Positions along the strip in meters
        speed_ms: Speeds in m/s
        sign: +1 for forward, -1 for backward traffic
        dt: Time step in seconds, positive
        strip_length: Length of the strip in meters

    Returns:
        New positions, wrapped into [0, strip_length)
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    return np.mod(x + sign * speed_ms * dt, strip_length)


def contact_interval(closing_speed_ms: float, tx_range: float) -> float:
    """Longest time two vehicles closing at the given speed stay in range."""
    if not closing_speed_ms > 0:
        raise ValueError("closing speed must be positive")
    return 2 * tx_range / closing_speed_ms


@dataclass(frozen=True)
class Fleet:
    """Initial state of every vehicle; index i holds node id i + 1."""

    x0: np.ndarray
    lane_y: np.ndarray
    speed_ms: np.ndarray
    sign: np.ndarray
    strip_length: float

    def __len__(self) -> int:
        return len(self.x0)

    def along(self, t_s: float) -> np.ndarray:
        if t_s == 0:
            return self.x0.copy()
        return mobility_step(self.x0, self.speed_ms, self.sign, t_s, self.strip_length)

    def positions(self, t_s: float) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (x, y) of every vehicle at time t_s."""
        return self.along(t_s), self.lane_y

    def position(self, index: int, t_s: float) -> Position:
        x = (self.x0[index] + self.sign[index] * self.speed_ms[index] * t_s) % self.strip_length
        return Position(float(x), float(self.lane_y[index]))

    def direction(self, index: int) -> Direction:
        return Direction.FORWARD if self.sign[index] > 0 else Direction.BACKWARD

    def speed_kmh(self, index: int) -> float:
        return float(self.speed_ms[index] * 3.6)


def spawn_fleet(
    node_count: int,
    strip_length: float,
    lanes_per_direction: int,
    speed_limit: float,
    min_speed_fraction: float,
    max_speed_fraction: float,
    seed: int,
) -> Fleet:
    """
    Draw direction, lane, start position and speed of every vehicle.

    Each vehicle uses its own generator seeded with (seed, index), so a larger
    fleet keeps the vehicles of a smaller one unchanged.
    """
    x0 = np.empty(node_count)
    lane_y = np.empty(node_count)
    speed_ms = np.empty(node_count)
    sign = np.empty(node_count)
    for i in range(node_count):
        rng = np.random.default_rng([seed, i])
        direction = Direction.FORWARD if rng.random() < 0.5 else Direction.BACKWARD
        lane = int(rng.integers(lanes_per_direction))
        x0[i] = rng.uniform(0.0, strip_length)
        speed_ms[i] = rng.uniform(min_speed_fraction, max_speed_fraction) * speed_limit / 3.6
        sign[i] = direction.sign
        lane_y[i] = lane_offset(lane, direction)
    return Fleet(x0, lane_y, speed_ms, sign, float(strip_length))


def pairs_in_range(x: np.ndarray, y: np.ndarray, tx_range: float) -> set[tuple[int, int]]:
    """Index pairs (i < j) whose horizontal distance is at most tx_range."""
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    close = np.hypot(dx, dy) <= tx_range
    i, j = np.nonzero(np.triu(close, k=1))
    return {(int(a), int(b)) for a, b in zip(i, j)}


def in_range_of(x: np.ndarray, y: np.ndarray, index: int, tx_range: float) -> list[int]:
    """Indices within tx_range of vehicle index, itself excluded."""
    d = np.hypot(x - x[index], y - y[index])
    found = np.flatnonzero(d <= tx_range)
    return [int(i) for i in found if i != index]
