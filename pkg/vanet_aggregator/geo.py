#!/usr/bin/env python3
"""
Event geometry.
Zone classification, safety distance and cell sizing, and the cell grid that
every node in the danger zone rebuilds from the event coordinates.
"""

import math
import struct
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import NamedTuple

from vanet_aggregator.config import LANE_WIDTH_M


class GeoError(ValueError):
    """Raised when geometric inputs violate their domain."""


@dataclass(frozen=True)
class Position:
    """Planar-plus-altitude position in meters (x east, y north, z up)."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise GeoError(f"Position coordinates must be finite: {self}")

    def quantized(self) -> "Position":
        """Round to millimetre resolution, the precision used on the wire."""
        return Position(
            round(self.x * 1000) / 1000,
            round(self.y * 1000) / 1000,
            round(self.z * 1000) / 1000,
        )


class RoadClass(IntEnum):
    """Road classes, valued by their one-byte wire code."""

    CONVENTIONAL = 1
    HIGHWAY = 2


@dataclass(frozen=True)
class RoadProfile:
    """Road parameters that size the cells."""

    lanes_per_direction: int
    speed_limit: float  # km/h
    road_class: RoadClass = RoadClass.CONVENTIONAL
    heading: float = 0.0  # radians, road axis

    def __post_init__(self):
        if self.lanes_per_direction < 1:
            raise GeoError("lanes_per_direction must be at least 1")
        if not self.speed_limit > 0:
            raise GeoError("speed_limit must be positive")
        if not 0.0 <= self.heading < 2 * math.pi:
            raise GeoError("heading must lie in [0, 2*pi)")


@dataclass(frozen=True)
class ZoneRadii:
    """Radii of the three concentric zones, fixed by the source node."""

    danger_radius: float
    uncertainty_radius: float
    security_radius: float

    def __post_init__(self):
        if not 0 < self.danger_radius < self.uncertainty_radius < self.security_radius:
            raise GeoError(
                "zone radii must satisfy 0 < danger < uncertainty < security, "
                f"got {self.danger_radius}, {self.uncertainty_radius}, {self.security_radius}"
            )


class Zone(str, Enum):
    """Zone of a node relative to an event."""

    DANGER = "danger"
    UNCERTAINTY = "uncertainty"
    SECURITY = "security"
    OUT_OF_SCOPE = "out_of_scope"


class CellId(NamedTuple):
    """Integer cell index; (0, 0) is the central cell."""

    i: int
    j: int


@dataclass(frozen=True)
class CellGrid:
    """Cell partition of the plane around an event."""

    origin: Position
    cell_length: float
    cell_width: float
    heading: float
    extent: float

    def __post_init__(self):
        if not (self.cell_length > 0 and self.cell_width > 0):
            raise GeoError("cell dimensions must be positive")

    def to_bytes(self) -> bytes:
        """Canonical serialization, identical for identical grids."""
        return struct.pack(
            ">7d",
            self.origin.x,
            self.origin.y,
            self.origin.z,
            self.cell_length,
            self.cell_width,
            self.heading,
            self.extent,
        )

    def road_frame(self, p: Position) -> tuple[float, float]:
        """Offsets (along road, across road) of p relative to the origin."""
        dx = p.x - self.origin.x
        dy = p.y - self.origin.y
        cos_h = math.cos(self.heading)
        sin_h = math.sin(self.heading)
        return dx * cos_h + dy * sin_h, -dx * sin_h + dy * cos_h


def horizontal_distance(a: Position, b: Position) -> float:
    """Euclidean distance in the horizontal plane; altitude is ignored."""
    return math.hypot(a.x - b.x, a.y - b.y)


def safety_distance(speed_limit: float) -> float:
    """
    Safety distance for a road speed, the square of a tenth of the speed.

    Args:
        speed_limit: Speed limit in km/h

    Returns:
        Safety distance in meters
    """
    if not speed_limit > 0:
        raise GeoError(f"speed_limit must be positive, got {speed_limit}")
    return (speed_limit / 10.0) ** 2


def cell_dimensions(road: RoadProfile) -> tuple[float, float]:
    """
    Compute cell length and width for a road.

    Length is twice the safety distance; width is the lane count times 4 m.

    Returns:
        Tuple of (cell_length, cell_width) in meters
    """
    cell_length = 2 * safety_distance(road.speed_limit)
    cell_width = LANE_WIDTH_M * road.lanes_per_direction
    return cell_length, cell_width


def cell_area(road: RoadProfile) -> float:
    """Area of one cell in square meters."""
    length, width = cell_dimensions(road)
    return length * width


def max_group_size(road: RoadProfile) -> int:
    """
    Maximum number of vehicles in one cell under normal spacing.

    Vehicles keep one safety distance per lane and are counted at both ends
    of the cell.
    """
    length, _ = cell_dimensions(road)
    per_lane = math.floor(length / safety_distance(road.speed_limit)) + 1
    return road.lanes_per_direction * per_lane


def classify_zone(node: Position, event: Position, radii: ZoneRadii) -> Zone:
    """Classify a node into the zone it occupies with respect to an event."""
    d = horizontal_distance(node, event)
    if d <= radii.danger_radius:
        return Zone.DANGER
    if d <= radii.uncertainty_radius:
        return Zone.UNCERTAINTY
    if d <= radii.security_radius:
        return Zone.SECURITY
    return Zone.OUT_OF_SCOPE


def build_grid(event: Position, road: RoadProfile, danger_radius: float) -> CellGrid:
    """Build the cell grid centred on the event location."""
    if not danger_radius > 0:
        raise GeoError("danger_radius must be positive")
    cell_length, cell_width = cell_dimensions(road)
    return CellGrid(
        origin=event,
        cell_length=cell_length,
        cell_width=cell_width,
        heading=road.heading,
        extent=float(danger_radius),
    )


def cell_of(grid: CellGrid, p: Position) -> CellId:
    """
    Map a position to its cell.

    Cells are half-open on each axis, so the central cell spans
    [-L/2, L/2) along the road and [-W/2, W/2) across it.
    """
    u, v = grid.road_frame(p)
    i = math.floor((u + grid.cell_length / 2) / grid.cell_length)
    j = math.floor((v + grid.cell_width / 2) / grid.cell_width)
    return CellId(i, j)


def cell_center(grid: CellGrid, cell: CellId) -> Position:
    """World position of the centre of a cell."""
    u = cell.i * grid.cell_length
    v = cell.j * grid.cell_width
    cos_h = math.cos(grid.heading)
    sin_h = math.sin(grid.heading)
    return Position(
        grid.origin.x + u * cos_h - v * sin_h,
        grid.origin.y + u * sin_h + v * cos_h,
        grid.origin.z,
    )


def danger_cells(grid: CellGrid) -> list[CellId]:
    """List every cell whose rectangle intersects the danger disc."""
    half_l = grid.cell_length / 2
    half_w = grid.cell_width / 2
    max_i = math.ceil((grid.extent + half_l) / grid.cell_length)
    max_j = math.ceil((grid.extent + half_w) / grid.cell_width)
    cells = []
    for i in range(-max_i, max_i + 1):
        lo_u, hi_u = i * grid.cell_length - half_l, i * grid.cell_length + half_l
        nearest_u = min(max(0.0, lo_u), hi_u)
        for j in range(-max_j, max_j + 1):
            lo_v, hi_v = j * grid.cell_width - half_w, j * grid.cell_width + half_w
            nearest_v = min(max(0.0, lo_v), hi_v)
            if math.hypot(nearest_u, nearest_v) <= grid.extent:
                cells.append(CellId(i, j))
    return cells
