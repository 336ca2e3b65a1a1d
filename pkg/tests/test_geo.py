"""Zone, safety distance and cell grid tests."""

import math

import pytest

from vanet_aggregator.geo import (
    CellId,
    GeoError,
    Position,
    RoadClass,
    RoadProfile,
    Zone,
    ZoneRadii,
    build_grid,
    cell_area,
    cell_center,
    cell_dimensions,
    cell_of,
    classify_zone,
    danger_cells,
    horizontal_distance,
    max_group_size,
    safety_distance,
)

RADII = ZoneRadii(100, 500, 2000)
ROAD = RoadProfile(lanes_per_direction=3, speed_limit=120)


@pytest.mark.parametrize(
    "distance, zone",
    [
        (0, Zone.DANGER),
        (100, Zone.DANGER),
        (100.5, Zone.UNCERTAINTY),
        (500, Zone.UNCERTAINTY),
        (1999, Zone.SECURITY),
        (2000, Zone.SECURITY),
        (2000.1, Zone.OUT_OF_SCOPE),
    ],
)
def test_classify_zone_boundaries(distance, zone):
    assert classify_zone(Position(distance, 0), Position(0, 0), RADII) is zone


def test_altitude_is_ignored():
    assert horizontal_distance(Position(3, 4, 50), Position(0, 0, 0)) == 5
    assert classify_zone(Position(0, 50, 900), Position(0, 0), RADII) is Zone.DANGER


def test_radii_must_be_ordered():
    with pytest.raises(GeoError):
        ZoneRadii(100, 100, 2000)
    with pytest.raises(GeoError):
        ZoneRadii(0, 500, 2000)


@pytest.mark.parametrize("speed, expected", [(120, 144.0), (50, 25.0), (10, 1.0)])
def test_safety_distance(speed, expected):
    assert safety_distance(speed) == pytest.approx(expected)


def test_safety_distance_rejects_non_positive():
    with pytest.raises(GeoError):
        safety_distance(0)


def test_reference_cell():
    assert cell_dimensions(ROAD) == (288.0, 12.0)
    assert cell_area(ROAD) == 3456.0
    assert max_group_size(ROAD) == 9


def test_cell_dimensions_are_monotone():
    lengths = [cell_dimensions(RoadProfile(3, speed))[0] for speed in range(10, 131, 10)]
    widths = [cell_dimensions(RoadProfile(lanes, 120))[1] for lanes in range(1, 7)]
    assert all(a < b for a, b in zip(lengths, lengths[1:]))
    assert all(a < b for a, b in zip(widths, widths[1:]))
    assert len(set(cell_dimensions(RoadProfile(lanes, 90))[0] for lanes in range(1, 7))) == 1


def test_road_profile_validation():
    with pytest.raises(GeoError):
        RoadProfile(lanes_per_direction=0, speed_limit=120)
    with pytest.raises(GeoError):
        RoadProfile(lanes_per_direction=3, speed_limit=-1)
    assert RoadProfile(2, 90, RoadClass.HIGHWAY).road_class is RoadClass.HIGHWAY


def test_position_rejects_non_finite():
    with pytest.raises(GeoError):
        Position(math.nan, 0)


def test_event_sits_in_central_cell():
    grid = build_grid(Position(250, 30), ROAD, 100)
    assert cell_of(grid, Position(250, 30)) == CellId(0, 0)


def test_cells_are_half_open():
    grid = build_grid(Position(0, 0), ROAD, 100)
    assert cell_of(grid, Position(143.999, 0)) == CellId(0, 0)
    assert cell_of(grid, Position(144, 0)) == CellId(1, 0)
    assert cell_of(grid, Position(-144, 0)) == CellId(0, 0)
    assert cell_of(grid, Position(0, 6)) == CellId(0, 1)


def test_same_event_gives_same_grid():
    a = build_grid(Position(10, 20), ROAD, 100)
    b = build_grid(Position(10, 20), ROAD, 100)
    assert a.to_bytes() == b.to_bytes()
    assert a.to_bytes() != build_grid(Position(11, 20), ROAD, 100).to_bytes()


def test_cell_center_round_trips_through_cell_of():
    grid = build_grid(Position(5, 5), RoadProfile(3, 120, heading=math.pi / 6), 100)
    for cell in danger_cells(grid):
        assert cell_of(grid, cell_center(grid, cell)) == cell


def test_danger_cells_cover_the_disc():
    grid = build_grid(Position(0, 0), ROAD, 100)
    cells = set(danger_cells(grid))
    assert CellId(0, 0) in cells
    for angle in range(0, 360, 15):
        rad = math.radians(angle)
        point = Position(99 * math.cos(rad), 99 * math.sin(rad))
        assert cell_of(grid, point) in cells
