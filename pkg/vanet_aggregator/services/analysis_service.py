#!/usr/bin/env python3
"""
Analysis service.
Closed-form tables behind the choice of k, packet sizing and cell sizing.
"""

from typing import Any, Dict, List

from vanet_aggregator.config import CSV_SCHEMA_VERSION
from vanet_aggregator.geo import (
    Position,
    RoadProfile,
    build_grid,
    cell_dimensions,
    danger_cells,
    max_group_size,
    safety_distance,
)
from vanet_aggregator.packets import PacketBudget, max_signers_practical, sizing_table
from vanet_aggregator.verify import prob_at_least_two, verification_probability

MIN_PROB_N = 2
MAX_PROB_N = 200


def probability_rows(ks: List[int], n_lo: int, n_hi: int) -> List[Dict[str, Any]]:
    """
    Probability of at least two checks for every (k, n).

    Args:
        ks: Values of k
        n_lo: First n, at least 2
        n_hi: Last n, at most 200

    Returns:
        Rows (k, n, p, p_at_least_two), k-major
    """
    if not MIN_PROB_N <= n_lo <= n_hi <= MAX_PROB_N:
        raise ValueError(f"n range must lie within {MIN_PROB_N}..{MAX_PROB_N}, got {n_lo}..{n_hi}")
    if any(k < 1 for k in ks):
        raise ValueError("k values must be positive")

    rows = []
    for k in ks:
        for n in range(n_lo, n_hi + 1):
            p = verification_probability(n, k)
            rows.append(
                {
                    "schema_version": CSV_SCHEMA_VERSION,
                    "k": k,
                    "n": n,
                    "p": f"{p:.10g}",
                    "p_at_least_two": f"{prob_at_least_two(n, p):.10g}",
                }
            )
    return rows


def sizing_rows() -> List[Dict[str, Any]]:
    """The twelve (digest, packet size) rows, smallest packets first."""
    rows = []
    for row in sizing_table():
        rows.append(
            {
                "schema_version": CSV_SCHEMA_VERSION,
                "hash": row.algo.label,
                "packet_size": row.packet_size,
                "signature_area": row.signature_area,
                "max_signatures": row.max_signatures,
                "max_signers_practical": max_signers_practical(PacketBudget(row.packet_size), row.algo),
            }
        )
    return rows


def cell_summary(lanes: int, speed: float, danger_radius: float) -> Dict[str, Any]:
    """Cell geometry for a road, plus the cells that cover the danger zone."""
    road = RoadProfile(lanes_per_direction=lanes, speed_limit=speed)
    length, width = cell_dimensions(road)
    grid = build_grid(Position(0.0, 0.0), road, danger_radius)
    cells = danger_cells(grid)
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "lanes": lanes,
        "speed_limit": speed,
        "safety_distance": safety_distance(speed),
        "cell_length": length,
        "cell_width": width,
        "cell_area": length * width,
        "max_group_size": max_group_size(road),
        "danger_cells": len(cells),
        "cells": " ".join(f"({c.i},{c.j})" for c in cells),
    }
