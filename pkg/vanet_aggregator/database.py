#!/usr/bin/env python3
"""
Database models for the sweep archive.
Uses SQLModel to define the database schema.
"""

from datetime import datetime
from enum import Enum
from typing import Optional

from sqlalchemy import DateTime, UniqueConstraint
from sqlmodel import Column, Field, SQLModel


class Scheme(str, Enum):
    """Which protocol variant produced a run."""

    AGGREGATED = "aggregated"
    BASELINE = "baseline"


class SweepRun(SQLModel, table=True):
    """
    One simulation run of a sweep.
    Re-running the same sweep into the same archive replaces nothing; the
    (sweep_id, node_count, seed, scheme) tuple is unique.
    """

    __table_args__ = (UniqueConstraint("sweep_id", "node_count", "seed", "scheme"),)

    # Primary key
    id: Optional[int] = Field(default=None, primary_key=True)

    # Sweep identity
    sweep_id: str = Field(index=True, max_length=64)
    created_at: Optional[datetime] = Field(default=None, sa_column=Column(DateTime))
    config_json: str = Field(default="{}")

    # Run identity
    node_count: int = Field(index=True)
    seed: int
    scheme: Scheme = Field(default=Scheme.AGGREGATED)

    # Results
    packets_total: int = Field(default=0)
    packets_w: int = Field(default=0)
    packets_r: int = Field(default=0)
    packets_s: int = Field(default=0)
    packets_a: int = Field(default=0)
    groups_formed: int = Field(default=0)
    coverage_time_s: Optional[float] = Field(default=None)
    coverage_fraction: Optional[float] = Field(default=None)
    mean_verified: Optional[float] = Field(default=None)
    detection_rate: Optional[float] = Field(default=None)
    false_reliable: int = Field(default=0)
