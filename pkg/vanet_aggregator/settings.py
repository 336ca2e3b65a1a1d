#!/usr/bin/env python3
"""
Run configuration.
Parses the flat ``key = value`` config files into a validated SimConfig.
"""

import logging
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from vanet_aggregator.config import (
    AGREEMENT_WINDOW_MS,
    BASIC_TIME_JAM_S,
    BASIC_TIME_PARKING_S,
    DANGER_RADIUS_M,
    DEFAULT_K,
    DEFAULT_MIN_SIGNATURES,
    ENCOUNTER_PERIOD_MS,
    EVENT_DISTANCE_M,
    GROUP_WINDOW_MS,
    LANES_PER_DIRECTION,
    LATENCY_MS,
    MAX_GROUP_WINDOW_MS,
    MAX_SPEED_FRACTION,
    MAX_TX_RANGE_M,
    MIN_SPEED_FRACTION,
    NODE_COUNT,
    PACKET_SIZES,
    PRESETS_DIR,
    RETRANSMISSION_PERIOD_S,
    RETRANSMISSION_START_S,
    ROAD_FACTOR_CONVENTIONAL,
    ROAD_FACTOR_HIGHWAY,
    SECURITY_RADIUS_M,
    SIM_DURATION_S,
    SPEED_LIMIT_KMH,
    STRIP_LENGTH_M,
    TX_RANGE_M,
    UNCERTAINTY_RADIUS_M,
)
from vanet_aggregator.crypto import DigestAlgo
from vanet_aggregator.geo import RoadClass, RoadProfile, ZoneRadii
from vanet_aggregator.packets import EventType, PacketBudget
from vanet_aggregator.protocol import ProtocolSettings
from vanet_aggregator.simulation.adversary import AdversaryKind

logger = logging.getLogger(__name__)

_EVENT_TYPES = {
    "traffic_jam": EventType.TRAFFIC_JAM,
    "free_parking": EventType.FREE_PARKING,
    "accident": EventType.ACCIDENT,
    "obstacle": EventType.OBSTACLE,
}


class ConfigError(ValueError):
    """Raised when a config file or value is rejected."""


class SimConfig(BaseModel):
    """Every tunable of a simulation run; defaults reproduce the reference setup."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Experiment
    experiment: Literal["network", "verification_bench"] = "network"
    seed: int = Field(default=0, ge=0, lt=2**64)
    aggregation_enabled: bool = True
    adversaries: str = ""
    bench_runs: int = Field(default=1000, gt=0)

    # Road and mobility
    node_count: int = Field(default=NODE_COUNT, gt=0)
    strip_length: float = Field(default=STRIP_LENGTH_M, gt=0)
    lanes_per_direction: int = Field(default=LANES_PER_DIRECTION, gt=0)
    speed_limit: float = Field(default=SPEED_LIMIT_KMH, gt=0)
    road_class: Literal["conventional", "highway"] = "conventional"
    min_speed_fraction: float = Field(default=MIN_SPEED_FRACTION, gt=0, le=1)
    max_speed_fraction: float = Field(default=MAX_SPEED_FRACTION, gt=0, le=1)
    sim_duration: float = Field(default=SIM_DURATION_S, gt=0)
    event_distance: float = Field(default=EVENT_DISTANCE_M, gt=0)
    event_type: Literal["traffic_jam", "free_parking", "accident", "obstacle"] = "traffic_jam"

    # Radio and scheduling
    tx_range: float = Field(default=TX_RANGE_M, gt=0, le=MAX_TX_RANGE_M)
    latency_ms: int = Field(default=LATENCY_MS, gt=0)
    loss_rate: float = Field(default=0.0, ge=0, lt=1)
    encounter_period_ms: int = Field(default=ENCOUNTER_PERIOD_MS, gt=0)
    retransmission_start: float = Field(default=RETRANSMISSION_START_S, gt=0)
    retransmission_period: float = Field(default=RETRANSMISSION_PERIOD_S, gt=0)

    # Zones
    danger_radius: float = Field(default=DANGER_RADIUS_M, gt=0)
    uncertainty_radius: float = Field(default=UNCERTAINTY_RADIUS_M, gt=0)
    security_radius: float = Field(default=SECURITY_RADIUS_M, gt=0)

    # Protocol policy
    k: int = Field(default=DEFAULT_K, gt=0)
    min_signatures: int = Field(default=DEFAULT_MIN_SIGNATURES, gt=0)
    group_window_ms: int = Field(default=GROUP_WINDOW_MS, gt=0, le=MAX_GROUP_WINDOW_MS)
    agreement_window_ms: int = Field(default=AGREEMENT_WINDOW_MS, gt=0)
    packet_size: int = 1024
    digest: DigestAlgo = DigestAlgo.SHA1
    t_jam: float = Field(default=BASIC_TIME_JAM_S, gt=0)
    t_parking: float = Field(default=BASIC_TIME_PARKING_S, gt=0)
    t_accident: float | None = Field(default=None, gt=0)
    t_obstacle: float | None = Field(default=None, gt=0)
    f_conventional: float = Field(default=ROAD_FACTOR_CONVENTIONAL, gt=0)
    f_highway: float = Field(default=ROAD_FACTOR_HIGHWAY, gt=0)

    @field_validator("packet_size")
    @classmethod
    def _known_packet_size(cls, value: int) -> int:
        if value not in PACKET_SIZES:
            raise ValueError(f"must be one of {PACKET_SIZES}")
        return value

    @field_validator("digest", mode="before")
    @classmethod
    def _digest_alias(cls, value):
        if isinstance(value, str):
            return value.strip().lower().replace("-", "")
        return value

    @field_validator("adversaries")
    @classmethod
    def _known_adversaries(cls, value: str) -> str:
        parse_adversaries(value)
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "SimConfig":
        if self.min_speed_fraction > self.max_speed_fraction:
            raise ValueError("min_speed_fraction must not exceed max_speed_fraction")
        ZoneRadii(self.danger_radius, self.uncertainty_radius, self.security_radius)
        if self.event_distance > self.strip_length:
            raise ValueError("event_distance must lie on the strip")
        return self

    @property
    def road(self) -> RoadProfile:
        return RoadProfile(
            lanes_per_direction=self.lanes_per_direction,
            speed_limit=self.speed_limit,
            road_class=RoadClass[self.road_class.upper()],
        )

    @property
    def radii(self) -> ZoneRadii:
        return ZoneRadii(self.danger_radius, self.uncertainty_radius, self.security_radius)

    @property
    def event(self) -> EventType:
        return _EVENT_TYPES[self.event_type]

    @property
    def budget(self) -> PacketBudget:
        return PacketBudget(self.packet_size)

    @property
    def adversary_counts(self) -> dict[AdversaryKind, int]:
        return parse_adversaries(self.adversaries)

    def protocol_settings(self) -> ProtocolSettings:
        basic_times = {
            EventType.TRAFFIC_JAM: self.t_jam,
            EventType.FREE_PARKING: self.t_parking,
        }
        if self.t_accident is not None:
            basic_times[EventType.ACCIDENT] = self.t_accident
        if self.t_obstacle is not None:
            basic_times[EventType.OBSTACLE] = self.t_obstacle
        return ProtocolSettings(
            algo=self.digest,
            budget=self.budget,
            k=self.k,
            min_signatures=self.min_signatures,
            group_window_ms=self.group_window_ms,
            agreement_window_ms=self.agreement_window_ms,
            basic_times_s=basic_times,
            road_factors={
                RoadClass.CONVENTIONAL: self.f_conventional,
                RoadClass.HIGHWAY: self.f_highway,
            },
        )

    def with_overrides(self, **changes) -> "SimConfig":
        """Copy with some values replaced; the result is validated again."""
        try:
            return SimConfig(**{**self.model_dump(), **changes})
        except ValidationError as e:
            raise ConfigError(_describe(e)) from None


def parse_adversaries(text: str) -> dict[AdversaryKind, int]:
    """
    Parse ``Kind:count, Kind:count``.

    Raises:
        ConfigError: On unknown kinds, bad counts or repeated kinds
    """
    counts: dict[AdversaryKind, int] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, count = item.partition(":")
        try:
            kind = AdversaryKind(name.strip())
        except ValueError:
            known = ", ".join(k.value for k in AdversaryKind)
            raise ConfigError(f"unknown adversary behavior '{name.strip()}' (known: {known})") from None
        try:
            value = int(count) if count.strip() else 1
        except ValueError:
            raise ConfigError(f"adversary count for {kind.value} must be an integer") from None
        if value < 0:
            raise ConfigError(f"adversary count for {kind.value} must not be negative")
        if kind in counts:
            raise ConfigError(f"adversary behavior {kind.value} given twice")
        counts[kind] = value
    return counts


def accepted_keys() -> str:
    """One ``key = default`` line per accepted config key."""
    lines = []
    for name, info in SimConfig.model_fields.items():
        default = info.default
        if isinstance(default, DigestAlgo):
            default = default.value
        lines.append(f"  {name} = {'' if default is None else default}")
    return "\n".join(lines)


def _describe(error: ValidationError) -> str:
    messages = []
    for item in error.errors():
        key = ".".join(str(part) for part in item["loc"]) or "config"
        if item["type"] == "extra_forbidden":
            messages.append(f"unknown key '{key}'; accepted keys and defaults:\n{accepted_keys()}")
        else:
            messages.append(f"{key}: {item['msg']}")
    return "\n".join(messages)


def parse_config_text(text: str, source: str = "<config>") -> SimConfig:
    """
    Parse config text: one ``key = value`` per line, ``#`` starts a comment.

    Missing keys take their defaults.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got '{raw.strip()}'")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: key '{key}' given twice")
        values[key] = value.strip()
    values = {key: value for key, value in values.items() if value != ""}
    try:
        return SimConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_describe(e)}") from None


def load_config(path: Path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config '{path}': {e}") from None
    config = parse_config_text(text, source=str(path))
    logger.info("loaded config %s", path)
    return config


def preset_path(name: str) -> Path:
    path = PRESETS_DIR / f"{name}.conf"
    if not path.is_file():
        known = ", ".join(sorted(p.stem for p in PRESETS_DIR.glob("*.conf")))
        raise ConfigError(f"unknown preset '{name}' (known: {known})")
    return path


def resolve_config(config: Path | None = None, preset: str | None = None) -> SimConfig:
    """Config from a file, a named preset, or the defaults."""
    if config is not None and preset is not None:
        raise ConfigError("give either a config file or a preset, not both")
    if config is not None:
        return load_config(config)
    if preset is not None:
        return load_config(preset_path(preset))
    return SimConfig()
