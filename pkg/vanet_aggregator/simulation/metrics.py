#!/usr/bin/env python3
"""
Run metrics.
Counters gathered by the engine during one run, plus the reachability check
over the logged contact graph.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from vanet_aggregator.config import CSV_SCHEMA_VERSION
from vanet_aggregator.crypto import NodeId
from vanet_aggregator.packets import EventKey, PacketType


@dataclass
class Metrics:
    """Counters of one simulation run. All counters only grow during a run."""

    packets: Counter = field(default_factory=Counter)
    transmissions: int = 0
    deliveries: int = 0
    losses: int = 0
    verifications: Counter = field(default_factory=Counter)
    attacks_injected: Counter = field(default_factory=Counter)
    attacks_detected: Counter = field(default_factory=Counter)
    attacks_accepted: Counter = field(default_factory=Counter)
    drops: Counter = field(default_factory=Counter)
    false_reliable: int = 0
    groups_formed: int = 0
    signer_counts: Counter = field(default_factory=Counter)
    malicious_marks: int = 0
    covered_nodes: int = 0
    scope_nodes: int = 0
    coverage_time_s: float = math.nan
    reliable_at: dict[tuple[NodeId, EventKey], int] = field(default_factory=dict)
    contacts: list[tuple[int, NodeId, NodeId]] = field(default_factory=list)

    @property
    def packets_total(self) -> int:
        return sum(self.packets.values())

    @property
    def mean_verified(self) -> float:
        total = sum(self.verifications.values())
        if total == 0:
            return math.nan
        return sum(count * times for count, times in self.verifications.items()) / total

    @property
    def coverage_fraction(self) -> float:
        if self.scope_nodes == 0:
            return math.nan
        return self.covered_nodes / self.scope_nodes

    def count_packet(self, packet_type: PacketType) -> None:
        self.packets[packet_type.value] += 1

    def record_reliable(self, node: NodeId, key: EventKey, now: int) -> None:
        self.reliable_at.setdefault((node, key), now)

    def detection_rate(self, kind: str | None = None) -> float:
        """Share of processed malicious packets that honest nodes rejected."""
        if kind is None:
            detected = sum(self.attacks_detected.values())
            accepted = sum(self.attacks_accepted.values())
        else:
            detected = self.attacks_detected[kind]
            accepted = self.attacks_accepted[kind]
        if detected + accepted == 0:
            return math.nan
        return detected / (detected + accepted)

    def as_row(self) -> dict:
        """Flat CSV row; the column order is part of the output contract."""
        return {
            "schema_version": CSV_SCHEMA_VERSION,
            "packets_total": self.packets_total,
            "packets_w": self.packets[PacketType.W.value],
            "packets_r": self.packets[PacketType.R.value],
            "packets_s": self.packets[PacketType.S.value],
            "packets_a": self.packets[PacketType.A.value],
            "transmissions": self.transmissions,
            "deliveries": self.deliveries,
            "losses": self.losses,
            "groups_formed": self.groups_formed,
            "coverage_time_s": _fmt(self.coverage_time_s),
            "coverage_fraction": _fmt(self.coverage_fraction),
            "mean_verified": _fmt(self.mean_verified),
            "attacks_injected": sum(self.attacks_injected.values()),
            "attacks_detected": sum(self.attacks_detected.values()),
            "attacks_accepted": sum(self.attacks_accepted.values()),
            "detection_rate": _fmt(self.detection_rate()),
            "false_reliable": self.false_reliable,
            "malicious_marks": self.malicious_marks,
            "drops": sum(self.drops.values()),
        }


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.6g}"


def attack_report(metrics: Metrics) -> dict[str, float]:
    """Detection rate per adversary kind seen during the run."""
    kinds = set(metrics.attacks_injected) | set(metrics.attacks_detected) | set(metrics.attacks_accepted)
    return {kind: metrics.detection_rate(kind) for kind in sorted(kinds)}


def reachable_nodes(
    contacts: Iterable[tuple[int, NodeId, NodeId]],
    sources: dict[NodeId, int],
    until: int,
    latency_ms: int = 0,
) -> dict[NodeId, int]:
    """
    Time-respecting reachability over a contact log.

    A contact (t, a, b) carries a packet from a holder to the other side when
    the holder got it at or before t; the receiver holds it from t + latency.

    Args:
        contacts: Contact log entries (time_ms, a, b)
        sources: Node id -> time it started holding the packet
        until: Contacts after this time are ignored
        latency_ms: Delay before a receiver can pass the packet on

    Returns:
        Node id -> earliest time it can hold the packet
    """
    held = dict(sources)
    for t, a, b in sorted(contacts):
        if t > until:
            break
        for x, y in ((a, b), (b, a)):
            if x in held and held[x] <= t:
                arrival = t + latency_ms
                if arrival < held.get(y, math.inf):
                    held[y] = arrival
    return held
