#!/usr/bin/env python3
"""
Discrete-event engine.
A seeded, single-threaded simulation of vehicles on a two-way road strip:
broadcast and unicast delivery within radio range, encounter-driven relay,
retransmission ticks, adversaries and metrics.
"""

import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, TextIO

import numpy as np

from vanet_aggregator.config import ADVERSARY_START_MS
from vanet_aggregator.crypto import Directory, NodeId, generate_keypair
from vanet_aggregator.geo import Position, Zone, cell_of, classify_zone, horizontal_distance
from vanet_aggregator.packets import (
    Direction,
    EventKey,
    EventReport,
    EventType,
    Incident,
    Packet,
    PacketA,
    PacketR,
    PacketS,
    PacketW,
)
from vanet_aggregator.protocol import (
    GroupRequest,
    NodeState,
    Observation,
    Outbound,
    PendingGroup,
    Role,
    StoredEvent,
    baseline_on_packet_w,
    expire_store,
    expiry_of,
    finalize_group,
    on_detect_event,
    on_encounter,
    on_packet_a,
    on_packet_r,
    on_packet_s,
    on_packet_w,
)
from vanet_aggregator.settings import SimConfig
from vanet_aggregator.simulation.adversary import (
    ADVERSARY_STREAM,
    AdversaryKind,
    append_false_trust,
    assign_adversaries,
    collusion_aggregate,
    insert_forged_signature,
    modify_aggregate,
)
from vanet_aggregator.simulation.metrics import Metrics
from vanet_aggregator.simulation.mobility import (
    carriageway_center,
    in_range_of,
    pairs_in_range,
    spawn_fleet,
)
from vanet_aggregator.simulation.trace import TraceWriter
from vanet_aggregator.verify import VerificationOutcome

logger = logging.getLogger(__name__)

ROAD_ID = 1
KEY_STREAM = 0x4B
LOSS_STREAM = 0x10


class SimulationError(RuntimeError):
    """Raised when a run cannot start."""


class EventKind(str, Enum):
    DELIVER = "deliver"
    DETECT = "detect"
    TICK = "tick"
    ENCOUNTER_CHECK = "encounter"
    GROUP_DEADLINE = "deadline"


@dataclass(order=True)
class SimEvent:
    """Queue entry, ordered by (time, sequence number)."""

    time: int
    seq: int
    kind: EventKind = field(compare=False)
    node: NodeId | None = field(default=None, compare=False)
    payload: Any = field(default=None, compare=False)


@dataclass(frozen=True)
class RealEvent:
    """An event that physically exists on the road."""

    position: Position
    event_type: EventType
    direction: Direction
    road_id: int = ROAD_ID

    @property
    def incident(self) -> Incident:
        return Incident(
            int(round(self.position.x * 1000)),
            int(round(self.position.y * 1000)),
            int(round(self.position.z * 1000)),
            int(self.event_type),
        )


class World:
    """Everything one run owns: vehicles, queue, adversaries and counters."""

    def __init__(self, config: SimConfig, aggregation: bool | None = None, trace: TextIO | None = None):
        self.config = config
        self.aggregation = config.aggregation_enabled if aggregation is None else aggregation
        self.settings = config.protocol_settings()
        self.metrics = Metrics()
        self.trace = TraceWriter(trace)
        self.end = int(round(config.sim_duration * 1000))
        self._queue: list[SimEvent] = []
        self._seq = 0
        self._pairs: set[tuple[int, int]] = set()
        self._loss_rng = np.random.default_rng([config.seed, LOSS_STREAM])
        self._attack_rng = np.random.default_rng([config.seed, ADVERSARY_STREAM, 1])

        self.fleet = spawn_fleet(
            config.node_count,
            config.strip_length,
            config.lanes_per_direction,
            config.speed_limit,
            config.min_speed_fraction,
            config.max_speed_fraction,
            config.seed,
        )
        self.incident = RealEvent(
            Position(config.event_distance, carriageway_center(config.lanes_per_direction, Direction.FORWARD)),
            config.event,
            Direction.FORWARD,
        )
        self.real_incidents = {self.incident.incident}

        node_ids = [i + 1 for i in range(config.node_count)]
        self.behaviours: dict[NodeId, AdversaryKind] = {}
        self.fabricated: dict[EventKey, AdversaryKind] = {}
        self.tainted: dict[Packet, AdversaryKind] = {}
        if self.aggregation:
            try:
                self.inject_adversary(assign_adversaries(config.adversary_counts, node_ids, config.seed))
            except ValueError as e:
                raise SimulationError(str(e)) from None

        self.directory = Directory()
        keys = [generate_keypair(nid, np.random.default_rng([config.seed, nid - 1, KEY_STREAM])) for nid in node_ids]
        for key in keys:
            if self.behaviours.get(key.node) is not AdversaryKind.IMPERSONATION:
                self.directory.register(key)
        self.nodes = [
            NodeState(
                id=nid,
                pos=self.fleet.position(nid - 1, 0.0),
                speed=self.fleet.speed_kmh(nid - 1),
                direction=self.fleet.direction(nid - 1),
                keys=keys[nid - 1],
                directory=self.directory,
                settings=self.settings,
                sensor=self.sense,
                seed=config.seed,
            )
            for nid in node_ids
        ]

    def inject_adversary(self, behaviours: dict[NodeId, AdversaryKind]) -> None:
        """Attach behaviours to existing node ids; one identity per node."""
        unknown = [nid for nid in behaviours if not 1 <= nid <= self.config.node_count]
        if unknown:
            raise ValueError(f"adversaries attached to unknown nodes: {unknown}")
        self.behaviours = dict(behaviours)
        if behaviours:
            summary = ", ".join(f"{nid}:{kind.value}" for nid, kind in sorted(behaviours.items()))
            logger.info("adversaries: %s", summary)

    # Queue

    def schedule(self, time: int, kind: EventKind, node: NodeId | None = None, payload: Any = None) -> None:
        self._seq += 1
        heapq.heappush(self._queue, SimEvent(time, self._seq, kind, node, payload))

    def run(self) -> Metrics:
        self.schedule(0, EventKind.ENCOUNTER_CHECK)
        self.schedule(int(round(self.config.retransmission_start * 1000)), EventKind.TICK)
        for nid in self._fabricators():
            self.schedule(ADVERSARY_START_MS, EventKind.DETECT, nid, None)

        handlers = {
            EventKind.DELIVER: self._on_deliver,
            EventKind.DETECT: self._on_detect,
            EventKind.TICK: self._on_tick,
            EventKind.ENCOUNTER_CHECK: self._on_encounter_check,
            EventKind.GROUP_DEADLINE: self._on_group_deadline,
        }
        while self._queue:
            event = heapq.heappop(self._queue)
            if event.time > self.end:
                break
            handlers[event.kind](event)
        self._finish()
        return self.metrics

    def _fabricators(self) -> list[NodeId]:
        ids = sorted(nid for nid, kind in self.behaviours.items() if kind.fabricates)
        colluders = sorted(nid for nid, kind in self.behaviours.items() if kind is AdversaryKind.COLLUSION)
        if colluders:
            ids.append(colluders[0])
        return sorted(ids)

    # World state

    def node(self, nid: NodeId) -> NodeState:
        return self.nodes[nid - 1]

    def _sync(self, node: NodeState, now: int) -> None:
        node.pos = self.fleet.position(node.id - 1, now / 1000)

    def _sync_all(self, now: int) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.fleet.positions(now / 1000)
        for i, node in enumerate(self.nodes):
            node.pos = Position(float(x[i]), float(y[i]))
        return x, y

    def _observable(self, node: NodeState) -> RealEvent | None:
        event = self.incident
        if node.direction != event.direction:
            return None
        if horizontal_distance(node.pos, event.position) > self.config.danger_radius:
            return None
        return event

    def sense(self, node: NodeState, report: EventReport, now: int) -> Observation | None:
        """Sensor model: what a node itself observes around now."""
        event = self._observable(node)
        if event is None:
            return None
        return Observation(event.event_type, event.road_id, event.direction, now, event.position)

    def _knows(self, node: NodeState, incident: Incident) -> bool:
        if node.active_in_incident(incident):
            return True
        return self.aggregation and node.holds_incident(incident)

    # Transmission

    def _outgoing(self, sender: NodeState, packet: Packet) -> Packet | None:
        kind = self.behaviours.get(sender.id)
        if kind is None or not kind.rewrites_relays or not isinstance(packet, PacketA):
            return packet
        if packet.leader == sender.id:
            return packet
        if kind is AdversaryKind.DISCARD_AGGREGATE:
            self.metrics.attacks_injected[kind.value] += 1
            return None
        if kind is AdversaryKind.MODIFY_AGGREGATE:
            tampered = modify_aggregate(packet)
        else:
            tampered = append_false_trust(packet, sender.keys, sender.pos, self.settings.algo)
            if tampered is packet:
                return packet
        self.metrics.attacks_injected[kind.value] += 1
        self.tainted[tampered] = kind
        return tampered

    def _broadcast(self, sender: NodeState, packet: Packet, now: int) -> None:
        packet = self._outgoing(sender, packet)
        if packet is None:
            return
        self.metrics.count_packet(packet.packet_type)
        x, y = self.fleet.positions(now / 1000)
        recipients = [i + 1 for i in in_range_of(x, y, sender.id - 1, self.config.tx_range)]
        self._transmit(sender, packet, recipients, now)

    def _unicast(self, sender: NodeState, packet: Packet, to: NodeId, now: int) -> None:
        self.metrics.count_packet(packet.packet_type)
        here = self.fleet.position(sender.id - 1, now / 1000)
        there = self.fleet.position(to - 1, now / 1000)
        if horizontal_distance(here, there) > self.config.tx_range:
            self.metrics.transmissions += 1
            self.metrics.losses += 1
            self.metrics.drops["unreachable"] += 1
            return
        self._transmit(sender, packet, [to], now)

    def _transmit(self, sender: NodeState, packet: Packet, recipients: list[NodeId], now: int) -> None:
        self.trace.write(now, "send", sender.id, packet)
        delivered = []
        for nid in recipients:
            self.metrics.transmissions += 1
            if self.config.loss_rate and self._loss_rng.random() < self.config.loss_rate:
                self.metrics.losses += 1
            else:
                delivered.append(nid)
        if delivered:
            self.schedule(now + self.config.latency_ms, EventKind.DELIVER, sender.id, (packet, tuple(delivered)))

    def _emit(self, node: NodeState, outs: list[Outbound], now: int) -> None:
        for out in outs:
            if out.to is None:
                self._broadcast(node, out.packet, now)
            else:
                self._unicast(node, out.packet, out.to, now)
            if isinstance(out.packet, PacketR) and out.packet.leader == node.id:
                key = out.packet.report.key
                self.schedule(node.pending[key].deadline, EventKind.GROUP_DEADLINE, node.id, key)

    # Reception

    def _attack_kind(self, packet: Packet) -> AdversaryKind | None:
        if not self.behaviours:
            return None
        kind = self.tainted.get(packet)
        if kind is None:
            kind = self.fabricated.get(packet.report.key)
        return kind

    def _account(
        self,
        node: NodeState,
        packet: PacketA | PacketW,
        outcome: VerificationOutcome | None,
        now: int,
        relay: bool = True,
    ) -> None:
        if outcome is None:
            return
        self.metrics.verifications[outcome.verified_count] += 1
        kind = self._attack_kind(packet)
        if kind is not None and node.id not in self.behaviours:
            if outcome.reliable:
                self.metrics.attacks_accepted[kind.value] += 1
            else:
                self.metrics.attacks_detected[kind.value] += 1
        if not outcome.reliable:
            return
        key = packet.report.key
        self.metrics.record_reliable(node.id, key, now)
        if packet.report.incident not in self.real_incidents:
            self.metrics.false_reliable += 1
            logger.warning("node %s accepted false event %s", node.id, key)
        if relay:
            self._broadcast(node, node.store[key].packet, now)

    def _receive(self, node: NodeState, sender: NodeId, packet: Packet, now: int) -> None:
        if isinstance(packet, PacketA):
            self._account(node, packet, on_packet_a(node, packet, now), now)
            return
        if isinstance(packet, PacketW) and not self.aggregation:
            self._account(node, packet, baseline_on_packet_w(node, packet, now), now)
            return
        if isinstance(packet, PacketW):
            outs = on_packet_w(node, packet, now)
        elif isinstance(packet, PacketR):
            outs = on_packet_r(node, packet, now)
        else:
            outs = on_packet_s(node, packet, now)
        kind = self._attack_kind(packet)
        if kind is not None and node.id not in self.behaviours:
            if sender in node.malicious_marks:
                self.metrics.attacks_detected[kind.value] += 1
            elif outs:
                self.metrics.attacks_accepted[kind.value] += 1
        self._emit(node, outs, now)

    # Event handlers

    def _on_deliver(self, event: SimEvent) -> None:
        packet, recipients = event.payload
        now = event.time
        for nid in recipients:
            self.trace.write(now, event.kind.value, nid, packet)
            self.metrics.deliveries += 1
            node = self.node(nid)
            self._sync(node, now)
            self._receive(node, event.node, packet, now)

    def _on_detect(self, event: SimEvent) -> None:
        node = self.node(event.node)
        now = event.time
        self._sync(node, now)
        if event.payload is None:
            self._fabricate(node, now)
            return
        report = event.payload
        # the incident may have reached the node since the check that scheduled this
        if self._knows(node, report.incident):
            return
        self.trace.write(now, event.kind.value, node.id, report.encoded)
        outs = on_detect_event(node, report, now)
        if not outs:
            return
        warning = outs[0].packet
        if self.aggregation:
            own = on_packet_w(node, warning, now)
            # R goes out before W: receivers learn the request before they could nominate themselves
            self._emit(node, own, now)
            self._emit(node, outs, now)
        else:
            self._account(node, warning, baseline_on_packet_w(node, warning, now), now, relay=False)
            self._emit(node, outs, now)

    def _on_tick(self, event: SimEvent) -> None:
        now = event.time
        x, y = self._sync_all(now)
        self.trace.write(now, event.kind.value)
        for i, j in sorted(pairs_in_range(x, y, self.config.tx_range)):
            self.metrics.contacts.append((now, i + 1, j + 1))
        for node in self.nodes:
            for key in sorted(node.store):
                entry = node.store[key]
                if entry.trusted and entry.expiry >= now:
                    self._broadcast(node, entry.packet, now)
        next_tick = now + int(round(self.config.retransmission_period * 1000))
        if next_tick <= self.end:
            self.schedule(next_tick, EventKind.TICK)

    def _on_encounter_check(self, event: SimEvent) -> None:
        now = event.time
        x, y = self._sync_all(now)
        for node in self.nodes:
            expire_store(node, now)

        incident = self.incident.incident
        for node in self.nodes:
            real = self._observable(node)
            if real is None or self._knows(node, incident):
                continue
            report = EventReport.create(
                real.position,
                real.event_type,
                real.direction,
                real.road_id,
                self.config.road,
                self.config.radii,
                now,
                node.id,
            )
            self.schedule(now, EventKind.DETECT, node.id, report)

        pairs = pairs_in_range(x, y, self.config.tx_range)
        for i, j in sorted(pairs - self._pairs):
            a, b = self.nodes[i], self.nodes[j]
            self.metrics.contacts.append((now, a.id, b.id))
            self.trace.write(now, event.kind.value, f"{a.id}-{b.id}")
            for exchange in on_encounter(a, b, now, self._outgoing):
                self.metrics.count_packet(exchange.packet.packet_type)
                self.metrics.transmissions += 1
                self.metrics.deliveries += 1
                self.trace.write(now, "exchange", exchange.receiver, exchange.packet)
                self._account(self.node(exchange.receiver), exchange.packet, exchange.outcome, now)
        self._pairs = pairs

        next_check = now + self.config.encounter_period_ms
        if next_check <= self.end:
            self.schedule(next_check, EventKind.ENCOUNTER_CHECK)

    def _on_group_deadline(self, event: SimEvent) -> None:
        node = self.node(event.node)
        now = event.time
        self._sync(node, now)
        key = event.payload
        packet = finalize_group(node, key, now)
        if packet is None:
            return
        self.trace.write(now, event.kind.value, node.id, packet)
        self.metrics.groups_formed += 1
        self.metrics.signer_counts[packet.n] += 1
        if key in node.store:
            self.metrics.record_reliable(node.id, key, now)

        kind = self.behaviours.get(node.id)
        if kind is AdversaryKind.LEADER_FALSE_SIGNATURE:
            packet = self._forge_into(node, packet)
        elif key in self.fabricated:
            self.tainted[packet] = self.fabricated[key]
        self._broadcast(node, packet, now)

    # Adversaries

    def _forge_into(self, node: NodeState, packet: PacketA) -> PacketA:
        honest = [nid for nid in range(1, len(self.nodes) + 1) if nid not in self.behaviours and nid != node.id]
        if not honest:
            return packet
        victim = honest[int(self._attack_rng.integers(len(honest)))]
        forged = insert_forged_signature(
            packet, victim, self.settings.algo, self._attack_rng, self.settings.max_signers
        )
        if packet.report.key in node.store:
            node.store[packet.report.key].packet = forged
        self.tainted[forged] = AdversaryKind.LEADER_FALSE_SIGNATURE
        self.metrics.attacks_injected[AdversaryKind.LEADER_FALSE_SIGNATURE.value] += 1
        return forged

    def _fake_report(self, node: NodeState, now: int) -> EventReport:
        """A parking spot that does not exist, reported at the adversary's position."""
        return EventReport.create(
            node.pos,
            EventType.FREE_PARKING,
            node.direction,
            ROAD_ID,
            self.config.road,
            self.config.radii,
            now,
            node.id,
        )

    def _fabricate(self, node: NodeState, now: int) -> None:
        kind = self.behaviours[node.id]
        report = self._fake_report(node, now)
        key = report.key
        self.fabricated[key] = kind
        self.metrics.attacks_injected[kind.value] += 1
        self.trace.write(now, "attack", node.id, report.encoded)

        if kind is AdversaryKind.COLLUSION:
            colluders = [
                self.node(nid).keys
                for nid, behaviour in self.behaviours.items()
                if behaviour is AdversaryKind.COLLUSION
            ]
            packet = collusion_aggregate(report, colluders, node.pos, self.settings.algo)
            if packet.n > self.settings.max_signers:
                packet = PacketA(report, packet.signers[: self.settings.max_signers])
            zone = classify_zone(node.pos, report.position, report.radii)
            node.store[key] = StoredEvent(packet, now, expiry_of(report, self.settings), zone)
            self._broadcast(node, packet, now)
            return

        pos = node.pos.quantized()
        cell = cell_of(report.grid, pos)
        sig = node.sign(report)
        node.reported.add(key)
        node.roles[key] = Role.LEADER_CANDIDATE
        node.requests[(key, cell)] = [GroupRequest(node.id, pos, now, cell)]
        node.pending[key] = PendingGroup(report, cell, pos, now + self.settings.group_window_ms)
        outs = [
            Outbound(PacketR(report, node.id, pos, now, sig)),
            Outbound(PacketW(report, node.id, sig)),
        ]
        self._emit(node, outs, now)

    # Results

    def _finish(self) -> None:
        for node in self.nodes:
            self.metrics.drops.update(node.drops)
            self.metrics.malicious_marks += len(node.malicious_marks)

        incident = self.incident.incident
        first: dict[NodeId, int] = {}
        for (nid, key), t in self.metrics.reliable_at.items():
            if Incident(*key[:4]) == incident:
                first[nid] = min(t, first.get(nid, t))

        self._sync_all(self.end)
        radii = self.config.radii
        scope = [
            node.id
            for node in self.nodes
            if classify_zone(node.pos, self.incident.position, radii) is not Zone.OUT_OF_SCOPE
        ]
        covered = [first[nid] for nid in scope if nid in first]
        self.metrics.scope_nodes = len(scope)
        self.metrics.covered_nodes = len(covered)
        if scope and len(covered) == len(scope):
            self.metrics.coverage_time_s = max(covered) / 1000
        logger.debug(
            "run seed=%s nodes=%s aggregation=%s: %d packets, %d/%d covered",
            self.config.seed,
            self.config.node_count,
            self.aggregation,
            self.metrics.packets_total,
            len(covered),
            len(scope),
        )


def run(config: SimConfig, trace: TextIO | None = None) -> Metrics:
    """Run one simulation with aggregation as configured."""
    return World(config, trace=trace).run()


def baseline_run(config: SimConfig, trace: TextIO | None = None) -> Metrics:
    """Same world and seed, basic scheme: every node signs and forwards its own warnings."""
    return World(config, aggregation=False, trace=trace).run()
