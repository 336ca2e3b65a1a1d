#!/usr/bin/env python3
"""
Per-node protocol.
Reactive group formation inside a cell of the danger zone, leader election,
aggregate construction, zone-dependent acceptance of aggregates, storage
expiry and store-and-carry exchange between vehicles.

Handlers take the node state first, like the service functions that take a
session, and return the packets the node wants to send. They never raise on
hostile input; rejected packets are counted in ``node.drops``.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, NamedTuple

import numpy as np

from vanet_aggregator.config import (
    AGREEMENT_WINDOW_MS,
    BASIC_TIME_JAM_S,
    BASIC_TIME_PARKING_S,
    DEFAULT_K,
    DEFAULT_MIN_SIGNATURES,
    GROUP_WINDOW_MS,
    MAX_GROUP_WINDOW_MS,
    ROAD_FACTOR_CONVENTIONAL,
    ROAD_FACTOR_HIGHWAY,
)
from vanet_aggregator.crypto import (
    DigestAlgo,
    Directory,
    KeyPair,
    NodeId,
    Signature,
    SignatureStatus,
    check_signature,
    sign,
)
from vanet_aggregator.geo import (
    CellGrid,
    CellId,
    Position,
    RoadClass,
    Zone,
    cell_center,
    cell_of,
    classify_zone,
    horizontal_distance,
)
from vanet_aggregator.packets import (
    Direction,
    EventKey,
    EventReport,
    EventType,
    Incident,
    Packet,
    PacketA,
    PacketBudget,
    PacketR,
    PacketS,
    PacketW,
    SignerEntry,
    max_signers_practical,
)
from vanet_aggregator.verify import (
    OutcomeStatus,
    VerificationOutcome,
    VerificationPolicy,
    inconsistent_packets,
    security_zone_check,
    verification_rng,
    verify_aggregate,
)

logger = logging.getLogger(__name__)


class ProtocolError(ValueError):
    """Raised when a protocol operation is called outside its domain."""


class StorageTimeError(ProtocolError):
    """Raised when no basic storage time is configured for an event type."""


class Role(str, Enum):
    """Role of a node in the group formed for one event."""

    IDLE = "idle"
    LEADER_CANDIDATE = "leader_candidate"
    LEADER = "leader"
    MEMBER = "member"


def _default_basic_times() -> dict[EventType, int]:
    return {
        EventType.TRAFFIC_JAM: BASIC_TIME_JAM_S,
        EventType.FREE_PARKING: BASIC_TIME_PARKING_S,
    }


def _default_road_factors() -> dict[RoadClass, float]:
    return {
        RoadClass.CONVENTIONAL: ROAD_FACTOR_CONVENTIONAL,
        RoadClass.HIGHWAY: ROAD_FACTOR_HIGHWAY,
    }


@dataclass(frozen=True)
class ProtocolSettings:
    """Tunables shared by every node of a deployment."""

    algo: DigestAlgo = DigestAlgo.SHA1
    budget: PacketBudget = field(default_factory=lambda: PacketBudget(1024))
    k: int = DEFAULT_K
    min_signatures: int = DEFAULT_MIN_SIGNATURES
    group_window_ms: int = GROUP_WINDOW_MS
    agreement_window_ms: int = AGREEMENT_WINDOW_MS
    basic_times_s: Mapping[EventType, float] = field(default_factory=_default_basic_times)
    road_factors: Mapping[RoadClass, float] = field(default_factory=_default_road_factors)

    def __post_init__(self):
        if not 0 < self.group_window_ms <= MAX_GROUP_WINDOW_MS:
            raise ProtocolError(
                f"group_window_ms must lie in (0, {MAX_GROUP_WINDOW_MS}], got {self.group_window_ms}"
            )

    @property
    def max_signers(self) -> int:
        return max_signers_practical(self.budget, self.algo)


@dataclass(frozen=True)
class Observation:
    """What a node's own sensors say about an event."""

    event_type: EventType
    road_id: int
    direction: Direction
    detected_at: int
    position: Position


Sensor = Callable[["NodeState", EventReport, int], Observation | None]


class GroupRequest(NamedTuple):
    """A self-nomination seen for one cell."""

    leader: NodeId
    position: Position
    request_timestamp: int
    cell: CellId


@dataclass
class StoredEvent:
    """An event packet held for store-and-carry relaying."""

    packet: PacketA | PacketW
    received_at: int
    expiry: int
    origin_distance_zone: Zone
    trusted: bool = True


@dataclass
class PendingGroup:
    """Bookkeeping of a leader candidate while it collects signatures."""

    report: EventReport
    cell: CellId
    leader_pos: Position
    deadline: int
    members: dict[NodeId, PacketS] = field(default_factory=dict)


@dataclass(frozen=True)
class Outbound:
    """A packet to send; ``to`` is None for a broadcast."""

    packet: Packet
    to: NodeId | None = None


@dataclass(frozen=True)
class Exchange:
    """One packet handed over during an encounter, with its outcome."""

    sender: NodeId
    receiver: NodeId
    packet: PacketA | PacketW
    outcome: VerificationOutcome | None


@dataclass
class NodeState:
    """Protocol state of one vehicle."""

    id: NodeId
    pos: Position
    speed: float  # km/h
    direction: Direction
    keys: KeyPair
    directory: Directory
    settings: ProtocolSettings = field(default_factory=ProtocolSettings)
    sensor: Sensor | None = None
    seed: int = 0
    store: dict[EventKey, StoredEvent] = field(default_factory=dict)
    roles: dict[EventKey, Role] = field(default_factory=dict)
    requests: dict[tuple[EventKey, CellId], list[GroupRequest]] = field(default_factory=dict)
    pending: dict[EventKey, PendingGroup] = field(default_factory=dict)
    signed_for: dict[EventKey, NodeId] = field(default_factory=dict)
    reported: set[EventKey] = field(default_factory=set)
    evidence: dict[EventKey, list[PacketA]] = field(default_factory=dict)
    rejected: set[PacketA] = field(default_factory=set)
    seen: set[PacketA | PacketW] = field(default_factory=set)
    malicious_marks: set[NodeId] = field(default_factory=set)
    drops: Counter = field(default_factory=Counter)
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = np.random.default_rng([self.seed, self.id])

    def role(self, key: EventKey) -> Role:
        return self.roles.get(key, Role.IDLE)

    def sign(self, report: EventReport) -> Signature:
        return sign(self.keys, report.encoded, self.settings.algo)

    def mark_malicious(self, suspect: NodeId, reason: str) -> None:
        if suspect not in self.malicious_marks:
            logger.info("node %s marks %s as malicious: %s", self.id, suspect, reason)
            self.malicious_marks.add(suspect)

    def holds_incident(self, incident: Incident, trusted_only: bool = True) -> bool:
        return any(
            entry.packet.report.incident == incident and (entry.trusted or not trusted_only)
            for entry in self.store.values()
        )

    def active_in_incident(self, incident: Incident) -> bool:
        """True while the node takes part in a group or reported the incident."""
        if any(Incident(*key[:4]) == incident for key in self.reported):
            return True
        return any(
            Incident(*key[:4]) == incident and role is not Role.IDLE
            for key, role in self.roles.items()
        )


def _signature_valid(node: NodeState, sig: Signature, claimed: NodeId, report: EventReport) -> bool:
    if sig.signer != claimed:
        return False
    status = check_signature(node.directory, sig, report.encoded, node.settings.algo)
    return status is SignatureStatus.VALID


def _observe(node: NodeState, report: EventReport, now: int) -> Observation | None:
    if node.sensor is None:
        return None
    return node.sensor(node, report, now)


def _same_event(report: EventReport, obs: Observation) -> bool:
    return (
        obs.event_type == report.event_type
        and obs.road_id == report.road_id
        and obs.direction == report.direction
    )


def _agrees(node: NodeState, report: EventReport, obs: Observation) -> bool:
    """Timing and range part of the agreement check."""
    if abs(report.timestamp - obs.detected_at) > node.settings.agreement_window_ms:
        return False
    return horizontal_distance(obs.position, report.position) <= report.danger_radius


def _can_judge(node: NodeState, report: EventReport) -> bool:
    """Only nodes in the danger zone on the affected carriageway can observe."""
    if node.direction != report.direction:
        return False
    return classify_zone(node.pos, report.position, report.radii) is Zone.DANGER


def storage_time(
    event_type: EventType, road_class: RoadClass, settings: ProtocolSettings
) -> int:
    """
    Storage lifetime of an event packet: basic time of the event type times
    the road factor.

    Returns:
        Lifetime in milliseconds
    """
    try:
        basic = settings.basic_times_s[EventType(event_type)]
    except (KeyError, ValueError):
        raise StorageTimeError(f"no basic storage time for event type {event_type!r}") from None
    factor = settings.road_factors[RoadClass(road_class)]
    return int(round(basic * factor * 1000))


def expiry_of(report: EventReport, settings: ProtocolSettings) -> int:
    return report.timestamp + storage_time(report.event_type, report.road_class, settings)


def _expiry_or_none(node: NodeState, report: EventReport) -> int | None:
    try:
        return expiry_of(report, node.settings)
    except StorageTimeError:
        node.drops["no_storage_time"] += 1
        return None


def on_detect_event(node: NodeState, report: EventReport, now: int) -> list[Outbound]:
    """Broadcast a signed warning for an event this node observed itself."""
    key = report.key
    if key in node.store or key in node.reported:
        return []
    node.reported.add(key)
    logger.debug("node %s detected event %s at %s", node.id, key, now)
    return [Outbound(PacketW(report, node.id, node.sign(report)))]


def on_packet_w(node: NodeState, p: PacketW, now: int) -> list[Outbound]:
    """
    React to a warning: a node on the affected carriageway of the danger zone
    that also detects the event nominates itself leader of its cell unless a
    request for that cell was already seen; if it cannot detect the event the
    sender is marked malicious.
    """
    report = p.report
    if not _signature_valid(node, p.sig, p.sender, report):
        node.drops["bad_signature"] += 1
        return []
    if not _can_judge(node, report):
        return []
    if p.sender in node.malicious_marks:
        node.drops["marked_sender"] += 1
        return []

    obs = _observe(node, report, now)
    if obs is None or not _same_event(report, obs):
        node.mark_malicious(p.sender, "warning about an event that cannot be detected")
        return []
    if not _agrees(node, report, obs):
        return []

    key = report.key
    if node.role(key) is not Role.IDLE:
        return []
    # the cell follows the position carried on the wire
    pos = node.pos.quantized()
    cell = cell_of(report.grid, pos)
    if node.requests.get((key, cell)):
        return []

    node.requests[(key, cell)] = [GroupRequest(node.id, pos, now, cell)]
    node.roles[key] = Role.LEADER_CANDIDATE
    node.pending[key] = PendingGroup(report, cell, pos, now + node.settings.group_window_ms)
    return [Outbound(PacketR(report, node.id, pos, now, node.sign(report)))]


def elect_leader(requests: list[GroupRequest], grid: CellGrid) -> NodeId:
    """
    Pick the leader of a cell: oldest request, then closest to the cell
    centre, then smallest node id.
    """
    if not requests:
        raise ProtocolError("cannot elect a leader without requests")
    cells = {request.cell for request in requests}
    if len(cells) != 1:
        raise ProtocolError(f"requests target several cells: {sorted(cells)}")
    center = cell_center(grid, cells.pop())
    winner = min(
        requests,
        key=lambda r: (r.request_timestamp, horizontal_distance(r.position, center), r.leader),
    )
    return winner.leader


def on_packet_r(node: NodeState, p: PacketR, now: int) -> list[Outbound]:
    """Answer a group request from this node's cell with a signed agreement."""
    report = p.report
    if not _signature_valid(node, p.sig, p.leader, report):
        node.drops["bad_signature"] += 1
        return []
    if p.leader == node.id or not _can_judge(node, report):
        return []
    grid = report.grid
    cell = cell_of(grid, p.leader_pos)
    own_pos = node.pos.quantized()
    if cell != cell_of(grid, own_pos):
        return []
    if p.leader in node.malicious_marks:
        node.drops["marked_sender"] += 1
        return []

    obs = _observe(node, report, now)
    if obs is None or not _same_event(report, obs):
        node.mark_malicious(p.leader, "group request for an event that cannot be detected")
        return []
    if not _agrees(node, report, obs):
        return []

    key = report.key
    requests = node.requests.setdefault((key, cell), [])
    if all(request.leader != p.leader for request in requests):
        requests.append(GroupRequest(p.leader, p.leader_pos, p.request_timestamp, cell))
    winner = elect_leader(requests, grid)
    if winner == node.id or node.role(key) is Role.LEADER:
        return []

    node.roles[key] = Role.MEMBER
    node.pending.pop(key, None)
    if node.signed_for.get(key) == winner:
        return []
    node.signed_for[key] = winner
    packet = PacketS(report, node.id, own_pos, now, node.sign(report))
    return [Outbound(packet, to=winner)]


def on_packet_s(node: NodeState, p: PacketS, now: int) -> list[Outbound]:
    """Collect a member signature while the group window is open."""
    key = p.report.key
    pending = node.pending.get(key)
    if pending is None or node.role(key) is not Role.LEADER_CANDIDATE:
        node.drops["unsolicited_signature"] += 1
        return []
    if now > pending.deadline:
        node.drops["late_signature"] += 1
        return []
    if not _signature_valid(node, p.sig, p.member, p.report):
        node.drops["bad_signature"] += 1
        return []
    if p.member in node.malicious_marks:
        node.drops["marked_sender"] += 1
        return []
    if cell_of(p.report.grid, p.member_pos) != pending.cell:
        node.drops["foreign_cell"] += 1
        return []
    pending.members.setdefault(p.member, p)
    return []


def finalize_group(node: NodeState, key: EventKey, now: int) -> PacketA | None:
    """
    Build the aggregate once the collection window has elapsed.

    The leader signs first; when more members answered than fit the packet
    budget, a uniform random subset is kept.
    """
    pending = node.pending.get(key)
    if pending is None or node.role(key) is not Role.LEADER_CANDIDATE:
        return None
    if now < pending.deadline:
        return None
    report = pending.report
    requests = node.requests.get((key, pending.cell), [])
    if requests and elect_leader(requests, report.grid) != node.id:
        node.roles[key] = Role.MEMBER
        node.pending.pop(key)
        return None

    members = list(pending.members.values())
    room = node.settings.max_signers - 1
    if len(members) > room:
        chosen = node.rng.choice(len(members), size=room, replace=False)
        members = [members[i] for i in sorted(int(i) for i in chosen)]

    signers = [SignerEntry(node.id, pending.leader_pos, node.sign(report))]
    signers.extend(SignerEntry(s.member, s.member_pos, s.sig) for s in members)
    packet = PacketA(report, tuple(signers))

    node.roles[key] = Role.LEADER
    node.pending.pop(key)
    zone = classify_zone(node.pos, report.position, report.radii)
    expiry = _expiry_or_none(node, report)
    if expiry is not None:
        node.store[key] = StoredEvent(packet, now, expiry, zone)
    logger.debug("node %s leads group for %s with %d signers", node.id, key, packet.n)
    return packet


def _contradicted(node: NodeState, report: EventReport, now: int) -> bool:
    if not _can_judge(node, report):
        return False
    obs = _observe(node, report, now)
    return obs is None or not _same_event(report, obs)


def _combine_evidence(node: NodeState, key: EventKey, now: int) -> VerificationOutcome | None:
    """
    Security-zone combination of aggregates too small on their own: trusted
    once they come from two or more cells, are each cell-consistent, carry at
    least min_signatures distinct signers and every signature verifies.
    """
    pool = [p for p in node.evidence.get(key, []) if p not in inconsistent_packets(node.evidence[key])]
    if not pool:
        return None
    check = security_zone_check(pool)
    signers = {entry.node for packet in pool for entry in packet.signers}
    if check.distinct_groups < 2 or len(signers) < node.settings.min_signatures:
        return None
    policy = VerificationPolicy(min_signatures=1, zone=Zone.SECURITY, check_all=True)
    checked = 0
    for packet in pool:
        outcome = verify_aggregate(packet, node.directory, policy, node.rng)
        checked += outcome.verified_count
        if not outcome.reliable:
            return outcome
    return VerificationOutcome(OutcomeStatus.RELIABLE, verified_count=checked)


def on_packet_a(node: NodeState, p: PacketA, now: int) -> VerificationOutcome | None:
    """
    Accept or reject an aggregate according to the receiver's zone.

    Returns:
        The verification outcome, or None when the packet was ignored
        (duplicate, expired, out of scope)
    """
    report = p.report
    key = report.key
    held = node.store.get(key)
    if (held is not None and held.trusted) or (node.rejected and p in node.rejected):
        return None
    if p in node.evidence.get(key, ()):
        return None
    zone = classify_zone(node.pos, report.position, report.radii)
    if zone is Zone.OUT_OF_SCOPE:
        node.drops["out_of_scope"] += 1
        return None
    expiry = _expiry_or_none(node, report)
    if expiry is None:
        return None
    if now > expiry:
        node.drops["expired"] += 1
        return None
    node.seen.add(p)

    policy = VerificationPolicy.for_zone(zone, node.settings.k, node.settings.min_signatures)
    # a witness on the affected carriageway needs no quorum, only valid signatures
    witness = zone is Zone.DANGER and _can_judge(node, report)
    if witness:
        policy = replace(policy, min_signatures=1)
    rng = verification_rng(node.seed, node.id, p)
    outcome = verify_aggregate(p, node.directory, policy, rng)

    if outcome.status is not OutcomeStatus.NOT_RELIABLE:
        if zone is Zone.SECURITY and inconsistent_packets([p]):
            outcome = replace(
                outcome,
                status=OutcomeStatus.NOT_RELIABLE,
                first_bad_signer=p.leader,
                cell_inconsistent=True,
            )
        elif witness and _contradicted(node, report, now):
            outcome = replace(outcome, status=OutcomeStatus.NOT_RELIABLE, first_bad_signer=p.leader)

    if outcome.status is OutcomeStatus.RELIABLE:
        node.store[key] = StoredEvent(p, now, expiry, zone)
        node.evidence.pop(key, None)
        return outcome

    if outcome.status is OutcomeStatus.NOT_RELIABLE:
        node.rejected.add(p)
        node.drops["not_reliable"] += 1
        if zone is Zone.DANGER:
            node.mark_malicious(p.leader, "aggregate failed verification")
        return outcome

    if zone is not Zone.SECURITY:
        node.drops["not_enough_signatures"] += 1
        return outcome

    node.evidence.setdefault(key, []).append(p)
    combined = _combine_evidence(node, key, now)
    if combined is not None and combined.reliable:
        best = max(node.evidence[key], key=lambda packet: packet.n)
        node.store[key] = StoredEvent(best, now, expiry, zone)
        node.evidence.pop(key)
        return combined
    if key not in node.store:
        node.store[key] = StoredEvent(p, now, expiry, zone, trusted=False)
    return outcome


def baseline_on_packet_w(node: NodeState, p: PacketW, now: int) -> VerificationOutcome | None:
    """Basic scheme without aggregation: check the one signature and keep the warning."""
    report = p.report
    key = report.key
    if key in node.store:
        return None
    zone = classify_zone(node.pos, report.position, report.radii)
    if zone is Zone.OUT_OF_SCOPE:
        node.drops["out_of_scope"] += 1
        return None
    expiry = _expiry_or_none(node, report)
    if expiry is None:
        return None
    if now > expiry:
        node.drops["expired"] += 1
        return None
    node.seen.add(p)
    if not _signature_valid(node, p.sig, p.sender, report):
        node.drops["bad_signature"] += 1
        return VerificationOutcome(OutcomeStatus.NOT_RELIABLE, 1, first_bad_signer=p.sender)
    node.store[key] = StoredEvent(p, now, expiry, zone)
    return VerificationOutcome(OutcomeStatus.RELIABLE, verified_count=1)


def receive_stored(node: NodeState, packet: PacketA | PacketW, now: int) -> VerificationOutcome | None:
    """Feed a relayed event packet into the receiver's acceptance pipeline."""
    if isinstance(packet, PacketA):
        return on_packet_a(node, packet, now)
    return baseline_on_packet_w(node, packet, now)


def authenticate(a: NodeState, b: NodeState) -> bool:
    """Mutual authentication: each side finds the other in its directory."""
    return a.id in b.directory and b.id in a.directory


Outgoing = Callable[[NodeState, Packet], Packet | None]


def _wanted(receiver: NodeState, packet: PacketA | PacketW) -> bool:
    """Receiver side of the exchange: unseen packets of events whose scope covers it."""
    report = packet.report
    held = receiver.store.get(report.key)
    if packet in receiver.seen or (held is not None and held.trusted):
        return False
    return classify_zone(receiver.pos, report.position, report.radii) is not Zone.OUT_OF_SCOPE


def _offer(sender: NodeState, receiver: NodeState, now: int) -> list[PacketA | PacketW]:
    """Trusted, unexpired events the receiver asks for."""
    offered = []
    for key in sorted(sender.store):
        entry = sender.store[key]
        if entry.trusted and entry.expiry >= now and _wanted(receiver, entry.packet):
            offered.append(entry.packet)
    return offered


def on_encounter(
    a: NodeState, b: NodeState, now: int, outgoing: Outgoing | None = None
) -> list[Exchange]:
    """
    Exchange stored events between two vehicles that just met.

    Each side receives the trusted, unexpired events it lacks and has not
    evaluated yet, provided it lies in their scope; received packets go
    through the receiver's acceptance pipeline before they are stored.
    ``outgoing`` lets a sender rewrite or withhold what it hands over.
    """
    if not authenticate(a, b):
        a.drops["authentication_failed"] += 1
        b.drops["authentication_failed"] += 1
        return []
    transfers = [(a, b, packet) for packet in _offer(a, b, now)]
    transfers += [(b, a, packet) for packet in _offer(b, a, now)]

    exchanged = []
    for sender, receiver, packet in transfers:
        if outgoing is not None:
            packet = outgoing(sender, packet)
            if packet is None:
                continue
        outcome = receive_stored(receiver, packet, now)
        exchanged.append(Exchange(sender.id, receiver.id, packet, outcome))
    return exchanged


def expire_store(node: NodeState, now: int) -> int:
    """
    Drop stored events that outlived their storage time or whose security
    zone the node has left.

    Returns:
        Number of removed entries
    """
    removed = [
        key
        for key, entry in node.store.items()
        if now > entry.expiry
        or classify_zone(node.pos, entry.packet.report.position, entry.packet.report.radii)
        is Zone.OUT_OF_SCOPE
    ]
    for key in removed:
        del node.store[key]
        node.evidence.pop(key, None)
    return len(removed)
