#!/usr/bin/env python3
"""
Wire formats.
The 100-byte event report, the W/R/S/A packets built around it, and the
packet-budget arithmetic that sizes aggregated packets.

All integers are big-endian. Report coordinates are signed 64-bit
millimetres; signer positions are signed 32-bit millimetres.
"""

import hashlib
import struct
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from typing import NamedTuple, Union

from vanet_aggregator.config import (
    MESSAGE_BYTES,
    PACKET_SIZES,
    SIGNER_RECORD_BYTES,
)
from vanet_aggregator.crypto import CryptoError, DigestAlgo, NodeId, Signature
from vanet_aggregator.geo import (
    CellGrid,
    GeoError,
    Position,
    RoadClass,
    RoadProfile,
    ZoneRadii,
    build_grid,
)


class PacketDecodeError(ValueError):
    """Raised when bytes cannot be decoded; names the failing offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class PacketBudgetError(ValueError):
    """Raised when an aggregated packet does not fit its packet budget."""


class EventType(IntEnum):
    """Event types, valued by their one-byte wire code."""

    TRAFFIC_JAM = 1
    FREE_PARKING = 2
    ACCIDENT = 3
    OBSTACLE = 4


class Direction(IntEnum):
    """Traffic direction relative to the road heading."""

    FORWARD = 0
    BACKWARD = 1

    @property
    def sign(self) -> int:
        return 1 if self is Direction.FORWARD else -1


class PacketType(str, Enum):
    """Packet kinds: warning, request, signature, aggregate."""

    W = "W"
    R = "R"
    S = "S"
    A = "A"

    @property
    def tag(self) -> int:
        return _TAGS[self]


_TAGS = {PacketType.W: 0x01, PacketType.R: 0x02, PacketType.S: 0x03, PacketType.A: 0x04}
_TYPES_BY_TAG = {tag: packet_type for packet_type, tag in _TAGS.items()}

_REPORT = struct.Struct(">qqqBBIBHBQQIIII")
_REPORT_PADDING = MESSAGE_BYTES - _REPORT.size
_POSITION = struct.Struct(">iii")
_FRAME = struct.Struct(">BB")
_U8 = struct.Struct(">B")
_U64 = struct.Struct(">Q")
_COORDS = struct.Struct(">3d")


class EventKey(NamedTuple):
    """Deduplication key: event location, type and report timestamp."""

    x_mm: int
    y_mm: int
    z_mm: int
    event_type: int
    timestamp: int


class Incident(NamedTuple):
    """A physical event regardless of which node reported it, and when."""

    x_mm: int
    y_mm: int
    z_mm: int
    event_type: int


def _to_mm(value: float) -> int:
    return int(round(value * 1000))


@dataclass(frozen=True)
class EventReport:
    """The signed warning message M."""

    x_mm: int
    y_mm: int
    z_mm: int
    event_type: EventType
    direction: Direction
    road_id: int
    road_class: RoadClass
    speed_limit: int  # km/h
    lanes: int
    timestamp: int  # ms since epoch
    source: NodeId
    danger_radius: int  # meters
    uncertainty_radius: int
    security_radius: int
    heading_urad: int = 0

    @classmethod
    def create(
        cls,
        position: Position,
        event_type: EventType,
        direction: Direction,
        road_id: int,
        road: RoadProfile,
        radii: ZoneRadii,
        timestamp: int,
        source: NodeId,
    ) -> "EventReport":
        return cls(
            x_mm=_to_mm(position.x),
            y_mm=_to_mm(position.y),
            z_mm=_to_mm(position.z),
            event_type=EventType(event_type),
            direction=Direction(direction),
            road_id=road_id,
            road_class=road.road_class,
            speed_limit=int(round(road.speed_limit)),
            lanes=road.lanes_per_direction,
            timestamp=timestamp,
            source=source,
            danger_radius=int(round(radii.danger_radius)),
            uncertainty_radius=int(round(radii.uncertainty_radius)),
            security_radius=int(round(radii.security_radius)),
            heading_urad=int(round(road.heading * 1_000_000)),
        )

    @property
    def position(self) -> Position:
        return Position(self.x_mm / 1000, self.y_mm / 1000, self.z_mm / 1000)

    @property
    def road(self) -> RoadProfile:
        return RoadProfile(
            lanes_per_direction=self.lanes,
            speed_limit=self.speed_limit,
            road_class=self.road_class,
            heading=self.heading_urad / 1_000_000,
        )

    @property
    def radii(self) -> ZoneRadii:
        return ZoneRadii(self.danger_radius, self.uncertainty_radius, self.security_radius)

    @cached_property
    def grid(self) -> CellGrid:
        return build_grid(self.position, self.road, self.danger_radius)

    @property
    def key(self) -> EventKey:
        return EventKey(self.x_mm, self.y_mm, self.z_mm, int(self.event_type), self.timestamp)

    @property
    def incident(self) -> Incident:
        return Incident(self.x_mm, self.y_mm, self.z_mm, int(self.event_type))

    @cached_property
    def encoded(self) -> bytes:
        """Canonical 100-byte encoding; this is what every signature covers."""
        return encode_report(self)

    @cached_property
    def digest_id(self) -> int:
        """Stable 64-bit identifier of the report bytes."""
        return int.from_bytes(hashlib.sha256(self.encoded).digest()[:8], "big")


def encode_report(report: EventReport) -> bytes:
    try:
        body = _REPORT.pack(
            report.x_mm,
            report.y_mm,
            report.z_mm,
            int(report.event_type),
            int(report.direction),
            report.road_id,
            int(report.road_class),
            report.speed_limit,
            report.lanes,
            report.timestamp,
            report.source,
            report.danger_radius,
            report.uncertainty_radius,
            report.security_radius,
            report.heading_urad,
        )
    except struct.error as e:
        raise PacketBudgetError(f"report field out of range: {e}") from e
    return body + bytes(_REPORT_PADDING)


def decode_report(data: bytes, offset: int = 0) -> EventReport:
    """Decode a 100-byte report starting at offset."""
    end = offset + MESSAGE_BYTES
    if len(data) < end:
        raise PacketDecodeError("truncated event report", len(data))
    fields = _REPORT.unpack_from(data, offset)
    if any(data[offset + _REPORT.size : end]):
        raise PacketDecodeError("non-zero report padding", offset + _REPORT.size)
    try:
        event_type = EventType(fields[3])
    except ValueError:
        raise PacketDecodeError(f"unknown event type {fields[3]}", offset + 24) from None
    try:
        direction = Direction(fields[4])
    except ValueError:
        raise PacketDecodeError(f"unknown direction {fields[4]}", offset + 25) from None
    try:
        road_class = RoadClass(fields[6])
    except ValueError:
        raise PacketDecodeError(f"unknown road class {fields[6]}", offset + 30) from None
    report = EventReport(
        x_mm=fields[0],
        y_mm=fields[1],
        z_mm=fields[2],
        event_type=event_type,
        direction=direction,
        road_id=fields[5],
        road_class=road_class,
        speed_limit=fields[7],
        lanes=fields[8],
        timestamp=fields[9],
        source=fields[10],
        danger_radius=fields[11],
        uncertainty_radius=fields[12],
        security_radius=fields[13],
        heading_urad=fields[14],
    )
    try:
        report.road
        report.radii
    except GeoError as e:
        raise PacketDecodeError(f"invalid report geometry ({e})", offset + 30) from None
    return report


def _encode_position(p: Position) -> bytes:
    try:
        return _POSITION.pack(_to_mm(p.x), _to_mm(p.y), _to_mm(p.z))
    except struct.error as e:
        raise PacketBudgetError(f"position out of range: {p}") from e


def _decode_position(data: bytes, offset: int) -> Position:
    x, y, z = _POSITION.unpack_from(data, offset)
    return Position(x / 1000, y / 1000, z / 1000)


def _algo_of(signatures: list[Signature]) -> DigestAlgo:
    sizes = {len(sig.value) for sig in signatures}
    if len(sizes) != 1:
        raise PacketBudgetError("signatures in one packet must share a digest size")
    try:
        return DigestAlgo.for_size(sizes.pop())
    except CryptoError as e:
        raise PacketBudgetError(str(e)) from None


@dataclass(frozen=True)
class PacketW:
    """Warning broadcast by the node that detected the event."""

    report: EventReport
    sender: NodeId
    sig: Signature

    packet_type = PacketType.W


@dataclass(frozen=True)
class PacketR:
    """Group formation request from a self-nominated leader."""

    report: EventReport
    leader: NodeId
    leader_pos: Position
    request_timestamp: int
    sig: Signature

    packet_type = PacketType.R


@dataclass(frozen=True)
class PacketS:
    """A member's signed agreement, sent back to the leader."""

    report: EventReport
    member: NodeId
    member_pos: Position
    member_timestamp: int
    sig: Signature

    packet_type = PacketType.S


@dataclass(frozen=True)
class SignerEntry:
    """One signer of an aggregate: identity, position and signature."""

    node: NodeId
    position: Position
    signature: Signature


@dataclass(frozen=True)
class PacketA:
    """Aggregated warning: leader first, then members."""

    report: EventReport
    signers: tuple[SignerEntry, ...] = field(default_factory=tuple)

    packet_type = PacketType.A

    @property
    def leader(self) -> NodeId:
        return self.signers[0].node

    @property
    def n(self) -> int:
        return len(self.signers)

    @property
    def algo(self) -> DigestAlgo:
        return _algo_of([entry.signature for entry in self.signers])

    def payload_size(self) -> int:
        """Bytes counted against the packet budget."""
        return MESSAGE_BYTES + self.n * (SIGNER_RECORD_BYTES + self.algo.digest_size)

    @cached_property
    def digest_id(self) -> int:
        """Stable 64-bit identifier of the aggregate, signer list included."""
        h = hashlib.sha256(self.report.encoded)
        for entry in self.signers:
            h.update(_U64.pack(entry.node))
            h.update(_COORDS.pack(entry.position.x, entry.position.y, entry.position.z))
            h.update(entry.signature.value)
        return int.from_bytes(h.digest()[:8], "big")


Packet = Union[PacketW, PacketR, PacketS, PacketA]


def encode(packet: Packet) -> bytes:
    """
    Encode a packet with its frame header.

    Raises:
        PacketBudgetError: if a field does not fit its wire width
    """
    report = packet.report.encoded
    if isinstance(packet, PacketW):
        algo = _algo_of([packet.sig])
        body = report + _U64.pack(packet.sender) + packet.sig.value
    elif isinstance(packet, PacketR):
        algo = _algo_of([packet.sig])
        body = (
            report
            + _U64.pack(packet.leader)
            + _encode_position(packet.leader_pos)
            + _U64.pack(packet.request_timestamp)
            + packet.sig.value
        )
    elif isinstance(packet, PacketS):
        algo = _algo_of([packet.sig])
        body = (
            report
            + _U64.pack(packet.member)
            + _encode_position(packet.member_pos)
            + _U64.pack(packet.member_timestamp)
            + packet.sig.value
        )
    elif isinstance(packet, PacketA):
        if not 1 <= packet.n <= 255:
            raise PacketBudgetError(f"aggregate must carry 1..255 signers, got {packet.n}")
        algo = packet.algo
        records = b"".join(
            _U64.pack(entry.node) + _encode_position(entry.position) + entry.signature.value
            for entry in packet.signers
        )
        body = _U8.pack(packet.n) + report + records
    else:
        raise TypeError(f"not a packet: {packet!r}")
    return _FRAME.pack(packet.packet_type.tag, algo.code) + body


class _Reader:
    def __init__(self, data: bytes, offset: int):
        self.data = data
        self.offset = offset

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise PacketDecodeError(f"truncated {what}", len(self.data))
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def u64(self, what: str) -> int:
        return _U64.unpack(self.take(8, what))[0]

    def position(self, what: str) -> Position:
        chunk = self.take(_POSITION.size, what)
        return _decode_position(chunk, 0)

    def report(self) -> EventReport:
        start = self.offset
        self.take(MESSAGE_BYTES, "event report")
        return decode_report(self.data, start)


def decode(data: bytes) -> Packet:
    """
    Decode one packet.

    Raises:
        PacketDecodeError: on truncation, unknown tags or trailing bytes
    """
    if len(data) < _FRAME.size:
        raise PacketDecodeError("truncated frame header", len(data))
    tag, digest_code = _FRAME.unpack_from(data, 0)
    packet_type = _TYPES_BY_TAG.get(tag)
    if packet_type is None:
        raise PacketDecodeError(f"unknown packet tag 0x{tag:02x}", 0)
    try:
        algo = DigestAlgo.from_code(digest_code)
    except CryptoError:
        raise PacketDecodeError(f"unknown digest code {digest_code}", 1) from None
    size = algo.digest_size
    reader = _Reader(data, _FRAME.size)

    if packet_type is PacketType.W:
        report = reader.report()
        sender = reader.u64("sender id")
        packet = PacketW(report, sender, Signature(sender, reader.take(size, "signature")))
    elif packet_type in (PacketType.R, PacketType.S):
        report = reader.report()
        node = reader.u64("node id")
        pos = reader.position("position")
        stamp = reader.u64("timestamp")
        sig = Signature(node, reader.take(size, "signature"))
        cls = PacketR if packet_type is PacketType.R else PacketS
        packet = cls(report, node, pos, stamp, sig)
    else:
        count = reader.take(1, "signer count")[0]
        if count == 0:
            raise PacketDecodeError("aggregate without signers", _FRAME.size)
        report = reader.report()
        signers = []
        for _ in range(count):
            node = reader.u64("signer id")
            pos = reader.position("signer position")
            signers.append(SignerEntry(node, pos, Signature(node, reader.take(size, "signature"))))
        packet = PacketA(report, tuple(signers))

    if reader.offset != len(data):
        raise PacketDecodeError("trailing bytes after packet", reader.offset)
    return packet


@dataclass(frozen=True)
class PacketBudget:
    """Packet size budget; 100 bytes go to the message content."""

    packet_size: int
    message_bytes: int = MESSAGE_BYTES

    def __post_init__(self):
        if self.packet_size not in PACKET_SIZES:
            raise PacketBudgetError(
                f"packet size must be one of {PACKET_SIZES}, got {self.packet_size}"
            )

    @property
    def signature_area(self) -> int:
        return self.packet_size - self.message_bytes


def max_signatures(budget: PacketBudget, algo: DigestAlgo) -> int:
    """Signatures that fit when only digest bytes are counted."""
    return budget.signature_area // algo.digest_size


def max_signers_practical(budget: PacketBudget, algo: DigestAlgo) -> int:
    """Signers that fit when each carries its id and position as well."""
    return budget.signature_area // (SIGNER_RECORD_BYTES + algo.digest_size)


def check_budget(packet: PacketA, budget: PacketBudget) -> None:
    if packet.payload_size() > budget.packet_size:
        raise PacketBudgetError(
            f"aggregate with {packet.n} signers needs {packet.payload_size()} bytes, "
            f"budget is {budget.packet_size}"
        )


class SizingRow(NamedTuple):
    algo: DigestAlgo
    packet_size: int
    signature_area: int
    max_signatures: int


def sizing_table() -> list[SizingRow]:
    """Maximum signatures per packet size and digest, smallest packets first."""
    rows = []
    for packet_size in PACKET_SIZES:
        budget = PacketBudget(packet_size)
        for algo in (DigestAlgo.MD5, DigestAlgo.SHA1, DigestAlgo.SHA256):
            rows.append(
                SizingRow(algo, packet_size, budget.signature_area, max_signatures(budget, algo))
            )
    return rows
