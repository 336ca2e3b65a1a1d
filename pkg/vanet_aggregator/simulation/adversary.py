#!/usr/bin/env python3
"""
Adversary behaviours.
Which nodes misbehave, and the packet rewrites each behaviour applies.
"""

import logging
from dataclasses import replace
from enum import Enum

import numpy as np

from vanet_aggregator.crypto import DigestAlgo, KeyPair, NodeId, Signature, sign
from vanet_aggregator.geo import Position
from vanet_aggregator.packets import PacketA, SignerEntry

logger = logging.getLogger(__name__)

# Stream id mixed into the seed for adversary selection
ADVERSARY_STREAM = 0xAD


class AdversaryKind(str, Enum):
    FALSE_INFO = "FalseInfo"
    MODIFY_AGGREGATE = "ModifyAggregate"
    DISCARD_AGGREGATE = "DiscardAggregate"
    FALSE_TRUST_INCREASE = "FalseTrustIncrease"
    LEADER_FALSE_SIGNATURE = "LeaderFalseSignature"
    COLLUSION = "Collusion"
    IMPERSONATION = "Impersonation"

    @property
    def fabricates(self) -> bool:
        """Behaviours that invent an event of their own."""
        return self in (AdversaryKind.FALSE_INFO, AdversaryKind.IMPERSONATION)

    @property
    def rewrites_relays(self) -> bool:
        return self in (
            AdversaryKind.MODIFY_AGGREGATE,
            AdversaryKind.DISCARD_AGGREGATE,
            AdversaryKind.FALSE_TRUST_INCREASE,
        )


def assign_adversaries(
    counts: dict[AdversaryKind, int], node_ids: list[NodeId], seed: int
) -> dict[NodeId, AdversaryKind]:
    """
    Pick the misbehaving nodes from a seed-derived permutation of node ids.

    Raises:
        ValueError: when more adversaries are asked for than nodes exist
    """
    wanted = sum(counts.values())
    if wanted > len(node_ids):
        raise ValueError(f"{wanted} adversaries requested but only {len(node_ids)} nodes exist")
    order = np.random.default_rng([seed, ADVERSARY_STREAM]).permutation(len(node_ids))
    picked = iter(node_ids[int(i)] for i in order)
    behaviours = {}
    for kind in AdversaryKind:
        for _ in range(counts.get(kind, 0)):
            behaviours[next(picked)] = kind
    return behaviours


def modify_aggregate(packet: PacketA) -> PacketA:
    """Flip one bit of the report; every signature then covers other bytes."""
    report = replace(packet.report, x_mm=packet.report.x_mm ^ 1)
    return PacketA(report, packet.signers)


def append_false_trust(packet: PacketA, keys: KeyPair, position: Position, algo: DigestAlgo) -> PacketA:
    """Add the relay's own, valid signature although it never saw the event."""
    if any(entry.node == keys.node for entry in packet.signers):
        return packet
    entry = SignerEntry(keys.node, position.quantized(), sign(keys, packet.report.encoded, algo))
    return PacketA(packet.report, packet.signers + (entry,))


def forged_signature(victim: NodeId, algo: DigestAlgo, rng: np.random.Generator) -> Signature:
    return Signature(victim, rng.bytes(algo.digest_size))


def insert_forged_signature(
    packet: PacketA,
    victim: NodeId,
    algo: DigestAlgo,
    rng: np.random.Generator,
    max_signers: int,
) -> PacketA:
    """
    Put a random signature attributed to an honest node into an aggregate.

    The forged record is appended when there is room, otherwise it replaces
    the last member.
    """
    entry = SignerEntry(victim, packet.signers[0].position, forged_signature(victim, algo, rng))
    signers = packet.signers
    if len(signers) >= max_signers and len(signers) > 1:
        signers = signers[:-1]
    return PacketA(packet.report, signers + (entry,))


def collusion_aggregate(report, colluders: list[KeyPair], position: Position, algo: DigestAlgo) -> PacketA:
    """
    Aggregate co-signed out of band by a colluding group.

    Every colluder claims the fabricator's position, so the packet passes the
    cell-consistency check.
    """
    pos = position.quantized()
    signers = tuple(
        SignerEntry(keys.node, pos, sign(keys, report.encoded, algo))
        for keys in sorted(colluders, key=lambda k: k.node)
    )
    return PacketA(report, signers)
