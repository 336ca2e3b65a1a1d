#!/usr/bin/env python3
"""
Isolated benches.
Attack detection frequency for a single tampered aggregate delivered to many
remote verifiers, and the count of checked signatures per packet size.
"""

from typing import NamedTuple

import numpy as np

from vanet_aggregator.config import DEFAULT_K, DEFAULT_MIN_SIGNATURES
from vanet_aggregator.crypto import DigestAlgo, Directory, KeyPair, generate_keypair, sign
from vanet_aggregator.geo import Position, RoadProfile, Zone, ZoneRadii
from vanet_aggregator.packets import (
    Direction,
    EventReport,
    EventType,
    PacketA,
    PacketBudget,
    SignerEntry,
    max_signatures,
)
from vanet_aggregator.simulation.adversary import (
    AdversaryKind,
    append_false_trust,
    insert_forged_signature,
    modify_aggregate,
)
from vanet_aggregator.verify import (
    VerificationPolicy,
    inconsistent_packets,
    verification_rng,
    verify_aggregate,
)

BENCH_STREAM = 0xBE
FIRST_VERIFIER_ID = 10_000


def bench_report() -> EventReport:
    return EventReport.create(
        Position(0.0, 0.0),
        EventType.TRAFFIC_JAM,
        Direction.FORWARD,
        road_id=1,
        road=RoadProfile(lanes_per_direction=3, speed_limit=120),
        radii=ZoneRadii(100, 500, 2000),
        timestamp=0,
        source=1,
    )


def honest_aggregate(
    n: int, algo: DigestAlgo, seed: int, extra_identities: int = 0
) -> tuple[PacketA, Directory, list[KeyPair]]:
    """
    An aggregate with n valid signers standing inside the central cell.

    Returns:
        Tuple of (packet, directory with the signers, key pairs of signers
        followed by the extra identities, which are not registered)
    """
    if not 1 <= n <= 255:
        raise ValueError(f"n must lie in 1..255, got {n}")
    report = bench_report()
    rng = np.random.default_rng([seed, BENCH_STREAM])
    keys = [generate_keypair(i, rng) for i in range(1, n + extra_identities + 1)]
    directory = Directory()
    for key in keys[:n]:
        directory.register(key)
    signers = tuple(
        SignerEntry(key.node, Position(0.5 * i, 1.0), sign(key, report.encoded, algo))
        for i, key in enumerate(keys[:n])
    )
    return PacketA(report, signers), directory, keys


def tamper(
    behavior: AdversaryKind, packet: PacketA, keys: list[KeyPair], algo: DigestAlgo, rng: np.random.Generator
) -> PacketA:
    """Apply one adversary behaviour to an honest aggregate, keeping its size where possible."""
    n = packet.n
    if behavior is AdversaryKind.MODIFY_AGGREGATE:
        return modify_aggregate(packet)
    if behavior is AdversaryKind.LEADER_FALSE_SIGNATURE:
        if n < 2:
            raise ValueError("a forged member signature needs n >= 2")
        victim = packet.signers[-1].node
        return insert_forged_signature(PacketA(packet.report, packet.signers[:-1]), victim, algo, rng, n)
    if behavior in (AdversaryKind.FALSE_TRUST_INCREASE, AdversaryKind.IMPERSONATION):
        # the outsider stands in the next cell along the road
        return append_false_trust(packet, keys[-1], Position(300.0, 1.0), algo)
    raise ValueError(f"{behavior.value} cannot be measured on a single aggregate")


def measure_detection(
    behavior: AdversaryKind,
    n: int,
    deliveries: int,
    seed: int,
    k: int = DEFAULT_K,
    algo: DigestAlgo = DigestAlgo.SHA1,
    zone: Zone = Zone.UNCERTAINTY,
    min_signatures: int = DEFAULT_MIN_SIGNATURES,
) -> float:
    """
    Deliver one tampered aggregate to many remote verifiers.

    Args:
        behavior: Adversary behaviour applied to an honest n-signer aggregate
        n: Signers of the honest aggregate
        deliveries: Number of distinct verifiers
        seed: Run seed
        k: Verification parameter
        algo: Digest algorithm
        zone: Zone of the verifiers; the security zone adds the cell check

    Returns:
        Share of verifiers that did not accept the packet
    """
    if deliveries < 1:
        raise ValueError("deliveries must be positive")
    honest, directory, keys = honest_aggregate(n, algo, seed, extra_identities=1)
    if behavior is AdversaryKind.FALSE_TRUST_INCREASE:
        directory.register(keys[-1])
    packet = tamper(behavior, honest, keys, algo, np.random.default_rng([seed, BENCH_STREAM, 1]))
    policy = VerificationPolicy.for_zone(zone, k, min_signatures)
    inconsistent = zone is Zone.SECURITY and bool(inconsistent_packets([packet]))

    detected = 0
    for d in range(deliveries):
        rng = verification_rng(seed, FIRST_VERIFIER_ID + d, packet)
        outcome = verify_aggregate(packet, directory, policy, rng)
        if not outcome.reliable or inconsistent:
            detected += 1
    return detected / deliveries


class BenchResult(NamedTuple):
    algo: DigestAlgo
    packet_size: int
    n: int
    runs: int
    mean_verified: float
    std_verified: float


def verification_bench(
    algo: DigestAlgo, packet_size: int, runs: int, seed: int, k: int = DEFAULT_K
) -> BenchResult:
    """
    Count checked signatures on a full aggregate of a given packet size.

    The aggregate carries max_signatures(packet_size, algo) signers.
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    n = max_signatures(PacketBudget(packet_size), algo)
    packet, directory, _ = honest_aggregate(n, algo, seed)
    policy = VerificationPolicy(k=k, min_signatures=1)
    counts = np.array(
        [
            verify_aggregate(packet, directory, policy, np.random.default_rng([seed, run, n])).verified_count
            for run in range(runs)
        ]
    )
    return BenchResult(algo, packet_size, n, runs, float(counts.mean()), float(counts.std()))
