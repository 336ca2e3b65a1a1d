#!/usr/bin/env python3
"""
Probabilistic verification of aggregated packets.
Each of the n signatures is checked independently with probability about
k/n, with a floor of two checks, and the packet is accepted only when every
checked signature is valid. Also holds the closed-form analytics behind the
choice of k.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from vanet_aggregator.config import (
    DEFAULT_K,
    DEFAULT_MIN_SIGNATURES,
    MIN_CHECKED_SIGNATURES,
)
from vanet_aggregator.crypto import (
    CryptoError,
    DigestAlgo,
    Directory,
    NodeId,
    SignatureStatus,
    check_signature,
)
from vanet_aggregator.geo import CellId, Zone, cell_of
from vanet_aggregator.packets import PacketA

logger = logging.getLogger(__name__)


class VerificationError(ValueError):
    """Raised on invalid analytic inputs or mismatched packet sets."""


@dataclass(frozen=True)
class VerificationPolicy:
    """How a receiver verifies aggregates, depending on its zone."""

    k: int = DEFAULT_K
    min_signatures: int = DEFAULT_MIN_SIGNATURES
    zone: Zone = Zone.UNCERTAINTY
    check_all: bool = False

    def __post_init__(self):
        if self.k <= 0:
            raise VerificationError("k must be positive")
        if self.min_signatures < 1:
            raise VerificationError("min_signatures must be at least 1")

    @classmethod
    def for_zone(
        cls, zone: Zone, k: int = DEFAULT_K, min_signatures: int = DEFAULT_MIN_SIGNATURES
    ) -> "VerificationPolicy":
        """Danger-zone nodes check every signature of the aggregates they get."""
        if zone is Zone.DANGER:
            return cls(k=k, min_signatures=min_signatures, zone=zone, check_all=True)
        return cls(k=k, min_signatures=min_signatures, zone=zone)


class OutcomeStatus(str, Enum):
    RELIABLE = "reliable"
    NOT_RELIABLE = "not_reliable"
    NOT_ENOUGH_SIGNATURES = "not_enough_signatures"


@dataclass(frozen=True)
class VerificationOutcome:
    """Outcome of verifying one aggregate."""

    status: OutcomeStatus
    verified_count: int = 0
    first_bad_signer: NodeId | None = None
    unknown_identity: bool = False
    cell_inconsistent: bool = False

    @property
    def reliable(self) -> bool:
        return self.status is OutcomeStatus.RELIABLE

    @classmethod
    def not_enough(cls) -> "VerificationOutcome":
        return cls(OutcomeStatus.NOT_ENOUGH_SIGNATURES)


def verification_probability(n: int, k: int = DEFAULT_K) -> float:
    """Per-signature check probability min(1, k/n)."""
    if n < 1:
        raise VerificationError(f"n must be at least 1, got {n}")
    return min(1.0, k / n)


def prob_at_least_two(n: int, p: float) -> float:
    """
    Probability that at least two of n independent checks happen.

    Args:
        n: Number of signatures
        p: Per-signature check probability

    Returns:
        1 - (1-p)^n - n*p*(1-p)^(n-1), and 0 when n < 2
    """
    if not 0.0 <= p <= 1.0:
        raise VerificationError(f"p must lie in [0, 1], got {p}")
    if n < 0:
        raise VerificationError(f"n must be non-negative, got {n}")
    if n < 2:
        return 0.0
    q = 1.0 - p
    value = 1.0 - q**n - n * p * q ** (n - 1)
    return min(1.0, max(0.0, value))


def monte_carlo_at_least_two(
    n: int, p: float, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """
    Bernoulli oracle for prob_at_least_two.

    Returns:
        Tuple of (estimate, standard error of the estimate)
    """
    if trials < 1:
        raise VerificationError("trials must be positive")
    successes = rng.binomial(n, p, size=trials) >= 2
    estimate = float(successes.mean())
    return estimate, math.sqrt(estimate * (1.0 - estimate) / trials)


def expected_verifications(n: int, k: int = DEFAULT_K) -> float:
    """Mean number of checked signatures, n * min(1, k/n)."""
    return n * verification_probability(n, k)


def verification_rng(seed: int, node: NodeId, packet: PacketA) -> np.random.Generator:
    """
    Generator whose i-th draw depends only on (seed, node, packet, i).

    Two aggregates of the same report with different signer lists draw
    independently.
    """
    return np.random.default_rng([seed, node, packet.digest_id])


def select_signatures(n: int, k: int, rng: np.random.Generator) -> list[int]:
    """
    Indices chosen for checking.

    Index i is chosen when its draw u in 0..99 reaches (1 - k/n) * 100. When
    fewer than two are chosen, extra indices are drawn uniformly from the
    rest until two (or all n, if n < 2) are checked.
    """
    draws = rng.integers(0, 100, size=n)
    threshold = (1.0 - k / n) * 100.0
    chosen = [int(i) for i in np.flatnonzero(draws >= threshold)]
    floor = min(MIN_CHECKED_SIGNATURES, n)
    if len(chosen) < floor:
        rest = [i for i in range(n) if i not in chosen]
        extra = rng.choice(rest, size=floor - len(chosen), replace=False)
        chosen = sorted(chosen + [int(i) for i in extra])
    return chosen


def verify_aggregate(
    packet: PacketA,
    directory: Directory,
    policy: VerificationPolicy,
    rng: np.random.Generator,
) -> VerificationOutcome:
    """
    Verify an aggregate by sampling its signatures.

    Every checked signature must be valid for the packet to be Reliable;
    checking stops at the first failure.
    """
    n = packet.n
    if n < policy.min_signatures:
        return VerificationOutcome.not_enough()

    try:
        algo = DigestAlgo.for_size(len(packet.signers[0].signature.value))
    except CryptoError:
        return VerificationOutcome(
            OutcomeStatus.NOT_RELIABLE, first_bad_signer=packet.leader
        )

    if policy.check_all:
        chosen = list(range(n))
    else:
        chosen = select_signatures(n, policy.k, rng)

    message = packet.report.encoded
    checked = 0
    for index in chosen:
        entry = packet.signers[index]
        checked += 1
        status = check_signature(directory, entry.signature, message, algo)
        if status is not SignatureStatus.VALID or entry.signature.signer != entry.node:
            logger.debug(
                "aggregate from leader %s failed at signer %s (%s)",
                packet.leader,
                entry.node,
                status.value,
            )
            return VerificationOutcome(
                OutcomeStatus.NOT_RELIABLE,
                verified_count=checked,
                first_bad_signer=entry.node,
                unknown_identity=status is SignatureStatus.UNKNOWN_SIGNER,
            )
    return VerificationOutcome(OutcomeStatus.RELIABLE, verified_count=checked)


class ZoneCheck(NamedTuple):
    distinct_groups: int
    cell_consistent: bool


def _signer_cells(packet: PacketA) -> set[CellId]:
    grid = packet.report.grid
    return {cell_of(grid, entry.position) for entry in packet.signers}


def _origin_cell(packet: PacketA) -> CellId:
    return cell_of(packet.report.grid, packet.signers[0].position)


def _check_same_event(packets: list[PacketA]) -> None:
    keys = {packet.report.key for packet in packets}
    if len(keys) > 1:
        raise VerificationError("security zone check needs packets about one event")


def security_zone_check(packets: list[PacketA]) -> ZoneCheck:
    """
    Rebuild the cells the packets were created in.

    Returns:
        ZoneCheck with the number of distinct originating cells and whether
        the signers of every packet lie in a single cell
    """
    _check_same_event(packets)
    origins = {_origin_cell(packet) for packet in packets}
    consistent = all(len(_signer_cells(packet)) == 1 for packet in packets)
    return ZoneCheck(len(origins), consistent)


def inconsistent_packets(packets: list[PacketA]) -> list[PacketA]:
    """Packets whose signers span more than one cell."""
    _check_same_event(packets)
    return [packet for packet in packets if len(_signer_cells(packet)) > 1]
