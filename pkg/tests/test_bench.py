"""Attack detection and verification-count benches."""

import numpy as np
import pytest

from vanet_aggregator.crypto import DigestAlgo
from vanet_aggregator.geo import Position, Zone
from vanet_aggregator.packets import PacketBudget, max_signatures
from vanet_aggregator.simulation.adversary import (
    AdversaryKind,
    assign_adversaries,
    collusion_aggregate,
    insert_forged_signature,
    modify_aggregate,
)
from vanet_aggregator.simulation.bench import (
    honest_aggregate,
    measure_detection,
    verification_bench,
)
from vanet_aggregator.verify import VerificationPolicy, verify_aggregate


def test_modify_aggregate_is_always_detected():
    assert measure_detection(AdversaryKind.MODIFY_AGGREGATE, n=20, deliveries=1000, seed=1) >= 0.999


@pytest.mark.parametrize("n", [10, 46])
def test_modify_aggregate_detected_for_large_groups(n):
    assert measure_detection(AdversaryKind.MODIFY_AGGREGATE, n=n, deliveries=1000, seed=2) >= 0.999


def test_forged_leader_signature_caught_half_the_time():
    rate = measure_detection(AdversaryKind.LEADER_FALSE_SIGNATURE, n=20, deliveries=1000, seed=1)
    assert rate == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize("n", [46, 70])
def test_forged_leader_signature_caught_at_rate_k_over_n(n):
    rate = measure_detection(AdversaryKind.LEADER_FALSE_SIGNATURE, n=n, deliveries=4000, seed=n)
    assert rate == pytest.approx(10 / n, abs=0.05)


def test_forged_leader_signature_always_caught_in_danger_zone():
    rate = measure_detection(AdversaryKind.LEADER_FALSE_SIGNATURE, n=20, deliveries=200, seed=1, zone=Zone.DANGER)
    assert rate == 1.0


def test_forged_signature_in_small_group_always_checked():
    assert measure_detection(AdversaryKind.LEADER_FALSE_SIGNATURE, n=8, deliveries=200, seed=3) == 1.0


def test_impersonation_is_caught_whenever_the_outsider_is_checked():
    rate = measure_detection(AdversaryKind.IMPERSONATION, n=8, deliveries=200, seed=1)
    assert rate == 1.0


def test_false_trust_increase_caught_by_cell_check():
    remote = measure_detection(AdversaryKind.FALSE_TRUST_INCREASE, n=8, deliveries=200, seed=1)
    security = measure_detection(
        AdversaryKind.FALSE_TRUST_INCREASE, n=8, deliveries=200, seed=1, zone=Zone.SECURITY
    )
    assert remote == 0.0
    assert security == 1.0


def test_discard_cannot_be_benched():
    with pytest.raises(ValueError):
        measure_detection(AdversaryKind.DISCARD_AGGREGATE, n=8, deliveries=10, seed=1)


def test_deliveries_must_be_positive():
    with pytest.raises(ValueError):
        measure_detection(AdversaryKind.MODIFY_AGGREGATE, n=8, deliveries=0, seed=1)


@pytest.mark.parametrize(
    "algo, packet_size, expected",
    [
        (DigestAlgo.SHA256, 256, 4),
        (DigestAlgo.SHA1, 256, 7),
        (DigestAlgo.MD5, 256, 9),
        (DigestAlgo.SHA1, 512, 10),
        (DigestAlgo.SHA1, 1024, 10),
        (DigestAlgo.SHA1, 1500, 10),
    ],
)
def test_checked_signatures_per_packet_size(algo, packet_size, expected):
    result = verification_bench(algo, packet_size, runs=1000, seed=0)
    assert result.n == max_signatures(PacketBudget(packet_size), algo)
    assert result.mean_verified == pytest.approx(expected, abs=1)


def test_full_aggregates_below_k_are_checked_exactly():
    result = verification_bench(DigestAlgo.SHA1, 256, runs=50, seed=0)
    assert result.mean_verified == 7
    assert result.std_verified == 0


def test_bench_is_seeded():
    a = verification_bench(DigestAlgo.MD5, 1024, runs=100, seed=5)
    b = verification_bench(DigestAlgo.MD5, 1024, runs=100, seed=5)
    assert a == b


def test_assignment_is_seeded_and_complete():
    counts = {AdversaryKind.FALSE_INFO: 2, AdversaryKind.COLLUSION: 3}
    first = assign_adversaries(counts, list(range(1, 21)), seed=9)
    assert first == assign_adversaries(counts, list(range(1, 21)), seed=9)
    assert sorted(first.values()).count(AdversaryKind.COLLUSION) == 3
    assert len(first) == 5
    with pytest.raises(ValueError):
        assign_adversaries({AdversaryKind.FALSE_INFO: 21}, list(range(1, 21)), seed=9)


def test_kind_groups():
    assert AdversaryKind.FALSE_INFO.fabricates
    assert AdversaryKind.IMPERSONATION.fabricates
    assert not AdversaryKind.COLLUSION.fabricates
    assert AdversaryKind.DISCARD_AGGREGATE.rewrites_relays
    assert not AdversaryKind.LEADER_FALSE_SIGNATURE.rewrites_relays


def test_modified_aggregate_keeps_signers():
    packet, _, _ = honest_aggregate(5, DigestAlgo.SHA1, seed=1)
    tampered = modify_aggregate(packet)
    assert tampered.signers == packet.signers
    assert tampered.report.encoded != packet.report.encoded


def test_forged_signature_replaces_last_member_when_full():
    packet, directory, _ = honest_aggregate(4, DigestAlgo.SHA1, seed=1)
    forged = insert_forged_signature(packet, victim=2, algo=DigestAlgo.SHA1, rng=np.random.default_rng(0), max_signers=4)
    assert forged.n == 4
    assert forged.signers[-1].node == 2
    policy = VerificationPolicy.for_zone(Zone.DANGER)
    assert not verify_aggregate(forged, directory, policy, np.random.default_rng(0)).reliable


def test_colluders_share_one_position():
    packet, directory, keys = honest_aggregate(3, DigestAlgo.SHA1, seed=1)
    colluded = collusion_aggregate(packet.report, keys, Position(12.3456, 1.0), DigestAlgo.SHA1)
    assert [entry.node for entry in colluded.signers] == [1, 2, 3]
    assert len({entry.position for entry in colluded.signers}) == 1
    policy = VerificationPolicy.for_zone(Zone.UNCERTAINTY)
    assert verify_aggregate(colluded, directory, policy, np.random.default_rng(0)).reliable
