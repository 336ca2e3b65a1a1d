"""Metric counters and contact-graph reachability tests."""

import math

from vanet_aggregator.packets import PacketType
from vanet_aggregator.simulation.metrics import Metrics, attack_report, reachable_nodes


def test_empty_metrics():
    metrics = Metrics()
    assert metrics.packets_total == 0
    assert math.isnan(metrics.mean_verified)
    assert math.isnan(metrics.coverage_fraction)
    assert math.isnan(metrics.detection_rate())
    row = metrics.as_row()
    assert list(row)[0] == "schema_version"
    assert row["coverage_time_s"] == ""


def test_counters():
    metrics = Metrics()
    for packet_type in (PacketType.W, PacketType.A, PacketType.A):
        metrics.count_packet(packet_type)
    metrics.verifications.update({10: 3, 4: 1})
    assert metrics.packets_total == 3
    assert metrics.as_row()["packets_a"] == 2
    assert metrics.mean_verified == 8.5


def test_first_reliable_time_is_kept():
    metrics = Metrics()
    key = (1, 2, 3, 1, 0)
    metrics.record_reliable(4, key, 100)
    metrics.record_reliable(4, key, 50)
    assert metrics.reliable_at[(4, key)] == 100


def test_attack_report():
    metrics = Metrics()
    metrics.attacks_detected["ModifyAggregate"] = 9
    metrics.attacks_accepted["ModifyAggregate"] = 1
    metrics.attacks_injected["DiscardAggregate"] = 4
    report = attack_report(metrics)
    assert report["ModifyAggregate"] == 0.9
    assert math.isnan(report["DiscardAggregate"])


def test_reachability_respects_time():
    contacts = [(10, 1, 2), (5, 2, 3), (20, 2, 3), (30, 3, 4)]
    held = reachable_nodes(contacts, {1: 0}, until=25)
    assert held == {1: 0, 2: 10, 3: 20}


def test_reachability_with_latency():
    contacts = [(10, 1, 2), (10, 2, 3), (11, 2, 3)]
    held = reachable_nodes(contacts, {1: 0}, until=100, latency_ms=1)
    assert held[2] == 11
    assert held[3] == 12
