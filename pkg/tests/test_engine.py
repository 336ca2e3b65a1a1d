"""Discrete-event engine tests."""

import io
import math

import pytest

from vanet_aggregator.packets import Incident, PacketA
from vanet_aggregator.settings import SimConfig
from vanet_aggregator.simulation.adversary import AdversaryKind
from vanet_aggregator.simulation.engine import SimulationError, World, baseline_run, run
from vanet_aggregator.simulation.metrics import attack_report, reachable_nodes


def _traced(config, baseline=False):
    stream = io.StringIO()
    metrics = World(config, aggregation=not baseline, trace=stream).run()
    return metrics, stream.getvalue()


def test_same_seed_same_trace(small_config):
    first, trace_a = _traced(small_config)
    second, trace_b = _traced(small_config)
    assert trace_a == trace_b
    assert first.as_row() == second.as_row()
    assert trace_a


def test_trace_lines_have_four_fields(small_config):
    _, trace = _traced(small_config)
    for line in trace.splitlines():
        time_ms, kind, node, payload = line.split("\t")
        assert int(time_ms) >= 0
        assert kind
        assert node
        if payload:
            bytes.fromhex(payload)


def test_different_seeds_differ(small_config):
    _, trace_a = _traced(small_config)
    _, trace_b = _traced(small_config.with_overrides(seed=8))
    assert trace_a != trace_b


def test_conservation():
    metrics = run(SimConfig(node_count=20, sim_duration=300, seed=1, loss_rate=0.2))
    # packets still in flight at the end are neither delivered nor lost
    assert metrics.deliveries + metrics.losses <= metrics.transmissions
    assert metrics.losses > 0


def test_lossless_delivery_matches_transmissions(small_config):
    metrics = run(small_config)
    assert metrics.losses == metrics.drops["unreachable"]


@pytest.mark.parametrize("nodes", [10, 20])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_aggregation_sends_fewer_packets(nodes, seed):
    config = SimConfig(node_count=nodes, sim_duration=300, seed=seed)
    aggregated = run(config)
    baseline = baseline_run(config)
    assert aggregated.packets_total < baseline.packets_total


def test_single_node_has_nothing_to_aggregate():
    config = SimConfig(node_count=1, sim_duration=300, seed=3)
    aggregated = run(config)
    baseline = baseline_run(config)
    assert aggregated.packets["S"] == 0
    assert set(aggregated.signer_counts) <= {1}
    assert aggregated.packets["A"] <= baseline.packets["W"]


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_honest_world_is_sound_and_covers_reachable_nodes(seed):
    config = SimConfig(node_count=20, sim_duration=300, seed=seed)
    world = World(config)
    metrics = world.run()
    assert metrics.false_reliable == 0

    incident = world.incident.incident
    sources = {}
    for node in world.nodes:
        for key, entry in node.store.items():
            packet = entry.packet
            if isinstance(packet, PacketA) and packet.leader == node.id and packet.n >= config.min_signatures:
                sources[node.id] = min(sources.get(node.id, math.inf), metrics.reliable_at[(node.id, key)] + 1)
    reached = reachable_nodes(metrics.contacts, sources, until=world.end - 1000, latency_ms=config.latency_ms)

    covered = {nid for (nid, key) in metrics.reliable_at if Incident(*key[:4]) == incident}
    assert set(reached) <= covered
    for (nid, key) in metrics.reliable_at:
        assert Incident(*key[:4]) == incident


def test_coverage_fields(small_config):
    metrics = run(small_config)
    assert metrics.scope_nodes == small_config.node_count
    assert 0 <= metrics.covered_nodes <= metrics.scope_nodes
    if metrics.covered_nodes < metrics.scope_nodes:
        assert math.isnan(metrics.coverage_time_s)
    else:
        assert 0 <= metrics.coverage_time_s <= small_config.sim_duration


@pytest.mark.parametrize("kind", [k for k in AdversaryKind if k is not AdversaryKind.COLLUSION])
def test_attacks_never_create_false_events(kind):
    config = SimConfig(node_count=20, sim_duration=200, seed=4, adversaries=f"{kind.value}:2")
    metrics = run(config)
    assert metrics.false_reliable == 0
    if kind.fabricates:
        assert metrics.attacks_injected[kind.value] == 2


def test_false_info_is_detected():
    config = SimConfig(node_count=20, sim_duration=200, seed=4, adversaries="FalseInfo:1")
    metrics = run(config)
    assert metrics.false_reliable == 0
    assert metrics.attacks_accepted["FalseInfo"] == 0


def test_small_collusion_is_not_accepted():
    config = SimConfig(node_count=20, sim_duration=200, seed=5, adversaries="Collusion:2")
    metrics = run(config)
    assert metrics.attacks_injected["Collusion"] == 1
    assert metrics.false_reliable == 0


def test_attack_report_lists_injected_kinds():
    config = SimConfig(node_count=20, sim_duration=200, seed=4, adversaries="FalseInfo:1,Impersonation:1")
    report = attack_report(run(config))
    assert set(report) >= {"FalseInfo", "Impersonation"}


def test_baseline_ignores_adversaries():
    config = SimConfig(node_count=10, sim_duration=100, seed=4, adversaries="FalseInfo:3")
    assert sum(baseline_run(config).attacks_injected.values()) == 0


def test_too_many_adversaries():
    with pytest.raises(SimulationError):
        World(SimConfig(node_count=3, sim_duration=10, adversaries="FalseInfo:4"))


def test_adversaries_attach_to_existing_nodes(small_config):
    world = World(small_config)
    with pytest.raises(ValueError):
        world.inject_adversary({99: AdversaryKind.FALSE_INFO})


def test_impersonators_have_no_identity():
    world = World(SimConfig(node_count=10, sim_duration=10, seed=2, adversaries="Impersonation:2"))
    fakes = [nid for nid, kind in world.behaviours.items() if kind is AdversaryKind.IMPERSONATION]
    assert len(fakes) == 2
    assert all(nid not in world.directory for nid in fakes)
    assert len(world.directory) == 8


@pytest.mark.parametrize("baseline", [False, True])
def test_encounters_hand_each_packet_over_once(baseline):
    config = SimConfig(node_count=20, sim_duration=300, seed=1)
    _, trace = _traced(config, baseline=baseline)
    handed = [tuple(line.split("\t")[2:]) for line in trace.splitlines() if line.split("\t")[1] == "exchange"]
    assert len(handed) == len(set(handed))
