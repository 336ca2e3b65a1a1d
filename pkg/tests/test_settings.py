"""Config file parsing and validation tests."""

import pytest

from vanet_aggregator.crypto import DigestAlgo
from vanet_aggregator.geo import RoadClass
from vanet_aggregator.packets import EventType
from vanet_aggregator.settings import (
    ConfigError,
    SimConfig,
    accepted_keys,
    load_config,
    parse_adversaries,
    parse_config_text,
    preset_path,
    resolve_config,
)
from vanet_aggregator.simulation.adversary import AdversaryKind


def test_defaults_match_reference_setup():
    config = SimConfig()
    assert config.node_count == 20
    assert config.strip_length == 1000
    assert config.lanes_per_direction == 3
    assert config.sim_duration == 1000
    assert config.retransmission_start == 40
    assert config.retransmission_period == 10
    assert config.tx_range == 100
    assert config.event_distance == 800
    assert config.k == 10
    assert config.packet_size == 1024
    assert config.digest is DigestAlgo.SHA1


def test_parse_text():
    config = parse_config_text(
        """
        # a comment
        node_count = 30   # trailing comment
        digest = SHA-256
        road_class = highway
        adversaries = FalseInfo:2, Collusion
        t_accident =
        """
    )
    assert config.node_count == 30
    assert config.digest is DigestAlgo.SHA256
    assert config.road.road_class is RoadClass.HIGHWAY
    assert config.adversary_counts == {AdversaryKind.FALSE_INFO: 2, AdversaryKind.COLLUSION: 1}
    assert config.t_accident is None


def test_unknown_key_lists_defaults():
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text("nodes = 10")
    message = str(excinfo.value)
    assert "unknown key 'nodes'" in message
    assert "node_count = 20" in message


def test_duplicate_key():
    with pytest.raises(ConfigError, match="given twice"):
        parse_config_text("k = 6\nk = 10")


def test_malformed_line():
    with pytest.raises(ConfigError, match=":2:"):
        parse_config_text("k = 6\nnot a pair")


@pytest.mark.parametrize(
    "text",
    [
        "tx_range = 301",
        "node_count = 0",
        "packet_size = 1000",
        "digest = sha512",
        "danger_radius = 600",
        "min_speed_fraction = 0.9\nmax_speed_fraction = 0.5",
        "event_distance = 1200",
        "group_window_ms = 200000",
        "adversaries = Sybil:2",
        "loss_rate = 1",
    ],
)
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_adversary_list():
    assert parse_adversaries("") == {}
    assert parse_adversaries("ModifyAggregate:3") == {AdversaryKind.MODIFY_AGGREGATE: 3}
    with pytest.raises(ConfigError, match="known"):
        parse_adversaries("Sybil")
    with pytest.raises(ConfigError):
        parse_adversaries("FalseInfo:x")
    with pytest.raises(ConfigError):
        parse_adversaries("FalseInfo:1,FalseInfo:2")


def test_protocol_settings():
    config = SimConfig(t_accident=120, f_conventional=3, packet_size=512, digest="md5")
    settings = config.protocol_settings()
    assert settings.basic_times_s[EventType.ACCIDENT] == 120
    assert settings.road_factors[RoadClass.CONVENTIONAL] == 3
    assert settings.budget.packet_size == 512
    assert settings.algo is DigestAlgo.MD5


def test_overrides_are_validated():
    config = SimConfig()
    assert config.with_overrides(seed=5).seed == 5
    with pytest.raises(ConfigError):
        config.with_overrides(tx_range=1000)


def test_config_is_frozen():
    with pytest.raises(Exception):
        SimConfig().seed = 3


def test_presets_load():
    for name in ("default", "fig12", "fig13", "table2"):
        assert preset_path(name).is_file()
    assert resolve_config(preset="default") == SimConfig()
    assert resolve_config(preset="table2").experiment == "verification_bench"


def test_unknown_preset():
    with pytest.raises(ConfigError, match="fig12"):
        preset_path("fig99")


def test_load_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("seed = 42\nnode_count = 10\n", encoding="utf-8")
    config = load_config(path)
    assert (config.seed, config.node_count) == (42, 10)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.conf")


def test_config_and_preset_exclusive(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ConfigError):
        resolve_config(path, "default")
    assert resolve_config(path) == SimConfig()


def test_accepted_keys_cover_every_field():
    listing = accepted_keys()
    for name in SimConfig.model_fields:
        assert f"  {name} = " in listing
