import json

import pytest

import ehrelay as er
from ehrelay.errors import ConfigError
from ehrelay.params import load_network_params

GOOD = {
    "p_sd": 0.2,
    "p_rd": 0.6,
    "p_sr": 0.5,
    "delta_s": 0.5,
    "delta_r": 0.6,
    "q_s": 0.3,
    "q_r": 0.4,
    "lambda_s": 0.05,
    "lambda_r": 0.10,
}


def test_load_good_document():
    params = load_network_params(GOOD)
    assert params.channel == er.ChannelParams(0.2, 0.6, 0.5)
    assert params.rates == er.RatePoint(0.05, 0.10)


def test_rates_default_to_zero():
    doc = {k: v for k, v in GOOD.items() if not k.startswith("lambda")}
    params = load_network_params(doc)
    assert params.rates == er.RatePoint(0.0, 0.0)


def test_load_from_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(GOOD))
    assert load_network_params(path) == load_network_params(GOOD)


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_network_params("/nonexistent/config.json")


def test_malformed_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_network_params(path)


def test_every_bad_field_is_reported():
    doc = dict(GOOD, p_sd=1.5, delta_r=-0.2, q_s="high")
    with pytest.raises(ConfigError) as excinfo:
        load_network_params(doc)
    messages = "\n".join(excinfo.value.messages)
    assert "p_sd" in messages
    assert "delta_r" in messages
    assert "q_s" in messages


def test_missing_required_key():
    doc = {k: v for k, v in GOOD.items() if k != "p_rd"}
    with pytest.raises(ConfigError, match="p_rd: missing"):
        load_network_params(doc)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="p_ds: unknown"):
        load_network_params(dict(GOOD, p_ds=0.1))


def test_relay_link_must_beat_direct_link():
    with pytest.raises(ConfigError, match="p_rd"):
        er.ChannelParams(0.6, 0.6, 0.5)
    with pytest.raises(ConfigError, match="p_rd"):
        load_network_params(dict(GOOD, p_rd=0.1))


@pytest.mark.parametrize(
    "cls,args",
    [
        (er.ChannelParams, (0.2, 0.6, 1.2)),
        (er.EnergyParams, (-0.1, 0.5)),
        (er.AccessPolicy, (0.3, 2.0)),
        (er.RatePoint, (1.5, 0.0)),
        (er.ThroughputPair, (0.5, -0.5)),
    ],
)
def test_out_of_range_fields_rejected(cls, args):
    with pytest.raises(ConfigError, match=r"must be in \[0, 1\]"):
        cls(*args)
