"""Domain types and JSON configuration loading.

All parameter containers are frozen dataclasses validated on construction.
Fields are declared as floats but any real-number type works; supplying
``fractions.Fraction`` values keeps downstream arithmetic exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


def _check_unit(errors, name, value):
    if not isinstance(value, (int, float)) and not hasattr(value, "__float__"):
        errors.append(f"{name}: expected a number, got {type(value).__name__}")
        return
    if not (0 <= value <= 1):
        errors.append(f"{name}: must be in [0, 1] (got {value})")


def _raise_if(errors):
    if errors:
        raise ConfigError(errors)


@dataclass(frozen=True)
class ChannelParams:
    """Per-link solo-transmission success probabilities."""

    p_sd: float
    p_rd: float
    p_sr: float

    def __post_init__(self):
        errors = []
        _check_unit(errors, "p_sd", self.p_sd)
        _check_unit(errors, "p_rd", self.p_rd)
        _check_unit(errors, "p_sr", self.p_sr)
        if not errors and not (self.p_rd > self.p_sd):
            errors.append(
                f"p_rd: relay-to-destination link must beat the direct link "
                f"(p_rd={self.p_rd} <= p_sd={self.p_sd})"
            )
        _raise_if(errors)


@dataclass(frozen=True)
class EnergyParams:
    """Bernoulli energy-harvesting rates per slot."""

    delta_s: float
    delta_r: float

    def __post_init__(self):
        errors = []
        _check_unit(errors, "delta_s", self.delta_s)
        _check_unit(errors, "delta_r", self.delta_r)
        _raise_if(errors)


@dataclass(frozen=True)
class AccessPolicy:
    """Random-access transmit probabilities."""

    q_s: float
    q_r: float

    def __post_init__(self):
        errors = []
        _check_unit(errors, "q_s", self.q_s)
        _check_unit(errors, "q_r", self.q_r)
        _raise_if(errors)


@dataclass(frozen=True)
class RatePoint:
    """An arrival-rate pair (packets per slot); the coordinate space of all
    regions."""

    lambda_s: float
    lambda_r: float

    def __post_init__(self):
        errors = []
        _check_unit(errors, "lambda_s", self.lambda_s)
        _check_unit(errors, "lambda_r", self.lambda_r)
        _raise_if(errors)


@dataclass(frozen=True)
class ThroughputPair:
    """Service/throughput rates for the source and relay queues."""

    mu_s: float
    mu_r: float

    def __post_init__(self):
        errors = []
        _check_unit(errors, "mu_s", self.mu_s)
        _check_unit(errors, "mu_r", self.mu_r)
        _raise_if(errors)


@dataclass(frozen=True)
class NetworkParams:
    """Bundle of everything the analytic layer needs."""

    channel: ChannelParams
    energy: EnergyParams
    policy: AccessPolicy
    rates: RatePoint


_NETWORK_KEYS = (
    "p_sd",
    "p_rd",
    "p_sr",
    "delta_s",
    "delta_r",
    "q_s",
    "q_r",
    "lambda_s",
    "lambda_r",
)
_REQUIRED_KEYS = _NETWORK_KEYS[:7]
# extra keys accepted by the simulation/CLI layers
_SIM_KEYS = ("mode", "horizon", "seed", "warmup", "trajectory_stride", "grid", "seeds")


def read_config(source) -> dict:
    """Parse a JSON configuration from a path, file object, or dict."""
    if isinstance(source, dict):
        return dict(source)
    if hasattr(source, "read"):
        text = source.read()
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError([f"config: cannot read {source!r} ({exc})"]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: invalid JSON ({exc})"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["config: top-level JSON value must be an object"])
    return doc


def load_network_params(source) -> NetworkParams:
    """Build validated :class:`NetworkParams` from a JSON document.

    Every validation problem is reported, one message per field.
    """
    doc = read_config(source)
    errors = []
    for key in doc:
        if key not in _NETWORK_KEYS and key not in _SIM_KEYS:
            errors.append(f"{key}: unknown key")
    for key in _REQUIRED_KEYS:
        if key not in doc:
            errors.append(f"{key}: missing required key")
    for key in _NETWORK_KEYS:
        if key in doc:
            value = doc[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                errors.append(f"{key}: expected a number, got {type(value).__name__}")
            elif not (0 <= value <= 1):
                errors.append(f"{key}: must be in [0, 1] (got {value})")
    _raise_if(errors)

    try:
        channel = ChannelParams(doc["p_sd"], doc["p_rd"], doc["p_sr"])
        energy = EnergyParams(doc["delta_s"], doc["delta_r"])
        policy = AccessPolicy(doc["q_s"], doc["q_r"])
        rates = RatePoint(doc.get("lambda_s", 0.0), doc.get("lambda_r", 0.0))
    except ConfigError:
        raise
    return NetworkParams(channel, energy, policy, rates)
