"""Stability bounds, stable-throughput closure, and slot-level simulation
for a two-hop energy-harvesting relay network under slotted random access."""

from .errors import (
    ConfigError,
    DegenerateChannelError,
    DegenerateParameterError,
    EhRelayError,
    InfeasiblePointError,
    UnstableOccupancyError,
    UnstableRunError,
)
from .formulas import (
    battery_nonempty_prob,
    hypo_active_fraction_relay,
    hypo_active_fraction_source,
    relay_fraction,
    relay_total_arrival,
    saturated_throughput,
    success_aggregate,
)
from .params import (
    AccessPolicy,
    ChannelParams,
    EnergyParams,
    NetworkParams,
    RatePoint,
    ThroughputPair,
    load_network_params,
)
from .regions import (
    BoundaryPolyline,
    RegionSpec,
    inner_boundary,
    inner_contains,
    outer_boundary,
    outer_contains,
    r1_contains,
    r2_contains,
)
from . import closure
from .simulator import (
    NetworkState,
    SimConfig,
    SimMetrics,
    SimMode,
    load_sim_config,
    measure_service_identities,
    run,
    step,
)
from .stability import StabilityCriteria, StabilityVerdict, assess

__all__ = [
    "AccessPolicy",
    "BoundaryPolyline",
    "ChannelParams",
    "ConfigError",
    "DegenerateChannelError",
    "DegenerateParameterError",
    "EhRelayError",
    "EnergyParams",
    "InfeasiblePointError",
    "NetworkParams",
    "NetworkState",
    "RatePoint",
    "RegionSpec",
    "SimConfig",
    "SimMetrics",
    "SimMode",
    "StabilityCriteria",
    "StabilityVerdict",
    "ThroughputPair",
    "UnstableOccupancyError",
    "UnstableRunError",
    "assess",
    "battery_nonempty_prob",
    "closure",
    "hypo_active_fraction_relay",
    "hypo_active_fraction_source",
    "inner_boundary",
    "inner_contains",
    "load_network_params",
    "load_sim_config",
    "measure_service_identities",
    "outer_boundary",
    "outer_contains",
    "r1_contains",
    "r2_contains",
    "relay_fraction",
    "relay_total_arrival",
    "run",
    "saturated_throughput",
    "step",
    "success_aggregate",
]
