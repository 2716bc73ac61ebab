"""Slot-level stochastic simulation of the source-relay-destination network.

Slot mechanics, in order:

1. eligibility from start-of-slot state: a node may transmit when its
   battery is nonempty and its packet queue is nonempty (dominant and
   saturated modes treat the designated queues as always nonempty, but an
   empty battery still silences the node; dummies cost energy too);
2. each eligible node transmits independently with its access probability,
   paying one energy unit per attempt, success or not;
3. outcomes: two transmissions collide and nothing moves; a solo source
   transmission leaves the queue on direct success, otherwise moves to the
   relay queue on overhear success (the relay can only overhear when it is
   not itself transmitting); a solo relay transmission departs on success;
   dummy transmissions never move packets or count as deliveries;
4. exogenous arrivals and energy harvests land at the end of the slot and
   are unavailable until the next one.

Every run consumes exactly one draw per slot from each of nine named
streams (arrivals, harvests, transmit decisions, and the three links), so
runs with a common seed are coupled across modes.  The measured service
rates are the per-slot averages of the virtual would-a-head-of-line-packet-
depart indicators, which in saturated mode coincide with actual throughput.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConfigError, UnstableRunError
from .formulas import success_aggregate
from .params import (
    AccessPolicy,
    ChannelParams,
    EnergyParams,
    NetworkParams,
    RatePoint,
    load_network_params,
    read_config,
)


class SimMode(Enum):
    ORIGINAL = "original"
    SOURCE_DOMINANT = "source-dominant"
    RELAY_DOMINANT = "relay-dominant"
    SATURATED = "saturated"


STREAM_NAMES = (
    "source-arrival",
    "relay-arrival",
    "source-harvest",
    "relay-harvest",
    "source-decision",
    "relay-decision",
    "channel-sd",
    "channel-sr",
    "channel-rd",
)

_CHUNK = 1 << 15


@dataclass(frozen=True)
class NetworkState:
    """Queue lengths and battery levels at the start of a slot."""

    q_s_len: int = 0
    q_r_len: int = 0
    b_s_level: int = 0
    b_r_level: int = 0
    slot_index: int = 0

    def __post_init__(self):
        for name in ("q_s_len", "q_r_len", "b_s_level", "b_r_level", "slot_index"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{name}: must be a nonnegative integer (got {v!r})")


@dataclass(frozen=True)
class SimConfig:
    channel: ChannelParams
    energy: EnergyParams
    policy: AccessPolicy
    rates: RatePoint
    mode: SimMode
    horizon: int
    seed: int
    warmup: int | None = None
    trajectory_stride: int = 0  # 0 = auto (about 4096 samples)
    initial: NetworkState | None = None

    def __post_init__(self):
        errors = []
        if not isinstance(self.horizon, int) or self.horizon < 1:
            errors.append(f"horizon: must be a positive integer (got {self.horizon!r})")
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.horizon // 10)
        if not isinstance(self.warmup, int) or self.warmup < 0:
            errors.append(f"warmup: must be a nonnegative integer (got {self.warmup!r})")
        elif isinstance(self.horizon, int) and not self.horizon > self.warmup:
            errors.append(
                f"horizon: must exceed warmup (horizon={self.horizon}, warmup={self.warmup})"
            )
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2**64:
            errors.append(f"seed: must be an unsigned 64-bit integer (got {self.seed!r})")
        if not isinstance(self.trajectory_stride, int) or self.trajectory_stride < 0:
            errors.append("trajectory_stride: must be a nonnegative integer")
        if errors:
            raise ConfigError(errors)

    @property
    def stride(self):
        if self.trajectory_stride:
            return self.trajectory_stride
        return max(1, self.horizon // 4096)


def load_sim_config(source, **overrides) -> SimConfig:
    """Build a :class:`SimConfig` from the JSON configuration document,
    with keyword overrides taking precedence over document keys."""
    doc = read_config(source)
    params = load_network_params({k: v for k, v in doc.items() if k not in ("mode", "horizon", "seed", "warmup", "trajectory_stride", "grid", "seeds")})
    merged = dict(doc)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    errors = []
    mode_raw = merged.get("mode", SimMode.ORIGINAL)
    if isinstance(mode_raw, SimMode):
        mode = mode_raw
    else:
        try:
            mode = SimMode(str(mode_raw))
        except ValueError:
            valid = ", ".join(m.value for m in SimMode)
            errors.append(f"mode: expected one of {valid} (got {mode_raw!r})")
            mode = SimMode.ORIGINAL
    if "seed" not in merged or merged["seed"] is None:
        errors.append("seed: missing (set it in the config or pass --seed)")
    if errors:
        raise ConfigError(errors)
    return SimConfig(
        channel=params.channel,
        energy=params.energy,
        policy=params.policy,
        rates=params.rates,
        mode=mode,
        horizon=int(merged.get("horizon", 10**6)),
        seed=int(merged["seed"]),
        warmup=int(merged["warmup"]) if merged.get("warmup") is not None else None,
        trajectory_stride=int(merged.get("trajectory_stride", 0)),
    )


def make_streams(seed):
    """Nine independent generators derived from one master seed, in
    :data:`STREAM_NAMES` order."""
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in children)


@dataclass(frozen=True)
class SlotDraws:
    """One uniform variate per named stream for a single slot."""

    arrival_s: float
    arrival_r: float
    harvest_s: float
    harvest_r: float
    decide_s: float
    decide_r: float
    link_sd: float
    link_sr: float
    link_rd: float


@dataclass(frozen=True)
class SlotEvents:
    transmit_s: bool
    transmit_r: bool
    dummy_s: bool
    dummy_r: bool
    collision: bool
    delivered_direct: bool
    transferred: bool
    delivered_relay: bool
    arrival_s: bool
    arrival_r: bool
    harvest_s: bool
    harvest_r: bool
    service_s: bool
    service_r: bool
    active_s: bool
    active_r: bool


def step(state: NetworkState, cfg: SimConfig, draws: SlotDraws):
    """Advance one slot; returns the next state and what happened.

    Used for protocol-level inspection and as the reference implementation
    the optimized :func:`run` loop is checked against.
    """
    mode = cfg.mode
    always_s = mode in (SimMode.SOURCE_DOMINANT, SimMode.SATURATED)
    always_r = mode in (SimMode.RELAY_DOMINANT, SimMode.SATURATED)
    track_queues = mode is not SimMode.SATURATED

    q_s, q_r = state.q_s_len, state.q_r_len
    b_s, b_r = state.b_s_level, state.b_r_level
    qs_pos, qr_pos = q_s > 0, q_r > 0
    bs_ok, br_ok = b_s > 0, b_r > 0

    coin_s = draws.decide_s < cfg.policy.q_s
    coin_r = draws.decide_r < cfg.policy.q_r
    tx_s = bs_ok and coin_s and (always_s or qs_pos)
    tx_r = br_ok and coin_r and (always_r or qr_pos)
    ok_sd = draws.link_sd < cfg.channel.p_sd
    ok_sr = draws.link_sr < cfg.channel.p_sr
    ok_rd = draws.link_rd < cfg.channel.p_rd

    service_s = bs_ok and coin_s and not tx_r and (ok_sd or ok_sr)
    service_r = br_ok and coin_r and not tx_s and ok_rd

    collision = tx_s and tx_r
    delivered_direct = transferred = delivered_relay = False
    if tx_s:
        b_s -= 1
    if tx_r:
        b_r -= 1
    if tx_s and not tx_r and track_queues and qs_pos:
        if ok_sd:
            q_s -= 1
            delivered_direct = True
        elif ok_sr:
            q_s -= 1
            q_r += 1
            transferred = True
    if tx_r and not tx_s and track_queues and qr_pos and ok_rd:
        q_r -= 1
        delivered_relay = True

    arr_s = draws.arrival_s < cfg.rates.lambda_s
    arr_r = draws.arrival_r < cfg.rates.lambda_r
    if track_queues:
        if arr_s:
            q_s += 1
        if arr_r:
            q_r += 1
    hv_s = draws.harvest_s < cfg.energy.delta_s
    hv_r = draws.harvest_r < cfg.energy.delta_r
    if hv_s:
        b_s += 1
    if hv_r:
        b_r += 1

    new_state = NetworkState(q_s, q_r, b_s, b_r, state.slot_index + 1)
    events = SlotEvents(
        transmit_s=tx_s,
        transmit_r=tx_r,
        dummy_s=tx_s and not qs_pos,
        dummy_r=tx_r and not qr_pos,
        collision=collision,
        delivered_direct=delivered_direct,
        transferred=transferred,
        delivered_relay=delivered_relay,
        arrival_s=arr_s and track_queues,
        arrival_r=arr_r and track_queues,
        harvest_s=hv_s,
        harvest_r=hv_r,
        service_s=service_s,
        service_r=service_r,
        active_s=qs_pos and bs_ok,
        active_r=qr_pos and br_ok,
    )
    return new_state, events


@dataclass(frozen=True)
class SimMetrics:
    """Run measurements.

    Rates and occupancy probabilities average the post-warmup window; event
    counts cover the whole run so that the conservation identities hold
    exactly against the final state.
    """

    mode: SimMode
    horizon: int
    warmup: int
    seed: int
    measured_slots: int
    measured_mu_s: float
    measured_mu_r: float
    measured_lambda_s_to_r: float
    pr_bs_nonempty: float
    pr_br_nonempty: float
    pr_as: float
    pr_ar: float
    pr_bs_and_ar: float
    pr_bs_and_not_ar: float
    pr_br_and_as: float
    pr_br_and_not_as: float
    collisions: int
    direct_deliveries: int
    relayed_deliveries: int
    transfers_to_relay: int
    arrivals_source: int
    arrivals_relay: int
    attempts_source: int
    attempts_relay: int
    harvests_source: int
    harvests_relay: int
    initial_state: NetworkState
    final_state: NetworkState
    trajectory: tuple

    def scalar_dict(self):
        out = {}
        for name in (
            "horizon",
            "warmup",
            "seed",
            "measured_slots",
            "measured_mu_s",
            "measured_mu_r",
            "measured_lambda_s_to_r",
            "pr_bs_nonempty",
            "pr_br_nonempty",
            "pr_as",
            "pr_ar",
            "pr_bs_and_ar",
            "pr_bs_and_not_ar",
            "pr_br_and_as",
            "pr_br_and_not_as",
            "collisions",
            "direct_deliveries",
            "relayed_deliveries",
            "transfers_to_relay",
            "arrivals_source",
            "arrivals_relay",
            "attempts_source",
            "attempts_relay",
            "harvests_source",
            "harvests_relay",
        ):
            out[name] = getattr(self, name)
        out["mode"] = self.mode.value
        out["final_q_s"] = self.final_state.q_s_len
        out["final_q_r"] = self.final_state.q_r_len
        out["final_b_s"] = self.final_state.b_s_level
        out["final_b_r"] = self.final_state.b_r_level
        return out

    def to_json(self, target=None) -> str:
        text = json.dumps(self.scalar_dict(), indent=2, sort_keys=True) + "\n"
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w") as fh:
                    fh.write(text)
        return text

    def trajectory_csv(self, target=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["slot", "q_s", "q_r", "b_s", "b_r"])
        for row in self.trajectory:
            writer.writerow(row)
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w") as fh:
                    fh.write(text)
        return text


def run(cfg: SimConfig) -> SimMetrics:
    """Simulate ``cfg.horizon`` slots; identical config and seed give
    bit-identical metrics."""
    gens = make_streams(cfg.seed)
    lam_s = float(cfg.rates.lambda_s)
    lam_r = float(cfg.rates.lambda_r)
    del_s = float(cfg.energy.delta_s)
    del_r = float(cfg.energy.delta_r)
    q_s_prob = float(cfg.policy.q_s)
    q_r_prob = float(cfg.policy.q_r)
    p_sd = float(cfg.channel.p_sd)
    p_sr = float(cfg.channel.p_sr)
    p_rd = float(cfg.channel.p_rd)

    mode = cfg.mode
    always_s = mode in (SimMode.SOURCE_DOMINANT, SimMode.SATURATED)
    always_r = mode in (SimMode.RELAY_DOMINANT, SimMode.SATURATED)
    track = mode is not SimMode.SATURATED

    init = cfg.initial or NetworkState()
    q_s = init.q_s_len
    q_r = init.q_r_len
    b_s = init.b_s_level
    b_r = init.b_r_level

    c_bs = c_br = c_as = c_ar = c_bs_ar = c_br_as = 0
    c_svc_s = c_svc_r = 0
    c_coll = c_direct = c_xfer = c_xfer_virt = c_relay = 0
    c_arr_s = c_arr_r = c_att_s = c_att_r = c_hv_s = c_hv_r = 0

    stride = cfg.stride
    trajectory = []
    next_sample = 0
    snapshot = None

    t = 0
    for phase_end in (cfg.warmup, cfg.horizon):
        while t < phase_end:
            n = min(_CHUNK, phase_end - t)
            a_s = (gens[0].random(n) < lam_s).tolist()
            a_r = (gens[1].random(n) < lam_r).tolist()
            h_s = (gens[2].random(n) < del_s).tolist()
            h_r = (gens[3].random(n) < del_r).tolist()
            d_s = (gens[4].random(n) < q_s_prob).tolist()
            d_r = (gens[5].random(n) < q_r_prob).tolist()
            sd = (gens[6].random(n) < p_sd).tolist()
            sr = (gens[7].random(n) < p_sr).tolist()
            rd = (gens[8].random(n) < p_rd).tolist()
            for k in range(n):
                if t == next_sample:
                    trajectory.append((t, q_s, q_r, b_s, b_r))
                    next_sample += stride
                t += 1
                bs_ok = b_s > 0
                br_ok = b_r > 0
                qs_pos = q_s > 0
                qr_pos = q_r > 0
                if bs_ok:
                    c_bs += 1
                    if qs_pos:
                        c_as += 1
                ar = qr_pos and br_ok
                if ar:
                    c_ar += 1
                    if bs_ok:
                        c_bs_ar += 1
                if br_ok and qs_pos and bs_ok:
                    c_br_as += 1
                if br_ok:
                    c_br += 1
                coin_s = d_s[k]
                coin_r = d_r[k]
                tx_s = bs_ok and coin_s and (always_s or qs_pos)
                tx_r = br_ok and coin_r and (always_r or qr_pos)
                if bs_ok and coin_s and not tx_r and (sd[k] or sr[k]):
                    c_svc_s += 1
                if br_ok and coin_r and not tx_s and rd[k]:
                    c_svc_r += 1
                if tx_s:
                    b_s -= 1
                    c_att_s += 1
                    if tx_r:
                        b_r -= 1
                        c_att_r += 1
                        c_coll += 1
                    elif sd[k]:
                        if qs_pos and track:
                            q_s -= 1
                            c_direct += 1
                    elif sr[k]:
                        c_xfer_virt += 1
                        if qs_pos and track:
                            q_s -= 1
                            q_r += 1
                            c_xfer += 1
                elif tx_r:
                    b_r -= 1
                    c_att_r += 1
                    if rd[k] and qr_pos and track:
                        q_r -= 1
                        c_relay += 1
                if track:
                    if a_s[k]:
                        q_s += 1
                        c_arr_s += 1
                    if a_r[k]:
                        q_r += 1
                        c_arr_r += 1
                if h_s[k]:
                    b_s += 1
                    c_hv_s += 1
                if h_r[k]:
                    b_r += 1
                    c_hv_r += 1
        if snapshot is None:
            snapshot = (
                c_bs,
                c_br,
                c_as,
                c_ar,
                c_bs_ar,
                c_br_as,
                c_svc_s,
                c_svc_r,
                c_xfer,
                c_xfer_virt,
            )

    m = cfg.horizon - cfg.warmup
    (s_bs, s_br, s_as, s_ar, s_bs_ar, s_br_as, s_svc_s, s_svc_r, s_xfer, s_xv) = snapshot
    w_bs = c_bs - s_bs
    w_br = c_br - s_br
    w_bs_ar = c_bs_ar - s_bs_ar
    w_br_as = c_br_as - s_br_as
    xfer_rate = ((c_xfer - s_xfer) if track else (c_xfer_virt - s_xv)) / m

    final = NetworkState(q_s, q_r, b_s, b_r, cfg.horizon)
    return SimMetrics(
        mode=mode,
        horizon=cfg.horizon,
        warmup=cfg.warmup,
        seed=cfg.seed,
        measured_slots=m,
        measured_mu_s=(c_svc_s - s_svc_s) / m,
        measured_mu_r=(c_svc_r - s_svc_r) / m,
        measured_lambda_s_to_r=xfer_rate,
        pr_bs_nonempty=w_bs / m,
        pr_br_nonempty=w_br / m,
        pr_as=(c_as - s_as) / m,
        pr_ar=(c_ar - s_ar) / m,
        pr_bs_and_ar=w_bs_ar / m,
        pr_bs_and_not_ar=(w_bs - w_bs_ar) / m,
        pr_br_and_as=w_br_as / m,
        pr_br_and_not_as=(w_br - w_br_as) / m,
        collisions=c_coll,
        direct_deliveries=c_direct,
        relayed_deliveries=c_relay,
        transfers_to_relay=c_xfer,
        arrivals_source=c_arr_s,
        arrivals_relay=c_arr_r,
        attempts_source=c_att_s,
        attempts_relay=c_att_r,
        harvests_source=c_hv_s,
        harvests_relay=c_hv_r,
        initial_state=init,
        final_state=final,
        trajectory=tuple(trajectory),
    )


def fit_slope(trajectory, column, start_slot=0):
    """Least-squares growth rate (units per slot) of one trajectory column
    over samples at or after ``start_slot``."""
    pts = [(row[0], row[column]) for row in trajectory if row[0] >= start_slot]
    if len(pts) < 2:
        return 0.0
    xs = np.asarray([p[0] for p in pts], dtype=float)
    ys = np.asarray([p[1] for p in pts], dtype=float)
    xm = xs - xs.mean()
    denom = float(xm @ xm)
    if denom == 0:
        return 0.0
    return float(xm @ (ys - ys.mean()) / denom)


@dataclass(frozen=True)
class ServiceIdentityReport:
    predicted_mu_s: float
    predicted_mu_r: float
    measured_mu_s: float
    measured_mu_r: float

    @property
    def residual_s(self):
        return abs(self.predicted_mu_s - self.measured_mu_s)

    @property
    def residual_r(self):
        return abs(self.predicted_mu_r - self.measured_mu_r)


def measure_service_identities(
    metrics: SimMetrics, cfg: SimConfig, screen_slope=1e-3
) -> ServiceIdentityReport:
    """Plug the measured joint occupancies into the closed-form service
    rates and report the residuals against the measured rates.

    Only meaningful in the original mode with both queues empirically
    stable; an unstable trajectory raises :class:`UnstableRunError`.
    """
    if metrics.mode is not SimMode.ORIGINAL:
        raise ValueError("service-rate identities require an original-mode run")
    for column, name in ((1, "source"), (2, "relay")):
        slope = fit_slope(metrics.trajectory, column, start_slot=metrics.warmup)
        if slope > screen_slope:
            raise UnstableRunError(
                f"{name} queue grows at {slope:.2e} packets/slot; "
                "the identities only hold in steady state"
            )
    agg = float(success_aggregate(cfg.channel))
    q_s = float(cfg.policy.q_s)
    q_r = float(cfg.policy.q_r)
    pred_s = q_s * agg * (
        (1 - q_r) * metrics.pr_bs_and_ar + metrics.pr_bs_and_not_ar
    )
    pred_r = q_r * float(cfg.channel.p_rd) * (
        (1 - q_s) * metrics.pr_br_and_as + metrics.pr_br_and_not_as
    )
    return ServiceIdentityReport(
        pred_s, pred_r, metrics.measured_mu_s, metrics.measured_mu_r
    )
