"""Closed-form scalar quantities of the relay model.

Everything here is a pure function of its arguments; no shared state, safe
under arbitrary concurrency.  Arithmetic is plain field arithmetic, so exact
inputs (``fractions.Fraction``) produce exact outputs.
"""

from __future__ import annotations

from .errors import (
    DegenerateChannelError,
    DegenerateParameterError,
    UnstableOccupancyError,
)
from .params import (
    AccessPolicy,
    ChannelParams,
    EnergyParams,
    RatePoint,
    ThroughputPair,
)

# slack for validity checks done in floating point
FLOAT_TOL = 1e-9


def success_aggregate(ch: ChannelParams):
    """Probability that a solo source transmission leaves the source queue.

    The destination decodes directly, or the relay captures what the
    destination missed: ``p_sd + (1 - p_sd) * p_sr``.
    """
    return ch.p_sd + (1 - ch.p_sd) * ch.p_sr


def relay_fraction(ch: ChannelParams):
    """Fraction of departing source packets that enter the relay queue.

    Conditional on a departure: ``(1 - p_sd) * p_sr / success_aggregate``.
    Depends only on the channel, never on transmit probabilities or
    harvesting rates.
    """
    agg = success_aggregate(ch)
    if agg == 0:
        raise DegenerateChannelError(
            "no source packet can ever depart (p_sd = p_sr = 0); "
            "the relayed fraction conditions on a zero-probability event"
        )
    return (1 - ch.p_sd) * ch.p_sr / agg


def relay_total_arrival(rates: RatePoint, ch: ChannelParams):
    """Total packet arrival rate at the relay: exogenous plus relayed.

    ``lambda_r + relay_fraction * lambda_s``; independent of the access
    policy and of the harvesting rates.
    """
    return rates.lambda_r + relay_fraction(ch) * rates.lambda_s


def battery_nonempty_prob(delta, q):
    """Stationary probability that a battery holds at least one energy unit.

    ``min(delta / q, 1)`` for a node attempting transmission with
    probability ``q`` and harvesting at rate ``delta``.  At q = 0 the ratio
    is undefined; the battery is never drained, so the probability is 1
    whenever any energy arrives and 0 otherwise.
    """
    if q == 0:
        return 1 if delta > 0 else 0
    return min(delta / q, 1)


def saturated_throughput(
    ch: ChannelParams, en: EnergyParams, pol: AccessPolicy
) -> ThroughputPair:
    """Throughput pair when both packet queues always have something to send.

    mu_s = min(delta_s, q_s) * (1 - min(delta_r, q_r)) * success_aggregate
    mu_r = min(delta_r, q_r) * (1 - min(delta_s, q_s)) * p_rd
    """
    m_s = min(en.delta_s, pol.q_s)
    m_r = min(en.delta_r, pol.q_r)
    mu_s = m_s * (1 - m_r) * success_aggregate(ch)
    mu_r = m_r * (1 - m_s) * ch.p_rd
    return ThroughputPair(mu_s, mu_r)


def hypo_active_fraction_relay(
    rates: RatePoint, ch: ChannelParams, en: EnergyParams, pol: AccessPolicy
):
    """Fraction of slots with the relay active in the hypothetical system
    where the source always transmits (dummies when its queue is empty).

    Equals total relay arrivals divided by the per-active-slot departure
    rate ``(1 - min(delta_s, q_s)) * q_r * p_rd``.
    """
    m_s = min(en.delta_s, pol.q_s)
    denom = (1 - m_s) * pol.q_r * ch.p_rd
    if denom == 0:
        raise DegenerateParameterError(
            "relay never departs a packet in the source-dominant system "
            f"((1 - min(delta_s, q_s)) * q_r * p_rd = {denom})"
        )
    frac = relay_total_arrival(rates, ch) / denom
    if frac > 1 + FLOAT_TOL:
        raise UnstableOccupancyError(
            f"relay queue unstable in the source-dominant system "
            f"(occupancy fraction {frac} > 1)"
        )
    return min(frac, 1)


def hypo_active_fraction_source(
    rates: RatePoint, ch: ChannelParams, en: EnergyParams, pol: AccessPolicy
):
    """Source analogue of :func:`hypo_active_fraction_relay`, for the system
    where the relay always transmits; denominator
    ``q_s * (1 - min(delta_r, q_r)) * success_aggregate``."""
    m_r = min(en.delta_r, pol.q_r)
    denom = pol.q_s * (1 - m_r) * success_aggregate(ch)
    if denom == 0:
        raise DegenerateParameterError(
            "source never departs a packet in the relay-dominant system "
            f"(q_s * (1 - min(delta_r, q_r)) * success_aggregate = {denom})"
        )
    frac = rates.lambda_s / denom
    if frac > 1 + FLOAT_TOL:
        raise UnstableOccupancyError(
            f"source queue unstable in the relay-dominant system "
            f"(occupancy fraction {frac} > 1)"
        )
    return min(frac, 1)
