import inspect
from fractions import Fraction
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ehrelay as er
from ehrelay.errors import (
    DegenerateChannelError,
    DegenerateParameterError,
    UnstableOccupancyError,
)

CH = er.ChannelParams(0.2, 0.6, 0.5)
EN = er.EnergyParams(0.5, 0.6)
POL = er.AccessPolicy(0.3, 0.4)
RATES = er.RatePoint(0.05, 0.10)

unit = st.floats(0, 1, allow_nan=False)


@st.composite
def channels(draw):
    p_sd = draw(st.floats(0, 0.95))
    p_rd = draw(st.floats(p_sd, 1, exclude_min=True))
    p_sr = draw(unit)
    return er.ChannelParams(p_sd, p_rd, p_sr)


def test_success_aggregate_example():
    assert er.success_aggregate(CH) == pytest.approx(0.6, abs=1e-12)


def test_success_aggregate_certain_direct_delivery():
    # limit p_sd = 1 sits outside the p_rd > p_sd type invariant, so probe
    # the formula through a bare attribute bundle
    assert er.success_aggregate(SimpleNamespace(p_sd=1, p_sr=0.3)) == 1


def test_success_aggregate_dead_channel():
    assert er.success_aggregate(SimpleNamespace(p_sd=0, p_sr=0)) == 0


def test_relay_fraction_example():
    assert er.relay_fraction(CH) == pytest.approx(2 / 3, abs=1e-12)


def test_relay_fraction_exact_with_fractions():
    ch = er.ChannelParams(Fraction(1, 5), Fraction(3, 5), Fraction(1, 2))
    assert er.relay_fraction(ch) == Fraction(2, 3)


def test_relay_fraction_all_via_relay():
    assert er.relay_fraction(er.ChannelParams(0.0, 0.6, 0.5)) == 1


def test_relay_fraction_relay_never_decodes():
    assert er.relay_fraction(er.ChannelParams(0.2, 0.6, 0.0)) == 0


def test_relay_fraction_degenerate_channel():
    with pytest.raises(DegenerateChannelError):
        er.relay_fraction(SimpleNamespace(p_sd=0, p_sr=0))


def test_relay_fraction_takes_only_the_channel():
    assert list(inspect.signature(er.relay_fraction).parameters) == ["ch"]


def test_relay_total_arrival_example():
    total = er.relay_total_arrival(er.RatePoint(0.09, 0.10), CH)
    assert total == pytest.approx(0.16, abs=1e-12)


def test_relay_total_arrival_no_source_traffic():
    assert er.relay_total_arrival(er.RatePoint(0.0, 0.3), CH) == pytest.approx(0.3)


def test_relay_total_arrival_all_relayed():
    ch = er.ChannelParams(0.0, 0.6, 1.0)
    assert er.relay_total_arrival(er.RatePoint(0.12, 0.0), ch) == pytest.approx(0.12)


@pytest.mark.parametrize(
    "delta,q,expected",
    [(0.3, 0.5, 0.6), (0.5, 0.5, 1), (0.0, 0.2, 0), (0.2, 0.0, 1), (0.0, 0.0, 0)],
)
def test_battery_nonempty_prob(delta, q, expected):
    assert er.battery_nonempty_prob(delta, q) == pytest.approx(expected)


def test_saturated_throughput_example():
    mu = er.saturated_throughput(CH, EN, POL)
    assert mu.mu_s == pytest.approx(0.108, abs=1e-12)
    assert mu.mu_r == pytest.approx(0.168, abs=1e-12)


def test_saturated_throughput_inactive_source():
    mu = er.saturated_throughput(CH, EN, er.AccessPolicy(0.0, 0.4))
    assert mu.mu_s == 0
    assert mu.mu_r == pytest.approx(0.4 * 0.6, abs=1e-12)


def test_saturated_throughput_all_slots_collide():
    mu = er.saturated_throughput(CH, er.EnergyParams(1, 1), er.AccessPolicy(1, 1))
    assert (mu.mu_s, mu.mu_r) == (0, 0)


def test_hypo_active_fraction_relay_example():
    frac = er.hypo_active_fraction_relay(RATES, CH, EN, POL)
    assert frac == pytest.approx(50 / 63, abs=1e-12)


def test_hypo_active_fraction_relay_idle_network():
    assert er.hypo_active_fraction_relay(er.RatePoint(0, 0), CH, EN, POL) == 0


def test_hypo_active_fraction_relay_saturation_boundary():
    # total relay arrivals exactly equal to the per-slot departure rate
    rates = er.RatePoint(0.0, 0.168)
    assert er.hypo_active_fraction_relay(rates, CH, EN, POL) == pytest.approx(1.0)


def test_hypo_active_fraction_relay_unstable():
    with pytest.raises(UnstableOccupancyError):
        er.hypo_active_fraction_relay(er.RatePoint(0.3, 0.3), CH, EN, POL)


def test_hypo_active_fraction_relay_degenerate():
    with pytest.raises(DegenerateParameterError):
        er.hypo_active_fraction_relay(RATES, CH, EN, er.AccessPolicy(0.3, 0.0))


def test_hypo_active_fraction_source_example():
    frac = er.hypo_active_fraction_source(RATES, CH, EN, POL)
    assert frac == pytest.approx(25 / 54, abs=1e-12)


def test_hypo_active_fraction_source_trivial_cases():
    assert er.hypo_active_fraction_source(er.RatePoint(0, 0.2), CH, EN, POL) == 0
    rates = er.RatePoint(0.108, 0.0)
    assert er.hypo_active_fraction_source(rates, CH, EN, POL) == pytest.approx(1.0)


def test_hypo_active_fraction_source_degenerate():
    with pytest.raises(DegenerateParameterError):
        er.hypo_active_fraction_source(RATES, CH, EN, er.AccessPolicy(0.0, 0.4))


@given(channels(), unit, unit)
def test_success_aggregate_monotone(ch, bump_sd, bump_sr):
    base = er.success_aggregate(ch)
    ns = SimpleNamespace(p_sd=min(1, ch.p_sd + bump_sd), p_sr=ch.p_sr)
    assert er.success_aggregate(ns) >= base - 1e-12
    ns = SimpleNamespace(p_sd=ch.p_sd, p_sr=min(1, ch.p_sr + bump_sr))
    assert er.success_aggregate(ns) >= base - 1e-12


@given(channels())
def test_success_aggregate_reduces_to_direct(ch):
    ns = SimpleNamespace(p_sd=ch.p_sd, p_sr=0.0)
    assert er.success_aggregate(ns) == ch.p_sd


@given(channels())
def test_relay_fraction_is_a_probability(ch):
    try:
        frac = er.relay_fraction(ch)
    except DegenerateChannelError:
        return
    assert 0 <= frac <= 1


@given(st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False))
def test_battery_never_empty_when_harvest_dominates(delta, q):
    if delta >= q > 0:
        assert er.battery_nonempty_prob(delta, q) == 1


@given(channels(), unit, unit, unit, unit)
def test_saturated_throughput_clamps_access(ch, d_s, d_r, q_s, q_r):
    en = er.EnergyParams(d_s, d_r)
    raw = er.saturated_throughput(ch, en, er.AccessPolicy(q_s, q_r))
    clamped = er.saturated_throughput(
        ch, en, er.AccessPolicy(min(q_s, d_s), min(q_r, d_r))
    )
    assert raw == clamped


@given(channels(), unit, unit, unit, unit)
def test_saturated_throughput_total_is_bounded(ch, d_s, d_r, q_s, q_r):
    mu = er.saturated_throughput(ch, er.EnergyParams(d_s, d_r), er.AccessPolicy(q_s, q_r))
    total = mu.mu_s + mu.mu_r
    assert 0 <= total <= max(er.success_aggregate(ch), ch.p_rd) + 1e-12
