import csv
import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ehrelay as er
from ehrelay.errors import DegenerateParameterError

CH = er.ChannelParams(0.2, 0.6, 0.5)
EN = er.EnergyParams(0.5, 0.6)
POL = er.AccessPolicy(0.3, 0.4)
SPEC = er.RegionSpec(CH, EN, POL)

fracs = st.fractions(min_value=0, max_value=1, max_denominator=64)


@st.composite
def specs(draw, exact=False):
    number = fracs if exact else st.floats(0, 1, allow_nan=False)
    p_sd = draw(number)
    p_rd = draw(number)
    if not p_rd > p_sd:
        p_sd, p_rd = p_rd, p_sd
    if p_rd == p_sd:
        if p_rd < 1:
            p_rd = p_rd + Fraction(1, 128) if exact else min(1.0, p_rd + 0.01)
        else:
            p_sd = p_sd - Fraction(1, 128) if exact else max(0.0, p_sd - 0.01)
    ch = er.ChannelParams(p_sd, p_rd, draw(number))
    en = er.EnergyParams(draw(number), draw(number))
    pol = er.AccessPolicy(draw(number), draw(number))
    return er.RegionSpec(ch, en, pol)


@st.composite
def points(draw, exact=False):
    number = fracs if exact else st.floats(0, 1, allow_nan=False)
    return er.RatePoint(draw(number), draw(number))


# independent re-derivations, written from the pre-rearrangement stability
# conditions of the two dominant systems


def raw_r1(p, spec):
    m_s, m_r = spec.clamped
    if m_s == 1:
        raise DegenerateParameterError("m_s = 1")
    alpha = er.success_aggregate(spec.ch)
    if alpha == 0:
        return False  # no departure is ever possible, lambda_s < 0 fails
    total = er.relay_total_arrival(p, spec.ch)
    relay_ok = total < m_r * (1 - m_s) * spec.ch.p_rd
    mu_s = m_s * (1 - total / ((1 - m_s) * spec.ch.p_rd)) * alpha
    return p.lambda_s < mu_s and relay_ok


def raw_r2(p, spec):
    m_s, m_r = spec.clamped
    if m_r == 1:
        raise DegenerateParameterError("m_r = 1")
    alpha = er.success_aggregate(spec.ch)
    if alpha == 0:
        return False
    source_ok = p.lambda_s < m_s * (1 - m_r) * alpha
    mu_r = m_r * (1 - p.lambda_s / ((1 - m_r) * alpha)) * spec.ch.p_rd
    relay_ok = er.relay_total_arrival(p, spec.ch) < mu_r
    return source_ok and relay_ok


def test_inner_contains_examples():
    assert er.inner_contains(er.RatePoint(0.05, 0.10), SPEC)
    assert not er.inner_contains(er.RatePoint(0.12, 0.0), SPEC)
    assert er.inner_contains(er.RatePoint(0.0, 0.0), SPEC)


def test_r1_contains_examples():
    assert er.r1_contains(er.RatePoint(0.05, 0.10), SPEC)
    assert not er.r1_contains(er.RatePoint(0.3, 0.3), SPEC)
    assert er.r1_contains(er.RatePoint(0.0, 0.0), SPEC)


def test_r2_contains_examples():
    assert er.r2_contains(er.RatePoint(0.05, 0.10), SPEC)
    assert not er.r2_contains(er.RatePoint(0.3, 0.3), SPEC)
    assert er.r2_contains(er.RatePoint(0.0, 0.0), SPEC)


def test_outer_contains_examples():
    assert er.outer_contains(er.RatePoint(0.05, 0.10), SPEC)
    assert not er.outer_contains(er.RatePoint(0.3, 0.3), SPEC)


def test_outer_contains_point_taken_by_second_subregion_only():
    # relay line still has room: 0.16 + (4/3) 0.05 < 0.24, source cut holds;
    # confirmed against the pre-rearrangement service-rate form below
    p = er.RatePoint(Fraction(1, 20), Fraction(4, 25))
    exact = er.RegionSpec(
        er.ChannelParams(Fraction(1, 5), Fraction(3, 5), Fraction(1, 2)),
        er.EnergyParams(Fraction(1, 2), Fraction(3, 5)),
        er.AccessPolicy(Fraction(3, 10), Fraction(2, 5)),
    )
    assert not er.r1_contains(p, exact)
    assert er.r2_contains(p, exact)
    assert raw_r2(p, exact)
    assert er.outer_contains(p, exact)


def test_degenerate_subregions():
    full = er.RegionSpec(CH, er.EnergyParams(1.0, 1.0), er.AccessPolicy(1.0, 1.0))
    with pytest.raises(DegenerateParameterError):
        er.r1_contains(er.RatePoint(0.1, 0.1), full)
    with pytest.raises(DegenerateParameterError):
        er.r2_contains(er.RatePoint(0.1, 0.1), full)
    # union treats degenerate sub-regions as empty
    assert not er.outer_contains(er.RatePoint(0.1, 0.1), full)


@settings(max_examples=300)
@given(specs(exact=True), points(exact=True))
def test_membership_matches_raw_rederivation(spec, p):
    try:
        assert er.r1_contains(p, spec) == raw_r1(p, spec)
    except DegenerateParameterError:
        pass
    try:
        assert er.r2_contains(p, spec) == raw_r2(p, spec)
    except DegenerateParameterError:
        pass


@settings(max_examples=300)
@given(specs(), points())
def test_inner_implies_outer(spec, p):
    if er.inner_contains(p, spec):
        assert er.outer_contains(p, spec)


@settings(max_examples=200)
@given(specs(), points(), st.floats(0, 1), st.floats(0, 1))
def test_memberships_are_downward_closed(spec, p, shrink_s, shrink_r):
    smaller = er.RatePoint(p.lambda_s * shrink_s, p.lambda_r * shrink_r)
    for member in (er.inner_contains, er.r1_contains, er.r2_contains):
        try:
            if member(p, spec):
                assert member(smaller, spec)
        except DegenerateParameterError:
            pass


@settings(max_examples=200)
@given(specs(), points())
def test_memberships_ignore_access_above_harvest(spec, p):
    m_s, m_r = spec.clamped
    clamped = er.RegionSpec(spec.ch, spec.en, er.AccessPolicy(m_s, m_r))
    for member in (er.inner_contains, er.r1_contains, er.r2_contains, er.outer_contains):
        try:
            original = member(p, spec)
        except DegenerateParameterError:
            original = DegenerateParameterError
        try:
            reduced = member(p, clamped)
        except DegenerateParameterError:
            reduced = DegenerateParameterError
        assert original == reduced


def test_inner_boundary_corner():
    poly = er.inner_boundary(SPEC)
    verts = [(v.lambda_s, v.lambda_r) for v in poly.vertices]
    assert verts[0] == pytest.approx((0.0, 0.168), abs=1e-12)
    assert verts[1] == pytest.approx((0.108, 0.096), abs=1e-12)
    assert verts[2] == pytest.approx((0.108, 0.0), abs=1e-12)
    assert poly.segments == ("inner_relay", "inner_source")


def test_inner_boundary_silent_source():
    spec = er.RegionSpec(CH, EN, er.AccessPolicy(0.0, 0.4))
    poly = er.inner_boundary(spec)
    verts = [(v.lambda_s, v.lambda_r) for v in poly.vertices]
    assert verts == [(0.0, pytest.approx(0.24)), (0.0, 0.0)]


def test_boundaries_empty_when_nobody_transmits():
    spec = er.RegionSpec(CH, EN, er.AccessPolicy(0.0, 0.0))
    assert er.inner_boundary(spec).is_empty()
    assert er.outer_boundary(spec).is_empty()


def test_outer_boundary_standard_spec():
    poly = er.outer_boundary(SPEC)
    verts = [(v.lambda_s, v.lambda_r) for v in poly.vertices]
    assert verts[0] == pytest.approx((0.0, 0.24), abs=1e-12)
    assert verts[1] == pytest.approx((0.108, 0.096), abs=1e-9)
    assert verts[-1] == pytest.approx((0.14, 0.0), abs=1e-9)


def _poly_value(poly, x):
    best = None
    for a, b in zip(poly.vertices[:-1], poly.vertices[1:]):
        if a.lambda_s <= x <= b.lambda_s:
            if b.lambda_s == a.lambda_s:
                value = max(a.lambda_r, b.lambda_r)
            else:
                t = (x - a.lambda_s) / (b.lambda_s - a.lambda_s)
                value = a.lambda_r + t * (b.lambda_r - a.lambda_r)
            best = value if best is None else max(best, value)
    return best


@settings(max_examples=150, deadline=None)
@given(specs())
def test_union_envelope_dominates_both_subregions(spec):
    from ehrelay.regions import _polyline_from_sub, _r1_sub, _r2_sub

    envelope = er.outer_boundary(spec)
    if envelope.is_empty():
        assert _polyline_from_sub(_r1_sub(spec)).is_empty()
        assert _polyline_from_sub(_r2_sub(spec)).is_empty()
        return
    xs = np.linspace(0, envelope.vertices[-1].lambda_s, 23)
    for sub in (_polyline_from_sub(_r1_sub(spec)), _polyline_from_sub(_r2_sub(spec))):
        if sub.is_empty():
            continue
        for x in xs:
            low = _poly_value(sub, x)
            high = _poly_value(envelope, x)
            if low is not None:
                assert high is not None and high >= low - 1e-9


@settings(max_examples=100, deadline=None)
@given(specs())
def test_envelope_consistent_with_membership(spec):
    poly = er.outer_boundary(spec)
    if poly.is_empty():
        return
    for a, b in zip(poly.vertices[:-1], poly.vertices[1:]):
        mid_x = (a.lambda_s + b.lambda_s) / 2
        mid_y = _poly_value(poly, mid_x)
        if mid_y is None or mid_y <= 1e-7 or mid_x <= 0:
            continue
        inside = er.RatePoint(mid_x, max(mid_y - 1e-7, 0.0))
        outside = er.RatePoint(mid_x, min(mid_y + 1e-7, 1.0))
        assert er.outer_contains(inside, spec)
        assert not er.outer_contains(outside, spec)


def test_polyline_vertices_monotone():
    for spec in (SPEC, er.RegionSpec(CH, er.EnergyParams(0.9, 0.2), er.AccessPolicy(0.8, 0.9))):
        for poly in (er.inner_boundary(spec), er.outer_boundary(spec)):
            xs = [v.lambda_s for v in poly.vertices]
            ys = [v.lambda_r for v in poly.vertices]
            assert xs == sorted(xs)
            assert ys == sorted(ys, reverse=True)
            assert all(0 <= x <= 1 and 0 <= y <= 1 for x, y in zip(xs, ys))


def test_polyline_csv_round_trip():
    text = er.inner_boundary(SPEC).to_csv()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["active_constraint"] for r in rows] == [
        "inner_relay",
        "inner_source",
        "inner_source",
    ]
    assert float(rows[1]["lambda_s"]) == pytest.approx(0.108)
    assert float(rows[1]["lambda_r"]) == pytest.approx(0.096)
