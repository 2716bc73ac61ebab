"""Membership tests and boundary polylines for the stability-region bounds
at a fixed access policy.

Two regions are exposed: the sufficient-condition (inner) region obtained
from saturated throughputs, and the necessary-condition (outer) region,
which is the union of the two dominant-system regions.  All membership
comparisons are strict: a point exactly on a boundary is classified
outside.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .errors import DegenerateParameterError
from .formulas import (
    relay_fraction,
    relay_total_arrival,
    saturated_throughput,
    success_aggregate,
)
from .params import AccessPolicy, ChannelParams, EnergyParams, RatePoint

_EPS = 1e-12


@dataclass(frozen=True)
class RegionSpec:
    """Parameters that pin down one stability region."""

    ch: ChannelParams
    en: EnergyParams
    pol: AccessPolicy

    @property
    def clamped(self):
        """Effective transmit probabilities min(delta, q) per node."""
        return (
            min(self.en.delta_s, self.pol.q_s),
            min(self.en.delta_r, self.pol.q_r),
        )


@dataclass(frozen=True)
class BoundaryPolyline:
    """Ordered boundary vertices plus the active constraint per segment.

    ``segments[i]`` names the constraint active between ``vertices[i]`` and
    ``vertices[i + 1]``.  Vertices run left to right with nonincreasing
    lambda_r.
    """

    vertices: tuple[RatePoint, ...]
    segments: tuple[str, ...]

    def __post_init__(self):
        if self.vertices and len(self.segments) != len(self.vertices) - 1:
            raise ValueError("need exactly one tag per segment")

    def is_empty(self):
        return not self.vertices

    def to_csv(self, target=None) -> str:
        """Serialize as CSV with columns lambda_s, lambda_r, active_constraint.

        Each row carries the tag of the segment leaving that vertex; the
        final vertex repeats the tag of the segment arriving at it.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lambda_s", "lambda_r", "active_constraint"])
        for i, v in enumerate(self.vertices):
            if i < len(self.segments):
                tag = self.segments[i]
            elif self.segments:
                tag = self.segments[-1]
            else:
                tag = ""
            writer.writerow([repr(float(v.lambda_s)), repr(float(v.lambda_r)), tag])
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w") as fh:
                    fh.write(text)
        return text


# ---------------------------------------------------------------------------
# membership


def inner_contains(p: RatePoint, spec: RegionSpec) -> bool:
    """Sufficient condition: the source arrival rate and the total relay
    arrival rate both sit strictly below the saturated throughputs."""
    mu = saturated_throughput(spec.ch, spec.en, spec.pol)
    if not (p.lambda_s < mu.mu_s):
        return False
    return relay_total_arrival(p, spec.ch) < mu.mu_r


def r1_contains(p: RatePoint, spec: RegionSpec) -> bool:
    """Necessary conditions derived from the system where the source sends
    dummy packets whenever its queue is empty."""
    ch = spec.ch
    m_s, m_r = spec.clamped
    if m_s == 1:
        raise DegenerateParameterError(
            "source-dominant region undefined at min(delta_s, q_s) = 1"
        )
    alpha = success_aggregate(ch)
    beta = (1 - ch.p_sd) * ch.p_sr
    rel = (1 - m_s) * ch.p_rd
    weighted = (1 + m_s * beta / rel) * p.lambda_s + (m_s * alpha / rel) * p.lambda_r
    if not (weighted < m_s * alpha):
        return False
    return relay_total_arrival(p, ch) < m_r * rel


def r2_contains(p: RatePoint, spec: RegionSpec) -> bool:
    """Necessary conditions derived from the system where the relay sends
    dummy packets whenever its queue is empty."""
    ch = spec.ch
    m_s, m_r = spec.clamped
    if m_r == 1:
        raise DegenerateParameterError(
            "relay-dominant region undefined at min(delta_r, q_r) = 1"
        )
    alpha = success_aggregate(ch)
    if not (p.lambda_s < m_s * (1 - m_r) * alpha):
        return False
    beta = (1 - ch.p_sd) * ch.p_sr
    coeff = ((1 - m_r) * beta + m_r * ch.p_rd) / ((1 - m_r) * alpha)
    return p.lambda_r + coeff * p.lambda_s < m_r * ch.p_rd


def outer_contains(p: RatePoint, spec: RegionSpec) -> bool:
    """Union of the two dominant-system regions; a degenerate sub-region
    counts as empty."""
    try:
        if r1_contains(p, spec):
            return True
    except DegenerateParameterError:
        pass
    try:
        return r2_contains(p, spec)
    except DegenerateParameterError:
        return False


# ---------------------------------------------------------------------------
# boundary polylines
#
# Each sub-region is the set under a lower envelope of decreasing lines,
# optionally cut by a vertical constraint.  A sub-boundary is kept as a list
# of linear pieces on [0, x_end] plus the tag of whatever terminates it.


@dataclass(frozen=True)
class _Piece:
    x_lo: float
    x_hi: float
    slope: float
    intercept: float
    tag: str

    def y(self, x):
        return self.intercept + self.slope * x


@dataclass(frozen=True)
class _SubBoundary:
    pieces: tuple[_Piece, ...]
    end_tag: str  # tag of the terminal vertical drop, "" if it ends at y = 0

    @property
    def x_end(self):
        return self.pieces[-1].x_hi if self.pieces else 0.0

    def value(self, x):
        """Envelope value at x, or None outside [0, x_end]."""
        if not self.pieces or x < -_EPS or x > self.x_end + _EPS:
            return None
        for piece in self.pieces:
            if x <= piece.x_hi + _EPS:
                return piece.y(x)
        return self.pieces[-1].y(x)

    def tag_at(self, x):
        for piece in self.pieces:
            if x <= piece.x_hi:
                return piece.tag
        return self.pieces[-1].tag


def _lower_envelope(lines, x_cut=None, cut_tag="") -> _SubBoundary:
    """Sub-boundary for lines ``(slope, intercept, tag)`` with slopes <= 0,
    valid from 0 until the envelope hits zero or reaches the vertical cut."""
    # a decreasing line that starts at or below zero empties the region
    if not lines or any(ln[1] <= 0 for ln in lines):
        return _SubBoundary((), "")
    crossings = [-c / m for m, c, _ in lines if m < 0]
    x_zero = min(crossings) if crossings else None
    if x_cut is not None and (x_zero is None or x_cut < x_zero):
        x_end, end_tag = x_cut, cut_tag
    elif x_zero is not None:
        x_end, end_tag = x_zero, ""
    else:
        return _SubBoundary((), "")
    if x_end <= 0:
        return _SubBoundary((), "")

    xs = {0.0, float(x_end)}
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            m1, c1, _ = lines[i]
            m2, c2, _ = lines[j]
            if m1 == m2:
                continue
            x = (c2 - c1) / (m1 - m2)
            if 0 < x < x_end:
                xs.add(float(x))
    xs = sorted(xs)
    pieces = []
    for a, b in zip(xs[:-1], xs[1:]):
        mid = (a + b) / 2
        m, c, tag = min(lines, key=lambda ln: ln[1] + ln[0] * mid)
        if pieces and pieces[-1].tag == tag and pieces[-1].slope == m:
            pieces[-1] = _Piece(pieces[-1].x_lo, b, m, c, tag)
        else:
            pieces.append(_Piece(a, b, float(m), float(c), tag))
    return _SubBoundary(tuple(pieces), end_tag)


def _clip01(v):
    return min(max(float(v), 0.0), 1.0)


def _polyline_from_sub(sub: _SubBoundary) -> BoundaryPolyline:
    if not sub.pieces:
        return BoundaryPolyline((), ())
    verts = [RatePoint(0.0, _clip01(sub.pieces[0].y(0.0)))]
    tags = []
    for piece in sub.pieces:
        verts.append(RatePoint(piece.x_hi, _clip01(piece.y(piece.x_hi))))
        tags.append(piece.tag)
    if verts[-1].lambda_r > _EPS:
        tags.append(sub.end_tag or sub.pieces[-1].tag)
        verts.append(RatePoint(verts[-1].lambda_s, 0.0))
    return BoundaryPolyline(tuple(verts), tuple(tags))


def inner_boundary(spec: RegionSpec) -> BoundaryPolyline:
    """Exact inner-bound boundary: a slanted relay-service line cut by the
    vertical source-service line."""
    mu = saturated_throughput(spec.ch, spec.en, spec.pol)
    a, b = float(mu.mu_s), float(mu.mu_r)
    if a == 0 and b == 0:
        return BoundaryPolyline((), ())
    if a == 0:
        # no source service: the bound collapses onto the lambda_r axis
        return BoundaryPolyline(
            (RatePoint(0.0, b), RatePoint(0.0, 0.0)), ("inner_source",)
        )
    frac = float(relay_fraction(spec.ch))
    sub = _lower_envelope(
        [(-frac, b, "inner_relay")], x_cut=a, cut_tag="inner_source"
    )
    return _polyline_from_sub(sub)


def _r1_sub(spec: RegionSpec) -> _SubBoundary:
    ch = spec.ch
    m_s, m_r = (float(v) for v in spec.clamped)
    if m_s in (0.0, 1.0) or m_r == 0.0:
        return _SubBoundary((), "")
    alpha = float(success_aggregate(ch))
    if alpha == 0:
        return _SubBoundary((), "")
    beta = float((1 - ch.p_sd) * ch.p_sr)
    rel = (1 - m_s) * float(ch.p_rd)
    if rel == 0:
        return _SubBoundary((), "")
    a1 = 1 + m_s * beta / rel
    b1 = m_s * alpha / rel
    if b1 == 0:  # underflow: the region is a zero-width sliver
        return _SubBoundary((), "")
    return _lower_envelope(
        [
            (-a1 / b1, m_s * alpha / b1, "r1_mixed"),
            (-beta / alpha, m_r * rel, "r1_relay"),
        ]
    )


def _r2_sub(spec: RegionSpec) -> _SubBoundary:
    ch = spec.ch
    m_s, m_r = (float(v) for v in spec.clamped)
    if m_r in (0.0, 1.0) or m_s == 0.0:
        return _SubBoundary((), "")
    alpha = float(success_aggregate(ch))
    if alpha == 0:
        return _SubBoundary((), "")
    beta = float((1 - ch.p_sd) * ch.p_sr)
    coeff = ((1 - m_r) * beta + m_r * float(ch.p_rd)) / ((1 - m_r) * alpha)
    return _lower_envelope(
        [(-coeff, m_r * float(ch.p_rd), "r2_relay")],
        x_cut=m_s * (1 - m_r) * alpha,
        cut_tag="r2_source",
    )


def outer_boundary(spec: RegionSpec) -> BoundaryPolyline:
    """Upper envelope of the two dominant-system boundaries, with exact
    vertices and exact crossing points."""
    s1 = _r1_sub(spec)
    s2 = _r2_sub(spec)
    if not s1.pieces and not s2.pieces:
        return BoundaryPolyline((), ())
    if not s1.pieces:
        return _polyline_from_sub(s2)
    if not s2.pieces:
        return _polyline_from_sub(s1)

    xs = {0.0, s1.x_end, s2.x_end}
    for piece in s1.pieces + s2.pieces:
        xs.add(piece.x_lo)
        xs.add(piece.x_hi)
    for a in s1.pieces:
        for b in s2.pieces:
            if a.slope == b.slope:
                continue
            x = (b.intercept - a.intercept) / (a.slope - b.slope)
            if max(a.x_lo, b.x_lo) < x < min(a.x_hi, b.x_hi):
                xs.add(float(x))
    xs = sorted(xs)

    verts: list[RatePoint] = []
    tags: list[str] = []

    def push(x, y, incoming_tag):
        pt = RatePoint(float(x), _clip01(y))
        if verts:
            last = verts[-1]
            if abs(last.lambda_s - pt.lambda_s) <= _EPS and abs(
                last.lambda_r - pt.lambda_r
            ) <= _EPS:
                return
        verts.append(pt)
        if len(verts) > 1:
            tags.append(incoming_tag)

    prev_sub = None
    for a, b in zip(xs[:-1], xs[1:]):
        mid = (a + b) / 2
        y1 = s1.value(mid)
        y2 = s2.value(mid)
        if y1 is None and y2 is None:
            break
        sub = s1 if (y2 is None or (y1 is not None and y1 >= y2)) else s2
        tag = sub.tag_at(mid)
        ya = sub.value(a)
        if not verts:
            push(a, ya, "")
        elif ya is not None and verts[-1].lambda_r - ya > _EPS:
            # the previously dominant sub-boundary ended above this one
            push(a, ya, prev_sub.end_tag if prev_sub is not None else tag)
        push(b, sub.value(b), tag)
        prev_sub = sub

    if verts and verts[-1].lambda_r > _EPS:
        tags.append(prev_sub.end_tag or prev_sub.pieces[-1].tag)
        verts.append(RatePoint(verts[-1].lambda_s, 0.0))
    return BoundaryPolyline(tuple(verts), tuple(tags))
