"""Exact stable-throughput closure over all transmit-probability pairs.

For fixed harvesting rates the union of the outer-bound regions over every
access policy has a closed-form boundary.  With ``alpha`` the aggregate
solo-source success probability and ``beta`` the relay-capture probability
``(1 - p_sd) * p_sr``:

* aggregate charging at or above one (delta_s + delta_r >= 1): the boundary
  runs A -> B on a line (relay transmit probability pinned at delta_r),
  B -> C on the square-root curve

      sqrt(x / alpha) + sqrt(beta * x / (p_rd * alpha) + y / p_rd) = 1,

  and C -> D on a line (source transmit probability pinned at delta_s);
* aggregate charging below one: two line segments E -> F -> G, the same two
  clamped lines without the curved middle.

Vertex ordinates can come out negative for strongly asymmetric channels; the
boundary is then clipped at its crossing with the lambda_s axis and the
clipped vertices are reported as dropped.

Everything in this module is a pure function; the brute-force union oracle
is the only numpy consumer.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannelError, InfeasiblePointError
from .params import AccessPolicy, ChannelParams, EnergyParams, RatePoint


def _alpha_beta(ch: ChannelParams):
    alpha = ch.p_sd + (1 - ch.p_sd) * ch.p_sr
    beta = (1 - ch.p_sd) * ch.p_sr
    return alpha, beta


def curve_y(x, ch: ChannelParams):
    """Ordinate of the curved boundary piece at abscissa ``x``.

    Explicit solution of the square-root boundary equation for lambda_r:
    ``p_rd * (1 - sqrt(x / alpha))**2 - beta * x / alpha``.  May be negative;
    callers clip.
    """
    alpha, beta = _alpha_beta(ch)
    if not (0 <= x <= alpha):
        raise ValueError(f"abscissa {x} outside [0, alpha={alpha}]")
    u = math.sqrt(x / alpha)
    return ch.p_rd * (1 - u) ** 2 - beta * x / alpha


def relay_clamped_line(x, ch, en):
    """Boundary line with the relay pinned at q_r = delta_r (segments AB/EF)."""
    alpha, beta = _alpha_beta(ch)
    d_r = en.delta_r
    if d_r >= 1:
        # slope degenerates; the line is only ever evaluated at x = 0
        return d_r * ch.p_rd if x == 0 else -math.inf
    return d_r * ch.p_rd - (beta / alpha) * x - d_r * ch.p_rd * x / ((1 - d_r) * alpha)


def source_clamped_line(x, ch, en):
    """Boundary line with the source pinned at q_s = delta_s (segments CD/FG).

    Also the supremum of the relay-side objective over its open feasible set
    whenever the fixed source rate exceeds the relay-clamp window.
    """
    alpha, beta = _alpha_beta(ch)
    d_s = en.delta_s
    if d_s == 0:
        return 0.0 if x == 0 else -math.inf
    return (1 - d_s) * ch.p_rd - ((1 - d_s) * ch.p_rd / (d_s * alpha) + beta / alpha) * x


def _relay_line_axis_crossing(ch, en):
    alpha, beta = _alpha_beta(ch)
    d_r = en.delta_r
    num = d_r * ch.p_rd * (1 - d_r) * alpha
    den = (1 - d_r) * beta + d_r * ch.p_rd
    return num / den if den > 0 else 0.0


def _curve_axis_crossing(ch):
    alpha, beta = _alpha_beta(ch)
    root = math.sqrt(ch.p_rd) + math.sqrt(beta)
    return alpha * ch.p_rd / root**2


@dataclass(frozen=True)
class CurveSegment:
    """Parameters of the square-root boundary piece, valid on [x_lo, x_hi]."""

    p_rd: float
    agg: float
    capture: float
    x_lo: float
    x_hi: float

    def y(self, x):
        u = math.sqrt(x / self.agg)
        return self.p_rd * (1 - u) ** 2 - self.capture * x / self.agg


@dataclass(frozen=True)
class P2Solution:
    """Best relay arrival rate at a fixed source rate, with the maximizing
    relay transmit probability."""

    q_r_star: float
    y_star: float
    branch: str  # "interior" | "clamped-at-delta"


@dataclass(frozen=True)
class P1Solution:
    """Best source arrival rate at a fixed relay rate, with the maximizing
    source transmit probability."""

    q_s_star: float
    x_star: float
    branch: str  # "interior" | "clamped-at-delta" | "relay-limited"


@dataclass(frozen=True)
class ClosureBoundary:
    """Closure boundary for one (channel, harvesting) pair.

    ``raw_vertices`` carries the unclipped vertex formulas (name, x, y),
    ``path`` the clipped boundary actually traced (synthetic axis crossings
    are named "axis"), ``dropped`` the vertices removed by clipping.
    """

    ch: ChannelParams
    en: EnergyParams
    case: str  # "ABOVE_ONE" | "BELOW_ONE"
    raw_vertices: tuple[tuple[str, float, float], ...]
    path: tuple[tuple[str, RatePoint], ...]
    dropped: tuple[str, ...]
    curve: CurveSegment | None
    axis_vertex_branch: str  # which expression won the min for x_D / x_G

    def vertex(self, name):
        for n, x, y in self.raw_vertices:
            if n == name:
                return (x, y)
        raise KeyError(name)

    def y_at(self, x):
        """Boundary ordinate above abscissa x (may be negative past the
        region's extent)."""
        ch, en = self.ch, self.en
        if self.case == "ABOVE_ONE":
            x_b = self.vertex("B")[0]
            x_c = self.vertex("C")[0]
            if x <= x_b:
                return relay_clamped_line(x, ch, en)
            if x <= x_c:
                return curve_y(x, ch)
            return source_clamped_line(x, ch, en)
        x_f = self.vertex("F")[0]
        if x <= x_f:
            return relay_clamped_line(x, ch, en)
        return source_clamped_line(x, ch, en)

    def y_at_many(self, xs):
        """Vectorized :meth:`y_at` over a numpy array of abscissas."""
        xs = np.asarray(xs, dtype=float)
        ch, en = self.ch, self.en
        alpha, beta = _alpha_beta(ch)
        d_s, d_r = en.delta_s, en.delta_r
        if d_r < 1:
            relay = d_r * ch.p_rd - (
                beta / alpha + d_r * ch.p_rd / ((1 - d_r) * alpha)
            ) * xs
        else:
            relay = np.where(xs == 0, d_r * ch.p_rd, -np.inf)
        if d_s > 0:
            source = (1 - d_s) * ch.p_rd - (
                (1 - d_s) * ch.p_rd / (d_s * alpha) + beta / alpha
            ) * xs
        else:
            source = np.where(xs == 0, 0.0, -np.inf)
        if self.case == "BELOW_ONE":
            x_f = self.vertex("F")[0]
            return np.where(xs <= x_f, relay, source)
        x_b = self.vertex("B")[0]
        x_c = self.vertex("C")[0]
        u = np.sqrt(np.clip(xs, 0.0, None) / alpha)
        curve = ch.p_rd * (1 - u) ** 2 - beta * xs / alpha
        return np.where(xs <= x_b, relay, np.where(xs <= x_c, curve, source))

    def sample_points(self, curve_samples=512):
        """Boundary as ordered (segment, x, y) rows; vertices are exact,
        only the curved piece is sampled."""
        seg_of = {"A": "AB", "B": "BC", "C": "CD", "E": "EF", "F": "FG"}
        rows = []
        for i, (name, pt) in enumerate(self.path):
            rows.append((name, float(pt.lambda_s), float(pt.lambda_r)))
            if i + 1 >= len(self.path):
                break
            if name == "B" and self.curve is not None and curve_samples > 1:
                lo, hi = self.curve.x_lo, self.curve.x_hi
                for k in range(1, curve_samples):
                    x = lo + (hi - lo) * k / curve_samples
                    rows.append(("BC", x, max(self.curve.y(x), 0.0)))
        return rows

    def to_csv(self, target=None, curve_samples=512) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["segment", "lambda_s", "lambda_r"])
        for tag, x, y in self.sample_points(curve_samples):
            writer.writerow([tag, repr(float(x)), repr(float(y))])
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w") as fh:
                    fh.write(text)
        return text


def optimize_p2(x, ch: ChannelParams, en: EnergyParams) -> P2Solution:
    """Maximize the relay arrival rate ``y`` at fixed source rate ``x``.

    Interior optimum q_r = 1 - sqrt(x / alpha) on the window
    (1 - delta_r)**2 * alpha < x <= delta_s**2 * alpha; below the window the
    relay transmit probability clamps at delta_r (subject to
    x <= delta_s * (1 - delta_r) * alpha); elsewhere the best achievable y
    is negative and the point is infeasible.
    """
    alpha, beta = _alpha_beta(ch)
    if not (0 <= x <= alpha):
        raise ValueError(f"source rate {x} outside [0, alpha={alpha}]")
    d_s, d_r = en.delta_s, en.delta_r
    x_lo = (1 - d_r) ** 2 * alpha
    x_hi = d_s**2 * alpha
    cap = d_s * (1 - d_r) * alpha

    if x <= x_lo and x <= cap:
        if x == 0:
            return P2Solution(d_r, d_r * ch.p_rd, "clamped-at-delta")
        y = relay_clamped_line(x, ch, en)
        branch = "clamped-at-delta"
        q_r = d_r
    elif x_lo < x <= x_hi:
        u = math.sqrt(x / alpha)
        q_r = 1 - u
        y = ch.p_rd - 2 * ch.p_rd * u + (x / alpha) * (ch.p_rd - beta)
        branch = "interior"
    else:
        raise InfeasiblePointError(
            f"no relay transmit probability achieves a nonnegative rate at "
            f"source rate {x} (harvesting delta_s={d_s}, delta_r={d_r})"
        )
    if y < 0:
        raise InfeasiblePointError(
            f"best achievable relay rate at source rate {x} is negative ({y})"
        )
    return P2Solution(q_r, y, branch)


def optimize_p1(y, ch: ChannelParams, en: EnergyParams) -> P1Solution:
    """Maximize the source arrival rate ``x`` at fixed relay rate ``y``.

    Mirrors :func:`optimize_p2`.  The interior optimum solves
    p_rd * (1 - q)**2 - beta * q**2 = y for the source transmit probability;
    outside its window either the source clamps at delta_s or the relay
    budget delta_r limits the attainable point (the "relay-limited" branch).
    """
    alpha, beta = _alpha_beta(ch)
    if not (0 <= y <= ch.p_rd):
        raise ValueError(f"relay rate {y} outside [0, p_rd={ch.p_rd}]")
    d_s, d_r = en.delta_s, en.delta_r

    def relay_limited():
        den = (1 - d_r) * beta + d_r * ch.p_rd
        x = (d_r * ch.p_rd - y) * (1 - d_r) * alpha / den if den > 0 else -1.0
        if x < 0:
            raise InfeasiblePointError(
                f"relay rate {y} exceeds the best achievable {d_r * ch.p_rd}"
            )
        q_s = 0.0 if x == 0 else x / ((1 - d_r) * alpha)
        return P1Solution(q_s, x, "relay-limited")

    def source_clamped():
        den = (1 - d_s) * ch.p_rd + d_s * beta
        x = alpha * d_s * ((1 - d_s) * ch.p_rd - y) / den if den > 0 else -1.0
        if x < 0:
            raise InfeasiblePointError(
                f"relay rate {y} infeasible with the source clamped at {d_s}"
            )
        return P1Solution(d_s, x, "clamped-at-delta")

    if d_s + d_r >= 1:
        y_hi = d_r**2 * ch.p_rd - (1 - d_r) ** 2 * beta  # curve value at B
        y_lo = (1 - d_s) ** 2 * ch.p_rd - d_s**2 * beta  # curve value at C
        if y > y_hi:
            return relay_limited()
        if y >= max(y_lo, 0.0):
            s = math.sqrt(ch.p_rd * y + beta * (ch.p_rd - y))
            q_s = (ch.p_rd - y) / (ch.p_rd + s)
            return P1Solution(q_s, alpha * q_s**2, "interior")
        return source_clamped()
    y_knee = d_r * (1 - d_s) * ch.p_rd - d_s * (1 - d_r) * beta  # vertex F
    if y > y_knee:
        return relay_limited()
    return source_clamped()


def boundary(ch: ChannelParams, en: EnergyParams) -> ClosureBoundary:
    """Closure boundary with vertex formulas evaluated and clipping applied."""
    alpha, beta = _alpha_beta(ch)
    if alpha == 0:
        raise DegenerateChannelError("source packets can never depart")
    d_s, d_r = en.delta_s, en.delta_r
    if d_s + d_r >= 1:
        return _boundary_above_one(ch, en)
    return _boundary_below_one(ch, en)


def _boundary_above_one(ch, en) -> ClosureBoundary:
    alpha, beta = _alpha_beta(ch)
    d_s, d_r = en.delta_s, en.delta_r
    p_rd = ch.p_rd

    y_a = d_r * p_rd
    x_b = (1 - d_r) ** 2 * alpha
    y_b = d_r**2 * p_rd - (1 - d_r) ** 2 * beta
    x_c = d_s**2 * alpha
    y_c = (1 - d_s) ** 2 * p_rd - d_s**2 * beta
    x_d1 = (1 - d_s) ** 2 * alpha / beta if beta > 0 else math.inf
    x_d2_den = (1 - d_s) * p_rd + d_s * beta
    x_d2 = d_s * (1 - d_s) * p_rd * alpha / x_d2_den if x_d2_den > 0 else 0.0
    if math.isclose(x_d1, x_d2, rel_tol=0, abs_tol=1e-15):
        x_d, branch = x_d1, "both"
    elif x_d1 < x_d2:
        x_d, branch = x_d1, "first"
    else:
        x_d, branch = x_d2, "second"

    raw = (("A", 0.0, y_a), ("B", x_b, y_b), ("C", x_c, y_c), ("D", x_d, 0.0))

    if y_b < 0:
        x0 = _relay_line_axis_crossing(ch, en)
        path = [("A", RatePoint(0.0, y_a)), ("axis", RatePoint(x0, 0.0))]
        dropped = ("B", "C", "D")
        curve = None
    elif y_c < 0:
        x0 = _curve_axis_crossing(ch)
        curve = CurveSegment(p_rd, alpha, beta, x_b, x0)
        path = [
            ("A", RatePoint(0.0, y_a)),
            ("B", RatePoint(x_b, max(y_b, 0.0))),
            ("axis", RatePoint(x0, 0.0)),
        ]
        dropped = ("C", "D")
    else:
        curve = CurveSegment(p_rd, alpha, beta, x_b, x_c)
        path = [
            ("A", RatePoint(0.0, y_a)),
            ("B", RatePoint(x_b, y_b)),
            ("C", RatePoint(x_c, y_c)),
            ("D", RatePoint(x_d, 0.0)),
        ]
        dropped = ()
    return ClosureBoundary(ch, en, "ABOVE_ONE", raw, tuple(path), dropped, curve, branch)


def _boundary_below_one(ch, en) -> ClosureBoundary:
    alpha, beta = _alpha_beta(ch)
    d_s, d_r = en.delta_s, en.delta_r
    p_rd = ch.p_rd

    y_e = d_r * p_rd
    x_f = d_s * (1 - d_r) * alpha
    y_f = d_r * (1 - d_s) * p_rd - d_s * (1 - d_r) * beta
    x_g1 = (1 - d_s) * d_r * p_rd * alpha / beta if beta > 0 else math.inf
    x_g2_den = (1 - d_s) * p_rd + d_s * beta
    x_g2 = d_s * (1 - d_s) * p_rd * alpha / x_g2_den if x_g2_den > 0 else 0.0
    if math.isclose(x_g1, x_g2, rel_tol=0, abs_tol=1e-15):
        x_g, branch = x_g1, "both"
    elif x_g1 < x_g2:
        x_g, branch = x_g1, "first"
    else:
        x_g, branch = x_g2, "second"

    raw = (("E", 0.0, y_e), ("F", x_f, y_f), ("G", x_g, 0.0))
    if y_f < 0:
        x0 = _relay_line_axis_crossing(ch, en)
        path = [("E", RatePoint(0.0, y_e)), ("axis", RatePoint(x0, 0.0))]
        dropped = ("F", "G")
    else:
        path = [
            ("E", RatePoint(0.0, y_e)),
            ("F", RatePoint(x_f, y_f)),
            ("G", RatePoint(x_g, 0.0)),
        ]
        dropped = ()
    return ClosureBoundary(ch, en, "BELOW_ONE", raw, tuple(path), dropped, None, branch)


def contains(p: RatePoint, ch: ChannelParams, en: EnergyParams) -> bool:
    """Strictly-below-the-boundary membership test."""
    return p.lambda_r < boundary(ch, en).y_at(p.lambda_s)


def achieving_policy(x, ch: ChannelParams, en: EnergyParams) -> AccessPolicy:
    """Transmit probabilities whose saturated throughput pair lands on the
    closure boundary at abscissa ``x``.

    The relay probability comes from the active boundary segment; the source
    probability follows from inverting the saturated source throughput,
    q_s = x / ((1 - q_r) * alpha).
    """
    bnd = boundary(ch, en)
    alpha, _ = _alpha_beta(ch)
    last_x = bnd.path[-1][1].lambda_s
    if not (0 <= x <= last_x):
        raise InfeasiblePointError(f"abscissa {x} beyond the boundary extent {last_x}")
    if bnd.case == "ABOVE_ONE":
        x_b = bnd.vertex("B")[0]
        x_c = bnd.vertex("C")[0]
        if x <= x_b:
            q_r = bnd.en.delta_r
        elif x <= min(x_c, last_x):
            q_r = 1 - math.sqrt(x / alpha)
        else:
            q_r = 1 - x / (bnd.en.delta_s * alpha)
    else:
        x_f = bnd.vertex("F")[0]
        if x <= x_f:
            q_r = bnd.en.delta_r
        else:
            q_r = 1 - x / (bnd.en.delta_s * alpha)
    q_s = 0.0 if x == 0 else x / ((1 - q_r) * alpha)
    return AccessPolicy(min(max(q_s, 0.0), 1.0), min(max(q_r, 0.0), 1.0))


# ---------------------------------------------------------------------------
# brute-force union oracle


@dataclass(frozen=True)
class OracleRegion:
    """Sampled membership grid: mask[i, j] says whether
    (lambda_s[j], lambda_r[i]) belongs to some sampled policy's region."""

    lambda_s: np.ndarray
    lambda_r: np.ndarray
    mask: np.ndarray
    policy_count: int


def union_oracle(
    ch: ChannelParams,
    en: EnergyParams,
    grid_n: int,
    rate_grid_n: int = 101,
    policy_unit_box: bool = False,
) -> OracleRegion:
    """Union of the outer-bound regions over a grid_n x grid_n policy grid.

    The policy grid spans [0, delta_s] x [0, delta_r] (or, with
    ``policy_unit_box``, [0, 1]^2 with the harvest clamp applied inside the
    formulas, which collapses to the same effective policies).  The relay
    grid additionally carries the exact interior optimizer
    1 - sqrt(x / alpha) for every sampled abscissa so the curved part of the
    boundary is representable.

    For each fixed relay probability the union over source probabilities is
    monotone in q_s, and symmetrically for the first sub-region in q_r, so
    the two double loops collapse to single sweeps; the resulting mask is
    identical to the full pairwise union.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    alpha, beta = _alpha_beta(ch)
    if alpha == 0:
        raise DegenerateChannelError("source packets can never depart")
    alpha_f, beta_f = float(alpha), float(beta)
    p_rd = float(ch.p_rd)
    d_s, d_r = float(en.delta_s), float(en.delta_r)

    if policy_unit_box:
        qs_vals = np.unique(np.minimum(np.linspace(0.0, 1.0, grid_n), d_s))
        qr_vals = np.minimum(np.linspace(0.0, 1.0, grid_n), d_r)
    else:
        qs_vals = np.linspace(0.0, d_s, grid_n)
        qr_vals = np.linspace(0.0, d_r, grid_n)

    xs = np.linspace(0.0, 1.0, rate_grid_n)
    ys = np.linspace(0.0, 1.0, rate_grid_n)
    extra = 1.0 - np.sqrt(np.minimum(xs / alpha_f, 1.0))
    extra = extra[(extra >= 0.0) & (extra <= d_r)]
    qr_vals = np.unique(np.concatenate([qr_vals, extra]))
    qs_vals = np.unique(qs_vals)

    X, Y = np.meshgrid(xs, ys)
    lrt = Y + (beta_f / alpha_f) * X
    mask = np.zeros_like(X, dtype=bool)

    qs_max = qs_vals[-1]
    qr_max = qr_vals[-1]

    # first sub-region: loop source probabilities, relay loop collapses to
    # its maximum since only the relay-service constraint depends on q_r
    for q_s in qs_vals:
        if q_s <= 0.0 or q_s >= 1.0 or qr_max <= 0.0:
            continue
        rel = (1 - q_s) * p_rd
        weighted = (1 + q_s * beta_f / rel) * X + (q_s * alpha_f / rel) * Y
        mask |= (weighted < q_s * alpha_f) & (lrt < qr_max * rel)

    # second sub-region: loop relay probabilities, source loop collapses
    for q_r in qr_vals:
        if q_r <= 0.0 or q_r >= 1.0 or qs_max <= 0.0:
            continue
        coeff = ((1 - q_r) * beta_f + q_r * p_rd) / ((1 - q_r) * alpha_f)
        first = Y + coeff * X < q_r * p_rd
        cut = xs < qs_max * (1 - q_r) * alpha_f
        mask |= first & cut[None, :]

    return OracleRegion(xs, ys, mask, len(qs_vals) * len(qr_vals))
