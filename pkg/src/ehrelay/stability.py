"""Empirical stable/unstable classification from simulated trajectories.

A queue with net drift grows linearly at its arrival-minus-service rate,
while a stable queue fluctuates around a stationary mean, so a per-seed
least-squares slope separates the two regimes.  Points close to a region
boundary legitimately come out INCONCLUSIVE.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateChannelError
from .formulas import relay_total_arrival, saturated_throughput
from .params import NetworkParams
from .simulator import SimConfig, SimMode, fit_slope, run

STABLE = "STABLE"
UNSTABLE = "UNSTABLE"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class StabilityCriteria:
    """Thresholds for the verdict rule.

    ``l_max_*`` of None means: use 50 / (1 - rho) with rho the analytic
    load estimate from the saturated service rate when that estimate is
    available and below one, else 1000.
    """

    eps_slope: float = 1e-3
    l_max_source: float | None = None
    l_max_relay: float | None = None
    min_horizon: int = 10**5
    min_seeds: int = 3


@dataclass(frozen=True)
class SeedEvidence:
    seed: int
    slope_s: float
    slope_r: float
    tail_mean_s: float
    tail_mean_r: float
    quarter_means_s: tuple
    quarter_means_r: tuple


@dataclass(frozen=True)
class StabilityVerdict:
    verdict_s: str
    verdict_r: str
    verdict: str  # network-level: both queues stable
    l_max_s: float
    l_max_r: float
    eps_slope: float
    evidence: tuple[SeedEvidence, ...]

    def to_json(self, target=None) -> str:
        doc = {
            "verdict": self.verdict,
            "verdict_s": self.verdict_s,
            "verdict_r": self.verdict_r,
            "eps_slope": self.eps_slope,
            "l_max_s": self.l_max_s,
            "l_max_r": self.l_max_r,
            "evidence": [
                {
                    "seed": e.seed,
                    "slope_s": e.slope_s,
                    "slope_r": e.slope_r,
                    "tail_mean_s": e.tail_mean_s,
                    "tail_mean_r": e.tail_mean_r,
                    "quarter_means_s": list(e.quarter_means_s),
                    "quarter_means_r": list(e.quarter_means_r),
                }
                for e in self.evidence
            ],
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w") as fh:
                    fh.write(text)
        return text


def _auto_l_max(load):
    if load is None or load >= 1:
        return 1e3
    return 50.0 / (1.0 - load)


def _analytic_loads(params: NetworkParams):
    mu = saturated_throughput(params.channel, params.energy, params.policy)
    load_s = float(params.rates.lambda_s) / float(mu.mu_s) if mu.mu_s > 0 else None
    try:
        total = float(relay_total_arrival(params.rates, params.channel))
    except DegenerateChannelError:
        total = None
    load_r = total / float(mu.mu_r) if (total is not None and mu.mu_r > 0) else None
    return load_s, load_r


def _column_stats(trajectory, column, warmup):
    samples = [row[column] for row in trajectory if row[0] >= warmup]
    if not samples:
        return 0.0, (0.0, 0.0, 0.0, 0.0)
    arr = np.asarray(samples, dtype=float)
    tail = arr[-max(1, len(arr) // 4):]
    quarters = tuple(
        float(part.mean()) for part in np.array_split(arr, 4) if len(part)
    )
    while len(quarters) < 4:
        quarters = quarters + (quarters[-1],)
    return float(tail.mean()), quarters


def _queue_verdict(slopes, tail_means, quarter_means, eps_slope, l_max):
    if all(s < eps_slope for s in slopes) and all(t < l_max for t in tail_means):
        return STABLE
    monotone = all(
        all(a < b for a, b in zip(qm[:-1], qm[1:])) for qm in quarter_means
    )
    if all(s > eps_slope for s in slopes) and monotone:
        return UNSTABLE
    return INCONCLUSIVE


def assess(
    params: NetworkParams,
    horizon: int,
    seeds,
    warmup: int | None = None,
    criteria: StabilityCriteria | None = None,
    trajectory_stride: int = 0,
) -> StabilityVerdict:
    """Classify both queues as STABLE/UNSTABLE/INCONCLUSIVE from original-
    mode runs across the given seeds.

    Deterministic in (params, horizon, seed list, criteria).
    """
    criteria = criteria or StabilityCriteria()
    seeds = list(seeds)
    errors = []
    if horizon < criteria.min_horizon:
        errors.append(
            f"horizon: need at least {criteria.min_horizon} slots (got {horizon})"
        )
    if len(seeds) < criteria.min_seeds:
        errors.append(f"seeds: need at least {criteria.min_seeds} (got {len(seeds)})")
    if errors:
        raise ConfigError(errors)

    load_s, load_r = _analytic_loads(params)
    l_max_s = (
        criteria.l_max_source
        if criteria.l_max_source is not None
        else _auto_l_max(load_s)
    )
    l_max_r = (
        criteria.l_max_relay if criteria.l_max_relay is not None else _auto_l_max(load_r)
    )

    evidence = []
    for seed in seeds:
        cfg = SimConfig(
            channel=params.channel,
            energy=params.energy,
            policy=params.policy,
            rates=params.rates,
            mode=SimMode.ORIGINAL,
            horizon=horizon,
            seed=seed,
            warmup=warmup,
            trajectory_stride=trajectory_stride,
        )
        metrics = run(cfg)
        slope_s = fit_slope(metrics.trajectory, 1, start_slot=cfg.warmup)
        slope_r = fit_slope(metrics.trajectory, 2, start_slot=cfg.warmup)
        tail_s, quarters_s = _column_stats(metrics.trajectory, 1, cfg.warmup)
        tail_r, quarters_r = _column_stats(metrics.trajectory, 2, cfg.warmup)
        evidence.append(
            SeedEvidence(seed, slope_s, slope_r, tail_s, tail_r, quarters_s, quarters_r)
        )

    verdict_s = _queue_verdict(
        [e.slope_s for e in evidence],
        [e.tail_mean_s for e in evidence],
        [e.quarter_means_s for e in evidence],
        criteria.eps_slope,
        l_max_s,
    )
    verdict_r = _queue_verdict(
        [e.slope_r for e in evidence],
        [e.tail_mean_r for e in evidence],
        [e.quarter_means_r for e in evidence],
        criteria.eps_slope,
        l_max_r,
    )
    if verdict_s == STABLE and verdict_r == STABLE:
        overall = STABLE
    elif UNSTABLE in (verdict_s, verdict_r):
        overall = UNSTABLE
    else:
        overall = INCONCLUSIVE
    return StabilityVerdict(
        verdict_s,
        verdict_r,
        overall,
        l_max_s,
        l_max_r,
        criteria.eps_slope,
        tuple(evidence),
    )
