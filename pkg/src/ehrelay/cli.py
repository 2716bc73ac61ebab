"""Command-line front end.

Subcommands: ``regions``, ``closure``, ``sweep``, ``simulate``,
``validate``.  Flags override config-file keys.  Exit codes: 0 success,
1 validation-suite failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import closure, validation
from .errors import ConfigError, EhRelayError
from .params import NetworkParams, RatePoint, load_network_params, read_config
from .regions import RegionSpec, inner_boundary, inner_contains, outer_boundary, outer_contains
from .simulator import SimConfig, SimMode, load_sim_config, run
from .stability import assess


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _parse_grid_axis(spec):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError([f"grid: expected min:max:step (got {spec!r})"])
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError([f"grid: non-numeric bound in {spec!r}"])
    if step <= 0:
        raise ConfigError([f"grid: step must be positive (got {step})"])
    if hi < lo:
        raise ConfigError([f"grid: empty axis, min {lo} exceeds max {hi}"])
    if lo < 0 or hi > 1:
        raise ConfigError([f"grid: bounds must lie in [0, 1] (got {spec!r})"])
    n = int((hi - lo) / step + 1e-9)
    return [lo + i * step for i in range(n + 1)]


def _parse_grid(text):
    axes = text.split(",")
    if len(axes) == 1:
        axes = [axes[0], axes[0]]
    if len(axes) != 2:
        raise ConfigError([f"grid: expected one or two axis specs (got {text!r})"])
    return _parse_grid_axis(axes[0]), _parse_grid_axis(axes[1])


def cmd_regions(args) -> int:
    params = load_network_params(args.config)
    spec = RegionSpec(params.channel, params.energy, params.policy)
    inner = inner_boundary(spec)
    outer = outer_boundary(spec)
    if inner.is_empty() or outer.is_empty():
        print(
            "warning: degenerate policy, at least one boundary is empty",
            file=sys.stderr,
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["region", "lambda_s", "lambda_r", "active_constraint"])
    for region, poly in (("inner", inner), ("outer", outer)):
        body = poly.to_csv().splitlines()[1:]
        for line in body:
            writer.writerow([region] + next(csv.reader([line])))
    _write(args.out, buf.getvalue())
    return 0


def cmd_closure(args) -> int:
    params = load_network_params(args.config)
    bnd = closure.boundary(params.channel, params.energy)
    bnd.to_csv(args.out, curve_samples=args.curve_samples)
    return 0


def cmd_simulate(args) -> int:
    cfg = load_sim_config(
        args.config,
        mode=args.mode,
        horizon=args.horizon,
        seed=args.seed,
        warmup=args.warmup,
    )
    metrics = run(cfg)
    metrics.to_json(args.out)
    if args.trajectory:
        metrics.trajectory_csv(args.trajectory)
    return 0


def cmd_sweep(args) -> int:
    doc = read_config(args.config)
    params = load_network_params(doc)
    if args.grid:
        grid_s, grid_r = _parse_grid(args.grid)
    elif "grid" in doc:
        g = doc["grid"]
        try:
            grid_s = _parse_grid_axis(":".join(str(v) for v in g["lambda_s"]))
            grid_r = _parse_grid_axis(":".join(str(v) for v in g["lambda_r"]))
        except (KeyError, TypeError):
            raise ConfigError(
                ["grid: expected {\"lambda_s\": [min, max, step], \"lambda_r\": [...]}"]
            )
    else:
        raise ConfigError(["grid: missing (pass --grid or a grid config key)"])
    seed = args.seed if args.seed is not None else doc.get("seed")
    if seed is None:
        raise ConfigError(["seed: missing (set it in the config or pass --seed)"])
    seed = int(seed)
    horizon = int(args.horizon or doc.get("horizon", 100000))
    mode = SimMode(args.mode) if args.mode else SimMode.ORIGINAL

    spec = RegionSpec(params.channel, params.energy, params.policy)
    seeds = (seed, seed + 1, seed + 2)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "lambda_s",
            "lambda_r",
            "in_inner",
            "in_outer",
            "in_closure",
            "sim_verdict_s",
            "sim_verdict_r",
            "measured_mu_s",
            "measured_mu_r",
        ]
    )
    for lam_s in grid_s:
        for lam_r in grid_r:
            point = RatePoint(lam_s, lam_r)
            run_params = NetworkParams(params.channel, params.energy, params.policy, point)
            verdict = assess(run_params, horizon, seeds)
            metrics = run(
                SimConfig(
                    params.channel,
                    params.energy,
                    params.policy,
                    point,
                    mode,
                    horizon,
                    seed,
                )
            )
            writer.writerow(
                [
                    repr(float(lam_s)),
                    repr(float(lam_r)),
                    str(inner_contains(point, spec)).lower(),
                    str(outer_contains(point, spec)).lower(),
                    str(closure.contains(point, params.channel, params.energy)).lower(),
                    verdict.verdict_s,
                    verdict.verdict_r,
                    repr(metrics.measured_mu_s),
                    repr(metrics.measured_mu_r),
                ]
            )
    _write(args.out, buf.getvalue())
    return 0


def cmd_validate(args) -> int:
    if args.config:
        load_network_params(args.config)  # config must at least be loadable
    only = args.only.split(",") if args.only else None
    try:
        results = validation.run_all(base_seed=args.seed, only=only)
    except ValueError as exc:
        raise ConfigError([str(exc)])
    report = []
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {result.name} ({result.seconds:.1f}s)")
        report.append(
            {
                "name": result.name,
                "passed": result.passed,
                "seconds": result.seconds,
                "details": result.details,
            }
        )
    if args.out:
        _write(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ehrelay",
        description=(
            "Stability bounds, stable-throughput closure, and slot-level "
            "simulation for a two-hop energy-harvesting relay network"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regions", help="export inner/outer boundary polylines as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_regions)

    p = sub.add_parser("closure", help="export the closure boundary as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--curve-samples", type=int, default=512)
    p.set_defaults(fn=cmd_closure)

    p = sub.add_parser("simulate", help="run one simulation and dump metrics")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--mode", choices=[m.value for m in SimMode])
    p.add_argument("--trajectory", help="also write trajectory samples as CSV")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="rate-grid sweep comparing bounds and verdicts")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", help="min:max:step[,min:max:step]")
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--mode", choices=[m.value for m in SimMode])
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("validate", help="run the full acceptance suite")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", help="optional config checked for loadability")
    p.add_argument("--out", help="write a JSON report here")
    p.add_argument("--only", help="comma-separated subset of checks")
    p.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        for message in exc.messages:
            print(f"error: {message}", file=sys.stderr)
        return 2
    except EhRelayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
