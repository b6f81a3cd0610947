"""Command-line front end: simulate, sweep, analytic, validate, trace.

Every scenario parameter can be overridden from the command line with
repeated ``--set key=value`` flags using the same keys as the configuration
file. Diagnostics go to stderr; tabular data goes to files (the validate
subcommand prints its comparison table, which is its work product). Exit
status is 0 only when all requested work succeeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import os
import sys

import numpy as np

from . import analytic as ana
from . import engine
from . import metrics
from .channel import CurveError
from .core import (
    ConfigError, ScenarioConfig, dumps_config, load_config, override_config,
)
from .validation import check_against_pmf


def derive_cell_seed(base_seed: int, d_t: float, flow: float) -> int:
    """Stable per-cell seed: base xor a hash of the cell key."""
    digest = hashlib.sha256(f"d_t={d_t!r},flow={flow!r}".encode()).digest()
    return (base_seed ^ int.from_bytes(digest[:8], "big")) & (2**63 - 1)


def _load(args: argparse.Namespace) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if args.set:
        cfg = override_config(cfg, args.set)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, rng_seed=args.seed)
    return cfg


def _floats(csv: str) -> list[float]:
    try:
        return [float(tok) for tok in csv.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {csv!r}") from None


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    os.makedirs(args.out, exist_ok=True)
    summary = engine.run(cfg)
    metrics.export_records(summary, os.path.join(args.out, "records.csv"))
    metrics.export_summaries([summary], os.path.join(args.out, "summary.csv"))
    metrics.write_metadata(summary, os.path.join(args.out, "run.meta"))
    print(f"simulate: {len(summary.records)} records -> {args.out}", file=sys.stderr)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load(args)
    d_values = _floats(args.d_t)
    flows = _floats(args.flows)
    if not d_values or not flows:
        raise ConfigError("sweep grid must be non-empty")
    cells = [
        dataclasses.replace(cfg, d_t=d, flow_rate=f,
                            rng_seed=derive_cell_seed(cfg.rng_seed, d, f))
        for d in d_values for f in flows
    ]
    os.makedirs(args.out, exist_ok=True)
    status = 0
    try:
        summaries: list[metrics.RunSummary | None] = list(
            engine.run_batch(cells, parallelism=args.parallel)
        )
    except engine.BatchError as exc:
        for index, message in sorted(exc.failures.items()):
            cell = cells[index]
            print(f"sweep: cell d_t={cell.d_t} flow={cell.flow_rate} failed: {message}",
                  file=sys.stderr)
        summaries = exc.results
        status = 1
    done = [s for s in summaries if s is not None]
    metrics.export_summaries(done, os.path.join(args.out, "sweep_summary.csv"))
    with open(os.path.join(args.out, "sweep.meta"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(f"# sweep grid: d_t={d_values} flows={flows} base_seed={cfg.rng_seed}\n")
        for cell in cells:
            fh.write(f"# cell d_t={cell.d_t} flow={cell.flow_rate} seed={cell.rng_seed}\n")
        fh.write(dumps_config(cfg))
    print(f"sweep: {len(done)}/{len(cells)} cells -> {args.out}", file=sys.stderr)
    return status


def _cmd_analytic(args: argparse.Namespace) -> int:
    cfg = _load(args)
    densities = _floats(args.densities)
    if args.d_step <= 0:
        raise ConfigError(f"--d-step must be > 0 (got {args.d_step})")
    d_values = list(np.arange(args.d_min, args.d_max + args.d_step / 2, args.d_step))
    rows = []
    for rho in densities:
        params = ana.params_from_config(cfg, density=rho)
        for point in ana.sweep_trigger(params, d_values):
            rows.append((rho, point.d_t, point.mean_attempts, point.success_mass))
    metrics.export_analytic(rows, args.out)
    print(f"analytic: {len(rows)} rows -> {args.out}", file=sys.stderr)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.trials < 10_000:
        raise ConfigError(f"--trials must be >= 10000 (got {args.trials})")
    points = []
    for spec_str in args.point or ["300:30", "0:10", "-100:20"]:
        try:
            d_str, _, flow_str = spec_str.partition(":")
            points.append((float(d_str), float(flow_str)))
        except ValueError:
            raise ConfigError(f"--point expects D_T:FLOW, got {spec_str!r}") from None
    all_ok = True
    for d_t, flow in points:
        params = ana.params_from_config(cfg, d_t=d_t, density=flow)
        rng = np.random.default_rng(derive_cell_seed(cfg.rng_seed, d_t, flow))
        for check in check_against_pmf(params, args.trials, rng):
            ok = check.within_3sigma
            all_ok &= ok
            print(
                f"d_t={d_t:g} flow={flow:g} n={check.n} "
                f"observed={check.observed} expected={check.expected:.1f} "
                f"sigma={check.sigma:.1f} {'ok' if ok else 'VIOLATION'}"
            )
    if not all_ok:
        print("validate: model/engine drift detected (3-sigma violation)",
              file=sys.stderr)
        return 1
    return 0


def _cmd_trace(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.duration is not None:
        cfg = override_config(cfg, [f"sim_duration={args.duration}"])
    summary = engine.run(cfg, trace_path=args.out)
    print(f"trace: {len(summary.records)} records, transitions -> {args.out}",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2isim",
        description="Trigger-line transaction service simulator and analytic toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="scenario config file (flat key=value)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                       help="override any config field (repeatable)")
        p.add_argument("--seed", type=int, help="override rng_seed")

    p_sim = sub.add_parser("simulate", help="run one scenario, export tables")
    common(p_sim)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(fn=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="trigger x flow grid of runs")
    common(p_sweep)
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--d-t", default="300,0,-100",
                         help="comma-separated trigger distances (m)")
    p_sweep.add_argument("--flows", default="10,20,30",
                         help="comma-separated flow rates (veh/s)")
    p_sweep.add_argument("--parallel", type=int, default=1,
                         help="concurrent runs (results identical at any degree)")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_ana = sub.add_parser("analytic", help="closed-form mean-attempts sweep")
    common(p_ana)
    p_ana.add_argument("--out", required=True, help="output csv file")
    p_ana.add_argument("--d-min", type=float, default=-300.0)
    p_ana.add_argument("--d-max", type=float, default=500.0)
    p_ana.add_argument("--d-step", type=float, default=20.0)
    p_ana.add_argument("--densities", default="10,20,30")
    p_ana.set_defaults(fn=_cmd_analytic)

    p_val = sub.add_parser("validate",
                           help="Monte-Carlo vs closed-form consistency check")
    common(p_val)
    p_val.add_argument("--trials", type=int, default=100_000)
    p_val.add_argument("--point", action="append", metavar="D_T:FLOW",
                       help="check point (repeatable; default 300:30 0:10 -100:20)")
    p_val.set_defaults(fn=_cmd_validate)

    p_trace = sub.add_parser("trace", help="run with per-transition event trace")
    common(p_trace)
    p_trace.add_argument("--out", required=True, help="trace output file")
    p_trace.add_argument("--duration", type=int,
                         help="override sim_duration (ms) for short traces")
    p_trace.set_defaults(fn=_cmd_trace)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, CurveError) as exc:
        print(f"v2isim {args.command}: {exc}", file=sys.stderr)
        return 2
    except (engine.EngineError, metrics.ExportError) as exc:
        print(f"v2isim {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
