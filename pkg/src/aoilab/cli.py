"""Command-line interface.

Subcommands:
  analyze   closed-form report (bounds, ratios, predictions) for a config
  simulate  run a config's scenarios and write per-source + summary CSVs
  sweep     run a built-in benchmark grid (figures 3-6) and write CSVs
  table1    deterministic two-source schedule benchmark, measured vs targets
  validate  run the full acceptance suite; exit 0 iff every criterion passes
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigurationError
from .model import GenerationMode
from .reports import analyze_csv, emit_csv, format_analyze_report, run_scenarios
from .scenarios import (
    TABLE1_PARAMS,
    TABLE1_TARGETS,
    TABLE1_TOLERANCE,
    parse_config,
    scenario_fig,
    table1_policies,
    table1_sim_for,
)
from .simulation import run_episode


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override base seed")
    p.add_argument("--horizon", type=int, default=None, help="override horizon T")
    p.add_argument("--replications", type=int, default=None, help="override replication count")
    p.add_argument("--warmup", type=int, default=None, help="override warm-up slots")
    p.add_argument("--mode", choices=["refresh", "hold"], default=None, help="override generation mode")


def _apply_overrides(scenarios, args):
    out = []
    for sc in scenarios:
        sim = sc.sim
        if args.seed is not None:
            sim = replace(sim, seed=args.seed)
        if args.horizon is not None:
            sim = replace(sim, horizon=args.horizon, warmup=None)
        if args.replications is not None:
            sim = replace(sim, replications=args.replications)
        if args.warmup is not None:
            sim = replace(sim, warmup=args.warmup)
        if args.mode is not None:
            sim = replace(sim, mode=GenerationMode.parse(args.mode))
        out.append(replace(sc, sim=sim))
    return out


def _load_config(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def cmd_analyze(args) -> int:
    scenarios = _apply_overrides(_load_config(args.config), args)
    print(format_analyze_report(scenarios), end="")
    if args.out is not None:
        path = analyze_csv(scenarios, args.out)
        print(f"wrote {path}")
    return 0


def cmd_simulate(args) -> int:
    scenarios = _apply_overrides(_load_config(args.config), args)
    results = run_scenarios(scenarios)
    out = args.out or Path("results")
    per_source, summary = emit_csv(results, out)
    print(f"wrote {per_source}\nwrote {summary}")
    return 0


def cmd_sweep(args) -> int:
    scenarios = scenario_fig(
        args.fig,
        seed=args.seed if args.seed is not None else 0,
        horizon=args.horizon,
        replications=args.replications if args.replications is not None else 5,
        stride=args.stride,
    )
    if args.warmup is not None or args.mode is not None:
        scenarios = _apply_overrides(scenarios, args)
    results = run_scenarios(scenarios)
    out = args.out or Path(f"results_fig{args.fig}")
    per_source, summary = emit_csv(results, out)
    print(f"wrote {per_source}\nwrote {summary}")
    return 0


def cmd_table1(args) -> int:
    rows = []
    for label, schedule in table1_policies():
        cfg = table1_sim_for(schedule)
        m = run_episode(TABLE1_PARAMS, schedule, cfg, collect_cycles=False)
        target = TABLE1_TARGETS[label]
        ok = abs(m.ewsaoi - target) <= TABLE1_TOLERANCE
        rows.append((label, m.ewsaoi, target, ok))
        print(
            f"{label:<14} measured {m.ewsaoi:8.2f}   target {target:7.2f}   "
            f"{'ok' if ok else 'OUT OF TOLERANCE'}"
        )
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / "table1.json"
        path.write_text(
            json.dumps(
                [
                    {"schedule": l, "measured": v, "target": t, "within_tolerance": ok}
                    for l, v, t, ok in rows
                ],
                indent=2,
            )
            + "\n"
        )
        print(f"wrote {path}")
    return 0 if all(ok for *_, ok in rows) else 1


def cmd_validate(args) -> int:
    from .acceptance import run_all

    results = run_all(echo=True)
    failures = [
        {"criterion": r.cid, "name": r.name, "detail": r.detail}
        for r in results
        if not r.passed
    ]
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / "validate.json"
        path.write_text(
            json.dumps(
                {
                    "passed": not failures,
                    "criteria": [
                        {
                            "criterion": r.cid,
                            "name": r.name,
                            "passed": r.passed,
                            "detail": r.detail,
                            "elapsed_s": round(r.elapsed, 2),
                        }
                        for r in results
                    ],
                },
                indent=2,
            )
            + "\n"
        )
        print(f"wrote {path}")
    if failures:
        print(json.dumps({"failures": failures}), file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoilab",
        description="Age-of-Information scheduling laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form report for a config")
    p.add_argument("--config", type=Path, required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("simulate", help="simulate a config, write CSVs")
    p.add_argument("--config", type=Path, required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="run a built-in benchmark grid")
    p.add_argument("--fig", type=int, choices=[3, 4, 5, 6], required=True)
    p.add_argument("--stride", type=int, default=1, help="take every k-th sweep point")
    _add_common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("table1", help="deterministic schedule benchmark")
    _add_common(p)
    p.set_defaults(fn=cmd_table1)

    p = sub.add_parser("validate", help="run the acceptance suite")
    _add_common(p)
    p.set_defaults(fn=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
