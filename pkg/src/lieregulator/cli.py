"""Command-line front end.

    lieregulator run <scenario> --out DIR
    lieregulator batch <glob> --out DIR
    lieregulator batch --seeds N [--scenario NAME] --out DIR
    lieregulator check <scenario>
    lieregulator presets list

``<scenario>`` is a YAML file or a preset name.  Exit codes: 0 success,
1 validation failure, 2 integration failure.
"""

from __future__ import annotations

import argparse
import sys

from .runner import batch, run
from .scenario import ScenarioError, load_scenario, preset_names

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


def _load(arg):
    try:
        return load_scenario(arg)
    except (ScenarioError, ValueError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return None


def _warn(scenario):
    for w in scenario.warnings:
        print(f"warning: {w}", file=sys.stderr)


def cmd_run(args) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return EXIT_INVALID
    _warn(scenario)
    summary = run(scenario, args.out)
    if summary["status"] != "ok":
        print(f"integration failed: {summary['message']}", file=sys.stderr)
        return EXIT_FAILED
    term = summary["terminal"]
    print(f"{scenario.name}: t={term['t']:g} group_error={term['group_error']:.3e} "
          f"e_sq_sum={term['e_sq_sum']:.3e} -> {args.out}")
    return EXIT_OK


def cmd_batch(args) -> int:
    if (args.pattern is None) == (args.seeds is None):
        print("give either a scenario glob or --seeds N", file=sys.stderr)
        return EXIT_INVALID
    base = None
    if args.seeds is not None:
        base = _load(args.scenario)
        if base is None:
            return EXIT_INVALID
    try:
        rows = batch(args.pattern, args.seeds, base, args.out, args.threshold, args.workers, args.keep_runs)
    except (ScenarioError, ValueError) as exc:
        print(f"invalid batch: {exc}", file=sys.stderr)
        return EXIT_INVALID
    n_conv = sum(r.converged for r in rows)
    print(f"{n_conv}/{len(rows)} runs converged -> {args.out}/aggregate.csv")
    if any(r.status == "invalid" for r in rows):
        return EXIT_INVALID
    if any(r.status != "ok" for r in rows):
        return EXIT_FAILED
    return EXIT_OK


def cmd_check(args) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return EXIT_INVALID
    _warn(scenario)
    print(f"{scenario.name}: ok ({scenario.loop.mode}, {scenario.tag.value}, t_end={scenario.t_end:g})")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in preset_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lieregulator", description="Lie-group output regulation simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("scenario", help="scenario YAML file or preset name")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run a glob of scenarios or a seed sweep")
    b.add_argument("pattern", nargs="?", help="glob of scenario files")
    b.add_argument("--seeds", type=int, help="random initial attitudes for seeds 0..N-1")
    b.add_argument("--scenario", default="almost_global_so3", help="base scenario for --seeds")
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--threshold", type=float, default=1e-6, help="convergence threshold on sum |e_i|^2")
    b.add_argument("--workers", type=int, default=1, help="parallel processes")
    b.add_argument("--keep-runs", action="store_true", help="also write each run's CSV and summary")
    b.set_defaults(func=cmd_batch)

    c = sub.add_parser("check", help="validate a scenario without running it")
    c.add_argument("scenario")
    c.set_defaults(func=cmd_check)

    pr = sub.add_parser("presets", help="bundled scenarios")
    pr.add_argument("action", choices=["list"])
    pr.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
