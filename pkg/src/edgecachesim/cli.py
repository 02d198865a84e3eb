"""Command-line entry point: ``edgecachesim run|summarize|validate|oracle-check``.

Exit codes: 0 success, 1 validation error, 2 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .demand import InvalidInputError
from .scenario import (
    FIGURES,
    ScenarioError,
    load_scenario,
    oracle_check,
    resolve_seed,
    run_scenario,
    summarize,
)

log = logging.getLogger("edgecachesim")


def _cmd_run(args):
    scenario = load_scenario(args.scenario)
    seed = resolve_seed(scenario, args.seed)
    out = args.out or scenario.output_dir
    result = run_scenario(scenario, out_dir=out, seed=seed, jobs=args.jobs)
    print(f"wrote {len(result.rows)} rows and {len(result.placements)} placements to {out} (seed {seed})")
    return 0


def _cmd_summarize(args):
    tables = summarize(args.csv, fixed_capacity=args.capacity)
    names = [args.figure] if args.figure else list(FIGURES)
    print("\n\n".join(tables[n].render() for n in names))
    return 0


def _cmd_validate(args):
    scenario = load_scenario(args.scenario)
    print(
        f"ok: {scenario.id}: K={scenario.catalog.k} N={scenario.population.n} "
        f"Q={scenario.sim.requests_per_day} days={scenario.sim.days} "
        f"algorithms={','.join(scenario.algorithms)} capacities={','.join(map(str, scenario.capacities))}"
    )
    return 0


def _cmd_oracle(args):
    scenario = load_scenario(args.scenario)
    report = oracle_check(scenario, resolve_seed(scenario, args.seed))
    for m in report["mismatches"]:
        print(f"MISMATCH instance={m['instance']} K={m['K']} S={m['S']} dp={m['dp']!r} brute_force={m['brute_force']!r}")
    print(f"{report['instances']} instances, {len(report['mismatches'])} mismatches")
    return 2 if report["mismatches"] else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgecachesim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario sweep and write results.csv and placement.jsonl")
    p.add_argument("scenario")
    p.add_argument("--out", help="output directory (default: run.output_dir from the scenario)")
    p.add_argument("--seed", type=int, help="root seed; overrides EDGECACHESIM_SEED and the scenario")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for (algorithm, capacity) cells")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("summarize", help="print per-figure tables from a results CSV")
    p.add_argument("csv")
    p.add_argument("--figure", choices=FIGURES)
    p.add_argument("--capacity", type=int, default=350, help="capacity for the fig2a table")
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("oracle-check", help="compare the DP with exhaustive search on random instances")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
