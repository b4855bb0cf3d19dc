"""Command-line harness: run scenarios, list bundled ones, validate files.

Exit codes: 0 success, 1 scenario validation error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .experiment import (
    ScenarioError,
    bundled_scenarios,
    load_scenario,
    run_scenario,
    write_results,
)


def _resolve_scenario(token: str) -> Path:
    """Accept either a file path or the name of a bundled scenario."""
    path = Path(token)
    if path.is_file():
        return path
    bundled = bundled_scenarios()
    if token in bundled:
        return bundled[token]
    raise ScenarioError(
        f"no scenario file at {token!r} and no bundled scenario of that name "
        f"(try: {', '.join(bundled)})"
    )


def _cmd_run(args) -> int:
    sc = load_scenario(_resolve_scenario(args.scenario))
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    if args.reps is not None:
        sc = replace(sc, reps=args.reps)

    def progress(row):
        print(
            f"param={row.param:g} optimal={row.optimal_perr:.6f} "
            f"median={row.median_perr:.6f} iqr=[{row.q1_perr:.6f}, {row.q3_perr:.6f}]"
        )

    result = run_scenario(sc, traces=args.traces, jobs=args.jobs, progress=progress)
    written = write_results(result, args.out)
    print(f"wrote {len(written)} files to {args.out}")
    if result.failures:
        print(f"warning: {len(result.failures)} grid point(s) failed; see manifest.json",
              file=sys.stderr)
        return 2
    return 0


def _cmd_list(_args) -> int:
    for name, path in bundled_scenarios().items():
        print(f"{name}\t{path}")
    return 0


def _cmd_validate(args) -> int:
    sc = load_scenario(_resolve_scenario(args.scenario))
    grid = sc.grid_values()
    print(
        f"ok: family={sc.family} grid={len(grid)} point(s) reps={sc.reps} "
        f"N={sc.n_shots} k_t={sc.k_t} N_total/rep={sc.n_total_per_rep()}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discrim",
        description="Train simulated measurement devices to discriminate quantum states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write CSV/JSON results")
    p_run.add_argument("--scenario", required=True, help="scenario file path or bundled name")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--reps", type=int, default=None, help="override the repetition count")
    p_run.add_argument("--traces", action="store_true", help="write per-repetition trace CSVs")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel repetition workers")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list-scenarios", help="list bundled scenario files")
    p_list.set_defaults(func=_cmd_list)

    p_val = sub.add_parser("validate", help="parse and validate a scenario file")
    p_val.add_argument("--scenario", required=True, help="scenario file path or bundled name")
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
