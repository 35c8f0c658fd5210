"""Command-line entry points: generate, run, sweep, dynamic.

Exit codes: 0 success, 2 usage error, 3 size guard or infeasible request,
4 invariant violation or internal fault.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from . import scenario as scn
from .baselines import BaselineParams, SizeGuardExceeded
from .experiments import METHODS, InvariantViolation, RunParams, profile, run_dynamic, run_static
from .mca import MCAParams
from .metrics import to_csv
from .protocol import AuctionParams
from .trace import Trace, level_from_env
from .wdp import FlsParams

log = logging.getLogger("obsnet")

EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_INVARIANT = 0, 2, 3, 4
LEVEL_COLUMNS = ["level1_ms", "level2_ms", "level3_ms"]
DYNAMIC_COLUMNS = ["nt", "at"]


class UsageError(Exception):
    pass


def _int_list(text: str) -> List[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("expected at least one value")
    return out


def _methods(text: str) -> List[str]:
    out = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return out


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=10, help="cluster count for tca (default 10)")
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--y", type=int, default=10)
    p.add_argument("--max-tasks", type=int, default=400,
                   help="size guard of the centralized exact model (default 400)")
    p.add_argument("--timing", choices=("wall", "off"), default="wall",
                   help="'off' blanks runtime columns so reruns are byte-identical")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obsnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded scenario (and events for dynamic runs)")
    g.add_argument("--profile", choices=sorted(scn.PROFILES), required=True)
    g.add_argument("--tasks", type=int, help="task count for a static scenario")
    g.add_argument("--dynamic", action="store_true", help="also write events.json")
    g.add_argument("--rounds", type=int, help="injection rounds for a dynamic scenario")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="allocate one static scenario with one method")
    r.add_argument("--scenario", required=True)
    r.add_argument("--method", choices=METHODS, required=True)
    r.add_argument("--seed", type=int, default=0, help="seed for the randomised WDP search")
    r.add_argument("--out", required=True)
    _add_solver_flags(r)

    s = sub.add_parser("sweep", help="methods x task counts x seeds on generated scenarios")
    s.add_argument("--profile", choices=sorted(scn.PROFILES), default="small")
    s.add_argument("--tasks", type=_int_list, default=[50, 100, 200])
    s.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    s.add_argument("--methods", type=_methods, default=list(METHODS))
    s.add_argument("--repeats", type=int, default=3, help="timing repeats; the median is kept")
    s.add_argument("--out", required=True)
    _add_solver_flags(s)

    d = sub.add_parser("dynamic", help="replay task arrivals round by round")
    src = d.add_mutually_exclusive_group()
    src.add_argument("--profile", choices=sorted(scn.PROFILES))
    src.add_argument("--scenario")
    d.add_argument("--events", help="events.json (with --scenario)")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--methods", type=_methods, default=list(METHODS))
    d.add_argument("--out", required=True)
    _add_solver_flags(d)
    return parser


def _params(args, seed: int) -> RunParams:
    if args.k < 1:
        raise UsageError("--k must be at least 1")
    fls = FlsParams(rho=args.rho, sigma=args.sigma, y=args.y, rng_seed=seed)
    return RunParams(
        mca=MCAParams(auction=AuctionParams(fls=fls)),
        baseline=BaselineParams(auction=AuctionParams(fls=fls, solver="exact"),
                                max_tasks=args.max_tasks),
        k=args.k,
        timing=args.timing == "wall",
    )


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_trace(trace: Trace, path: Path) -> None:
    if trace.enabled:
        trace.write(path)


def cmd_generate(args) -> int:
    cfg = profile(args.profile)
    if args.dynamic and args.tasks is not None:
        raise UsageError("--tasks applies to static scenarios; dynamic ones use the profile's "
                         "initial tasks")
    if not args.dynamic and args.rounds is not None:
        raise UsageError("--rounds needs --dynamic")
    cfg = replace(cfg, seed=args.seed)
    if args.tasks is not None:
        if args.tasks < 0:
            raise UsageError("--tasks must be nonnegative")
        cfg = replace(cfg, task_count=args.tasks)
    if args.rounds is not None:
        cfg = replace(cfg, injection_rounds=args.rounds)
    out = _out(args)
    if args.dynamic:
        sc, events = scn.generate_dynamic(cfg)
        scn.save_events(events, out / "events.json")
    else:
        sc = scn.generate_static(cfg)
    problems = sc.validate()
    if problems:
        raise InvariantViolation("; ".join(problems[:5]))
    scn.save(sc, out / "scenario.json")
    log.info("wrote %s (%d tasks, %d resources)", out / "scenario.json", len(sc.tasks),
             len(sc.resources))
    return EXIT_OK


def _load(path: str) -> scn.Scenario:
    if not Path(path).is_file():
        raise UsageError(f"scenario file {path} not found")
    sc = scn.load(path)
    problems = sc.validate()
    if problems:
        raise scn.ScenarioError("invalid scenario: " + "; ".join(problems[:5]))
    return sc


def cmd_run(args) -> int:
    sc = _load(args.scenario)
    params = _params(args, args.seed)
    trace = Trace(level_from_env())
    result = run_static(sc, args.method, params, trace)
    result.metrics.seed = args.seed
    out = _out(args)
    extra = LEVEL_COLUMNS if args.method == "mca" else []
    (out / "results.csv").write_text(to_csv([result.metrics], extra))
    _write_trace(trace, out / "trace.ndjson")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = profile(args.profile)
    out = _out(args)
    level = level_from_env()
    rows = []
    for n in args.tasks:
        for seed in args.seeds:
            sc = scn.generate_static(replace(cfg, task_count=n, seed=seed))
            params = _params(args, seed)
            for method in args.methods:
                trace = Trace(level)
                try:
                    run = run_static(sc, method, params, trace,
                                     repeats=args.repeats if params.timing else 1)
                except SizeGuardExceeded as exc:
                    log.warning("skipping %s n=%d seed=%d: %s", method, n, seed, exc)
                    continue
                m = run.metrics
                if method != "mca":
                    m.extra = {c: None for c in LEVEL_COLUMNS}
                rows.append(m)
                if trace.enabled:
                    tdir = out / "traces"
                    tdir.mkdir(exist_ok=True)
                    trace.write(tdir / f"{method}_n{n}_s{seed}.ndjson")
    (out / "sweep.csv").write_text(to_csv(rows, LEVEL_COLUMNS))
    return EXIT_OK


def cmd_dynamic(args) -> int:
    if args.scenario:
        if not args.events:
            raise UsageError("--scenario needs --events")
        sc = _load(args.scenario)
        if not Path(args.events).is_file():
            raise UsageError(f"events file {args.events} not found")
        events = scn.load_events(args.events)
        seed = args.seed
    else:
        if args.events:
            raise UsageError("--events needs --scenario")
        cfg = replace(profile(args.profile or "small"), seed=args.seed)
        sc, events = scn.generate_dynamic(cfg)
        seed = args.seed
    params = _params(args, seed)
    out = _out(args)
    level = level_from_env()
    rows = []
    for method in args.methods:
        trace = Trace(level)
        run = run_dynamic(sc, events, method, params, trace)
        rows.extend(run.metrics(seed))
        if trace.enabled:
            tdir = out / "traces"
            tdir.mkdir(exist_ok=True)
            trace.write(tdir / f"{method}_s{seed}.ndjson")
    (out / "dynamic.csv").write_text(to_csv(rows, DYNAMIC_COLUMNS))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "dynamic": cmd_dynamic}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="obsnet: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, scn.ScenarioError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"obsnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SizeGuardExceeded as exc:
        print(f"obsnet {args.command}: refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except InvariantViolation as exc:
        print(f"obsnet {args.command}: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except Exception as exc:  # anything else is an internal fault
        print(f"obsnet {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
