"""Command-line entry point: ``blds {gen,solve,bench,simulate,reduce,verify}``.

Exit status is 0 on success, 1 when an instance is invalid or infeasible (or
a check fails), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from blds import io
from blds.bounds import fast_bounds, greedy_bounds
from blds.checks import run_checks
from blds.harness import (
    DEFAULT_SEED,
    GenConfig,
    draw_solvable,
    run_benchmark,
    write_aggregates_csv,
    write_report_csv,
)
from blds.model import ValidationError, mask_of
from blds.objective import Infeasible
from blds.plotting import emit_bound_curve, emit_histogram
from blds.simulate import (
    BadMatrix,
    consensus_gap,
    empirical_error,
    limit_belief,
    nonbayes_limit,
    run_bayes,
    run_nonbayes,
)
from blds.solvers import FastGreedyConfig, TooLarge, exact_solve, fast_greedy_solve, greedy_solve, reduce_set_cover

log = logging.getLogger("blds")


def default_seed() -> int:
    env = os.environ.get("BLDS_SEED")
    return int(env) if env else DEFAULT_SEED


def rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def int_list(text: str) -> list[int]:
    """``"1,5,10"`` or an inclusive range ``"0..13"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected '1,5,10' or '0..13', got {text!r}")


def _gen_args(p: argparse.ArgumentParser, count: int) -> None:
    p.add_argument("--n", type=int, default=10, help="number of sources")
    p.add_argument("--m", type=int, default=15, help="number of states")
    p.add_argument("--cost-max", type=int, default=10)
    p.add_argument("--count", type=int, default=count)
    p.add_argument("--seed", type=int, default=None, help="defaults to $BLDS_SEED or a fixed seed")
    p.add_argument("--mode", choices=["raw", "realizable"], default="raw")
    p.add_argument("--include-prob", type=rational, default=Fraction(1, 2))
    p.add_argument("--per-instance-costs", action="store_true",
                   help="draw costs per instance instead of once per seed")


def _config(args, R: int) -> GenConfig:
    return GenConfig(
        n=args.n, m=args.m, R=R, cost_max=args.cost_max, count=args.count,
        seed=default_seed() if args.seed is None else args.seed,
        mode=args.mode, include_prob=args.include_prob,
        fixed_costs=not args.per_instance_costs,
    )


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_gen(args) -> int:
    cfg = _config(args, args.R)
    out = Path(args.out)
    if args.count == 1 and out.suffix == ".json":
        inst, _ = draw_solvable(cfg, args.index)
        io.dump_instance(inst, out)
        return 0
    out.mkdir(parents=True, exist_ok=True)
    for idx in range(args.index, args.index + args.count):
        inst, _ = draw_solvable(cfg, idx)
        io.dump_instance(inst, out / f"instance_R{args.R}_{idx:04d}.json")
    return 0


def cmd_solve(args) -> int:
    inst = io.load_instance(args.instance)
    if args.algo == "greedy":
        sol, trace = greedy_solve(inst)
        payload = io.solution_to_dict(sol, trace, greedy_bounds(inst, trace))
    elif args.algo == "fast":
        sol, trace = fast_greedy_solve(inst, FastGreedyConfig(args.epsilon))
        payload = io.solution_to_dict(sol, trace, fast_bounds(inst, trace, args.epsilon))
        payload["epsilon"] = str(args.epsilon)
    else:
        payload = io.solution_to_dict(exact_solve(inst))
    payload["algorithm"] = args.algo
    _emit(payload, args.out)
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args, args.R[0])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(R, idx):
        if idx + 1 == args.count:
            log.info("R=%d done", R)

    report = run_benchmark(cfg, args.R, args.epsilon, progress=progress)
    with open(out / "report.csv", "w", newline="") as fh:
        write_report_csv(report, fh)
    with open(out / "aggregates.csv", "w", newline="") as fh:
        write_aggregates_csv(report, fh)
    for R in args.hist_R if args.hist_R is not None else args.R:
        if R in report.R_values():
            for which in ("greedy", "fast"):
                emit_histogram(report, R, which, args.bins, out)
    emit_bound_curve(report, out)
    print(json.dumps(report.aggregates(), indent=2))
    return 0


def cmd_simulate(args) -> int:
    selected = mask_of(args.select)
    if args.network:
        with open(args.network) as fh:
            network = io.network_from_dict(json.load(fh))
        traj = run_nonbayes(network, selected, args.true_state, args.steps, args.seed)
        limit = nonbayes_limit(network, selected, args.true_state)
        summary = {
            "final": traj.final.tolist(),
            "limit": limit.tolist(),
            "consensus_gap": consensus_gap(traj.final),
        }
        labels = [f"theta{q + 1}" for q in range(network.m)]
    else:
        inst = io.load_instance(args.instance)
        traj = run_bayes(inst, selected, args.true_state, args.steps, args.seed)
        summary = {
            "final": traj.final.tolist(),
            "limit": [str(x) for x in limit_belief(inst, selected, args.true_state)],
            "empirical_error": empirical_error(traj, args.true_state),
        }
        labels = list(inst.labels)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            io.write_trajectory_csv(traj, labels, fh)
    else:
        io.write_trajectory_csv(traj, labels, sys.stdout)
    print(json.dumps(summary), file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_reduce(args) -> int:
    inst = reduce_set_cover(io.load_setcover(args.setcover))
    _emit(io.instance_to_dict(inst), args.out)
    return 0


def cmd_verify(args) -> int:
    inst = io.load_instance(args.instance)
    results = run_checks(inst, args.epsilon)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name}  ({r.checked} checked, {r.violations} violations)")
    return 0 if all(r.ok for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blds", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write random instances as JSON")
    _gen_args(p, count=1)
    p.add_argument("--R", type=int, default=0)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True, help="a .json file (count 1) or a directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one instance and print solution and bounds")
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", choices=["greedy", "fast", "exact"], default="greedy")
    p.add_argument("--epsilon", type=rational, default=Fraction(1, 10))
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="benchmark campaign with CSV and SVG outputs")
    _gen_args(p, count=500)
    p.add_argument("--R", type=int_list, default=list(range(14)), help="e.g. 0..13 or 1,5,10")
    p.add_argument("--hist-R", type=int_list, default=[1, 5, 10])
    p.add_argument("--epsilon", type=rational, default=Fraction(1, 10))
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", help="simulate beliefs for a selected source set")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance")
    src.add_argument("--network")
    p.add_argument("--select", type=int_list, default=[], help="comma-separated source indices")
    p.add_argument("--true-state", type=int, default=0)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="trajectory CSV path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reduce", help="turn a set-cover JSON into a BLDS instance")
    p.add_argument("--setcover", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify", help="run exhaustive property checks on an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--epsilon", type=rational, default=Fraction(1, 10))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "seed", 0) is None and args.command == "simulate":
        args.seed = default_seed()
    try:
        return args.func(args)
    except (ValidationError, Infeasible, BadMatrix, TooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
