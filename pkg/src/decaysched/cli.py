"""Command-line entry point: ``decaysched {solve,greedy,compare,bounds,bench}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .bench import BenchConfig, run_bench
from .bounds import BOUND_COLUMNS, check_bounds
from .dp import DEFAULT_CAP, StateSpaceError, evaluate_policy_exact, solve_optimal
from .greedy import GreedyPolicy
from .io import load_instance
from .model import ValidationError
from .simulate import compare_policies_crn, run_policy_on_sample, sample_service_times, write_traces

EXIT_INPUT = 2
EXIT_TOO_LARGE = 3


def _num(x: float) -> str:
    return f"{x:.12g}"


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    table = solve_optimal(inst, cap=args.cap)
    print(f"optimal_value\t{_num(table.value0)}")
    first = table.action(inst.initial_state)
    print(f"first_action\t{','.join(map(str, first.jobs)) or '-'}")
    if args.policy:
        with open(args.policy, "w") as fp:
            table.export(fp)
    return 0


def _cmd_greedy(args) -> int:
    inst = load_instance(args.instance)
    print(f"greedy_value\t{_num(evaluate_policy_exact(inst, GreedyPolicy(inst), cap=args.cap))}")
    return 0


def _cmd_compare(args) -> int:
    inst = load_instance(args.instance)
    table = solve_optimal(inst, cap=args.cap)
    greedy = GreedyPolicy(inst)
    res = compare_policies_crn(inst, table, greedy, args.reps, args.seed)
    exact_g = evaluate_policy_exact(inst, greedy, cap=args.cap)
    print(f"replications\t{res.n_reps}")
    print(f"seed\t{args.seed}")
    print(f"mean_optimal\t{_num(res.mean_a)}")
    print(f"mean_greedy\t{_num(res.mean_b)}")
    print(f"ratio\t{_num(res.ratio)}")
    print(f"mean_difference\t{_num(res.mean_diff)}")
    print(f"difference_stderr\t{_num(res.diff_stderr)}")
    print(f"exact_optimal\t{_num(table.value0)}")
    print(f"exact_greedy\t{_num(exact_g)}")
    if args.trace:
        traces = [run_policy_on_sample(inst, greedy, sample_service_times(inst, args.seed, r))
                  for r in range(args.reps)]
        with open(args.trace, "w", newline="") as fp:
            write_traces(fp, traces)
    return 0


def _cmd_bounds(args) -> int:
    inst = load_instance(args.instance)
    rep = check_bounds(inst, cap=args.cap)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(BOUND_COLUMNS)
    w.writerow(rep.csv_row())
    return 0


def _cmd_bench(args) -> int:
    cfg = BenchConfig.load(args.config)
    if args.seed is not None:
        cfg = BenchConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    text = run_bench(cfg)
    Path(args.out).write_text(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="decaysched", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress and skipped instances")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_instance(name, helptext):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("instance", help="instance JSON file")
        p.add_argument("--cap", type=float, default=DEFAULT_CAP,
                       help="limit on estimated (state, action) evaluations")
        return p

    p = with_instance("solve", "optimal expected reward by backward induction")
    p.add_argument("--policy", metavar="TSV", help="also write the policy table here")
    p.set_defaults(func=_cmd_solve)

    p = with_instance("greedy", "exact expected reward of the greedy policy")
    p.set_defaults(func=_cmd_greedy)

    p = with_instance("compare", "simulate optimal and greedy on common service times")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", metavar="CSV", help="write per-job greedy traces here")
    p.set_defaults(func=_cmd_compare)

    p = with_instance("bounds", "Delta, Delta_UB, decay time-scale and ratio verdicts as CSV")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("bench", help="run a benchmark sweep from a JSON config")
    p.add_argument("config", help="benchmark config JSON")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StateSpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
