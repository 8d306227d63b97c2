"""Command-line experiment runner.

Subcommands::

    sacd run      run one solver, write a per-iteration CSV and a JSON summary
    sacd compare  compare the metric columns of two CSV logs
    sacd stats    print dataset dimensions and density
    sacd costs    evaluate the analytic cost model

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import engine, lasso, svm
from .datasets import DATA_DIR_ENV, dataset_stats, load_libsvm
from .errors import NumericalError, SacdError
from .records import read_csv, write_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2
PROBLEMS = ("lasso", "svm-l1", "svm-l2")
SIGMA_MIN_DENSE_LIMIT = 2000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="sacd", description="Synchronization-avoiding coordinate descent runner.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a solver on a LIBSVM dataset")
    r.add_argument("--problem", choices=PROBLEMS, default="lasso")
    r.add_argument("--solver", choices=sorted(engine.SOLVERS), required=True)
    r.add_argument("--data", required=True,
                   help=f"LIBSVM file; relative paths also searched in ${DATA_DIR_ENV}")
    r.add_argument("--features", type=int, default=None, help="number of columns")
    r.add_argument("--iters", "-H", type=int, required=True, help="iterations H")
    r.add_argument("--unroll", "-s", type=int, default=None, help="unroll depth s")
    r.add_argument("--block-size", "--mu", type=int, default=1, help="block size mu")
    r.add_argument("--lambda", dest="lam", default=None,
                   help="regularization: a number or '100sigmamin' (Lasso default)")
    r.add_argument("--workers", "-P", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--log-every", type=int, default=1)
    r.add_argument("--out", default=None, help="CSV log path (default: stdout)")
    r.add_argument("--summary", default=None, help="JSON summary path")
    r.add_argument("--pair", action="store_true",
                   help="also run the non-SA counterpart and report the relative error")
    r.add_argument("--pair-out", default=None, help="CSV log of the paired run")
    r.add_argument("--dump-state", default=None, help="write the final iterate to .npz")

    c = sub.add_parser("compare", help="compare two CSV logs")
    c.add_argument("csv_a")
    c.add_argument("csv_b")
    c.add_argument("--tolerance", type=float, default=1e-10)

    st = sub.add_parser("stats", help="dataset dimensions and density")
    st.add_argument("--data", required=True)
    st.add_argument("--features", type=int, default=None)

    k = sub.add_parser("costs", help="evaluate the cost model")
    k.add_argument("--solver", choices=sorted(engine.SOLVERS), required=True)
    k.add_argument("--iters", "-H", type=int, required=True)
    k.add_argument("--unroll", "-s", type=int, default=1)
    k.add_argument("--block-size", "--mu", type=int, default=1)
    k.add_argument("--workers", "-P", type=int, default=1)
    k.add_argument("--rows", "-m", type=int, required=True)
    k.add_argument("--cols", "-n", type=int, required=True)
    k.add_argument("--density", "-f", type=float, default=1.0)
    return p


def sigma_min(dataset):
    m, n = dataset.A.shape
    if min(m, n) > SIGMA_MIN_DENSE_LIMIT:
        raise UsageError(
            f"100sigmamin needs a dense SVD; min(m, n) = {min(m, n)} exceeds "
            f"{SIGMA_MIN_DENSE_LIMIT}, pass --lambda explicitly")
    return float(np.linalg.svd(dataset.A.to_dense(), compute_uv=False).min())


def resolve_lambda(arg, problem, dataset):
    if arg is None:
        arg = "100sigmamin" if problem == "lasso" else "1"
    if arg.lower() == "100sigmamin":
        return 100.0 * sigma_min(dataset)
    try:
        lam = float(arg)
    except ValueError:
        raise UsageError(f"--lambda must be a number or 100sigmamin, got {arg!r}") from None
    if not math.isfinite(lam):
        raise UsageError("--lambda must be finite")
    return lam


def check_combination(args):
    spec = engine.solver_spec(args.solver)
    if (spec.family == "lasso") != (args.problem == "lasso"):
        raise UsageError(f"solver {args.solver} does not solve problem {args.problem}")
    if spec.sa and args.unroll is None:
        raise UsageError(f"{args.solver} requires --unroll")
    if args.unroll is not None and args.unroll < 1:
        raise UsageError("--unroll must be >= 1")
    if args.iters < 1 or args.workers < 1 or args.block_size < 1:
        raise UsageError("--iters, --workers and --block-size must be >= 1")
    if args.log_every < 1:
        raise UsageError("--log-every must be >= 1")
    if args.pair and not spec.sa:
        raise UsageError("--pair needs an SA solver")
    return spec


def final_objective(spec, problem, x):
    if spec.family == "lasso":
        return lasso.lasso_objective(problem, x)
    return svm.primal_objective(problem, x)


def _run_one(solver, dataset, args, lam):
    loss = "L2" if args.problem == "svm-l2" else "L1"
    config = engine.RunConfig(H=args.iters, s=args.unroll, block_size=args.block_size,
                              lam=lam, loss=loss, seed=args.seed, log_every=args.log_every)
    result = engine.run_distributed(solver, dataset, args.workers, config)
    problem = engine.build_problem(solver, dataset, config)
    return result, problem


def _summary(solver, result, objective):
    last = result.records[-1] if result.records else None
    return {
        "solver": solver,
        "final_metric": None if last is None else last.metric,
        "final_objective": objective,
        "rounds": result.stats.rounds,
        "words": result.stats.words,
        "monitor_rounds": result.stats.monitor_rounds,
        "seconds": None if last is None else last.seconds,
    }


def dump_state(path, spec, result, problem):
    fields = {"x": result.x, "lam": problem.lam}
    st = result.state
    if spec.family == "svm":
        fields.update(alpha=st.alpha, loss=problem.loss)
    elif spec.accelerate:
        fields.update(theta=st.theta, y=st.y, z=st.z)
    np.savez(path, **fields)


def cmd_run(args):
    spec = check_combination(args)
    dataset = load_libsvm(args.data, args.features)
    lam = resolve_lambda(args.lam, args.problem, dataset)
    result, problem = _run_one(args.solver, dataset, args, lam)
    objective = final_objective(spec, problem, result.x)
    summary = {"problem": args.problem, "data": args.data, "iters": args.iters,
               "unroll": args.unroll, "block_size": args.block_size, "lambda": lam,
               "workers": args.workers, "seed": args.seed,
               **_summary(args.solver, result, objective)}

    if args.pair:
        base, _ = _run_one(spec.baseline, dataset, args, lam)
        base_obj = final_objective(spec, problem, base.x)
        summary["baseline"] = _summary(spec.baseline, base, base_obj)
        summary["relative_objective_error"] = relative_error(base_obj, objective)
        if args.pair_out:
            write_csv(base.records, args.pair_out)

    if args.out:
        write_csv(result.records, args.out)
    else:
        write_csv(result.records, sys.stdout)
    if args.dump_state:
        dump_state(args.dump_state, spec, result, problem)
    text = json.dumps(summary, indent=2)
    if args.summary:
        with open(args.summary, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def relative_error(ref, other):
    if ref == other:
        return 0.0
    return abs(ref - other) / abs(ref) if ref != 0.0 else abs(other)


def compare_records(a, b):
    """Max and final relative metric difference of two logs on one grid."""
    if [r.iteration for r in a] != [r.iteration for r in b]:
        raise UsageError("logs were recorded on different iteration grids")
    if not a:
        return {"points": 0, "max_relative": 0.0, "final_relative": 0.0}
    diffs = [relative_error(ra.metric, rb.metric) for ra, rb in zip(a, b)]
    return {"points": len(a), "max_relative": max(diffs), "final_relative": diffs[-1]}


def cmd_compare(args):
    try:
        a, b = read_csv(args.csv_a), read_csv(args.csv_b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = compare_records(a, b)
    report["tolerance"] = args.tolerance
    report["within"] = report["max_relative"] <= args.tolerance
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["within"] else EXIT_USAGE


def cmd_stats(args):
    st = dataset_stats(load_libsvm(args.data, args.features))
    print(json.dumps({"rows": st.m, "cols": st.n, "nnz": st.nnz,
                      "density_percent": st.density_percent}, indent=2))
    return EXIT_OK


def cmd_costs(args):
    spec = engine.solver_spec(args.solver)
    out = {}
    for name in dict.fromkeys((spec.baseline, args.solver)):
        c = engine.predict_costs(name, args.iters, args.unroll, args.block_size,
                                 args.workers, args.rows, args.cols, args.density)
        out[name] = {"F": c.F, "M": c.M, "L": c.L, "W": c.W}
    print(json.dumps(out, indent=2))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "stats": cmd_stats, "costs": cmd_costs}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"sacd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, SacdError, OSError) as exc:
        print(f"sacd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
