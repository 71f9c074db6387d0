"""Command-line harness: ``badmm solve``, ``badmm compare`` and ``badmm logistic``.

Every option can also come from a flat ``key = value`` config file given
with ``--config``; keys are the long option names without the leading
dashes.  Command-line values override the config file, which overrides the
built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .core import (
    Schedule,
    SolverConfig,
    StopRule,
    TransportProblem,
    Variant,
    load_cost_matrix,
    uniform_cost_matrix,
)
from .logistic import composite_objective, load_logistic_csv, make_synthetic, solve_logistic
from .oracle import MAX_N, assignment_bruteforce
from .transport import solve


class UsageError(Exception):
    """Invalid input that should end the program with exit status 1."""


def _flag(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _add_transport_options(p: argparse.ArgumentParser) -> None:
    # every default is None so that config-file values can fill the gaps
    p.add_argument("--n", type=int, help="number of columns (and rows unless --m is given)")
    p.add_argument("--m", type=int, help="number of rows")
    p.add_argument("--seed", type=int, help="seed of the random cost matrix")
    p.add_argument("--cost-file", help="cost matrix as CSV, or raw binary with a .bin suffix")
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--rho", type=float)
    p.add_argument("--tau-ratio", type=float, help="dual step tau = tau-ratio * rho")
    p.add_argument("--rho-x", type=float)
    p.add_argument("--rho-z", type=float)
    p.add_argument("--gamma", type=float, help="residual weight used by the diagnostics")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--schedule", choices=[s.value for s in Schedule])
    p.add_argument("--stop-rule", choices=[r.value for r in StopRule],
                   help="combine the primal and dual residuals by max or sum")
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--check-oracle", action="store_true", default=None,
                   help=f"compare with the exact optimum (square n <= {MAX_N})")
    p.add_argument("--no-timing", action="store_true", default=None,
                   help="write 0 in the elapsed_sec column so traces are reproducible")
    p.add_argument("--config", help="flat key = value file of option defaults")


TRANSPORT_DEFAULTS = {
    "n": 64,
    "m": None,
    "seed": 0,
    "cost_file": None,
    "variant": Variant.BADMM_KL.value,
    "rho": 1e-3,
    "tau_ratio": 1.0,
    "rho_x": 0.0,
    "rho_z": 0.0,
    "gamma": 0.125,
    "max_iters": 2000,
    "tol": 1e-4,
    "schedule": Schedule.CONSTANT.value,
    "stop_rule": StopRule.MAX.value,
    "c1": 1.0,
    "c2": 1.0,
    "check_oracle": False,
    "no_timing": False,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="badmm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one mass-transportation instance")
    _add_transport_options(p)
    p.add_argument("--trace-out", help="write the per-iteration trace CSV here")
    p.set_defaults(handler=cmd_solve, defaults=dict(TRANSPORT_DEFAULTS, trace_out=None))

    p = sub.add_parser("compare", help="BADMM against ADMM on the same instances")
    _add_transport_options(p)
    p.add_argument("--seeds", type=int, help="run seeds 0 .. SEEDS-1")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--out", help="write the CSV here instead of standard output")
    p.set_defaults(
        handler=cmd_compare,
        defaults=dict(TRANSPORT_DEFAULTS, seeds=5, jobs=1, out=None),
    )

    p = sub.add_parser("logistic", help="l1-regularized logistic regression")
    p.add_argument("--data", help="CSV of samples with the +1/-1 label in the last column")
    p.add_argument("--samples", type=int, help="synthetic sample count")
    p.add_argument("--features", type=int, help="synthetic feature count")
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="lam", type=float, help="l1 weight")
    p.add_argument("--rho", type=float)
    p.add_argument("--rho-x", type=float, help="linearization weight (default: curvature bound)")
    p.add_argument("--tau-ratio", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--trace-out")
    p.add_argument("--config")
    p.set_defaults(
        handler=cmd_logistic,
        defaults={
            "data": None,
            "samples": 50,
            "features": 10,
            "seed": 0,
            "lam": 0.1,
            "rho": 1.0,
            "rho_x": None,
            "tau_ratio": 1.0,
            "max_iters": 20000,
            "tol": 1e-8,
            "trace_out": None,
        },
    )
    return parser


def _converters(parser: argparse.ArgumentParser, command: str) -> dict:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    conv = {}
    for action in sub.choices[command]._actions:
        if not action.option_strings or action.dest in ("help", "config"):
            continue
        key = action.option_strings[-1].lstrip("-")
        if isinstance(action, argparse._StoreTrueAction):
            fn = _flag
        else:
            fn = action.type or str
        conv[key] = (action.dest, fn, action.choices)
    return conv


def read_config(path: str, conv: dict) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep or key not in conv:
            raise UsageError(f"{path}:{lineno}: unknown setting {line!r}")
        dest, fn, choices = conv[key]
        try:
            value = fn(raw.strip())
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {key}: {exc}") from None
        if choices is not None and value not in choices:
            raise UsageError(f"{path}:{lineno}: {key} must be one of {', '.join(choices)}")
        values[dest] = value
    return values


def resolve_options(parser, args) -> dict:
    opts = dict(args.defaults)
    if args.config:
        opts.update(read_config(args.config, _converters(parser, args.command)))
    for key in args.defaults:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def make_config(opts: dict, variant=None) -> SolverConfig:
    return SolverConfig(
        rho=opts["rho"],
        tau_ratio=opts["tau_ratio"],
        rho_x=opts["rho_x"],
        rho_z=opts["rho_z"],
        gamma=opts["gamma"],
        max_iters=opts["max_iters"],
        tol=opts["tol"],
        variant=variant or opts["variant"],
        schedule=opts["schedule"],
        c1=opts["c1"],
        c2=opts["c2"],
        seed=opts["seed"],
        stop_rule=opts["stop_rule"],
    )


def make_problem(opts: dict, seed: int) -> TransportProblem:
    if opts["cost_file"]:
        path = opts["cost_file"]
        try:
            C = load_cost_matrix(path)
        except OSError as exc:
            raise UsageError(f"{path}: {exc.strerror or exc}") from None
    else:
        n = opts["n"]
        m = opts["m"] if opts["m"] is not None else n
        if n < 1 or m < 1:
            raise UsageError("--m and --n must be positive")
        C = uniform_cost_matrix(m, n, seed)
    if C.shape[0] == C.shape[1]:
        return TransportProblem.assignment(C)
    return TransportProblem.balanced(C)


def oracle_value(problem: TransportProblem) -> float:
    m, n = problem.shape
    if m != n or n > MAX_N:
        raise UsageError(f"--check-oracle needs a square instance with n <= {MAX_N}, got {m}x{n}")
    return assignment_bruteforce(problem.C)[1]


def relative_gap(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), 1e-12)


def cmd_solve(opts: dict) -> int:
    problem = make_problem(opts, opts["seed"])
    config = make_config(opts)
    oracle = oracle_value(problem) if opts["check_oracle"] else None
    start = time.perf_counter()
    result = solve(problem, config, timing=not opts["no_timing"])
    wall = time.perf_counter() - start
    if opts["trace_out"]:
        try:
            result.trace.save(opts["trace_out"])
        except OSError as exc:
            raise UsageError(f"{opts['trace_out']}: {exc.strerror or exc}") from None
    line = (
        f"variant={config.variant.value} n={problem.shape[1]} iters={result.iterations} "
        f"objective={result.objective:.10g} time={wall:.3f}s reason={result.reason}"
    )
    if oracle is not None:
        line += f" oracle={oracle:.10g} gap={relative_gap(result.objective, oracle):.3g}"
    print(line)
    return 0


def _compare_one(job):
    opts, seed, variant = job
    problem = make_problem(opts, seed)
    result = solve(problem, make_config(opts, variant), timing=not opts["no_timing"])
    row = {
        "seed": seed,
        "variant": variant,
        "iters": result.iterations,
        "elapsed_sec": result.trace[-1].elapsed_sec,
        "objective": result.objective,
    }
    if opts["check_oracle"]:
        row["oracle_gap"] = relative_gap(result.objective, oracle_value(problem))
    return row


def cmd_compare(opts: dict) -> int:
    if opts["seeds"] < 1 or opts["jobs"] < 1:
        raise UsageError("--seeds and --jobs must be positive")
    if opts["check_oracle"]:
        oracle_value(make_problem(opts, 0))  # fail fast on unsupported sizes
    variants = [Variant.BADMM_KL.value, Variant.ADMM.value]
    jobs = [(opts, seed, v) for seed in range(opts["seeds"]) for v in variants]
    if opts["jobs"] == 1:
        rows = [_compare_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=opts["jobs"]) as pool:
            # map keeps submission order, so output does not depend on scheduling
            rows = list(pool.map(_compare_one, jobs))
    columns = ["seed", "variant", "iters", "elapsed_sec", "objective"]
    if opts["check_oracle"]:
        columns.append("oracle_gap")
    for v in variants:
        mine = [r for r in rows if r["variant"] == v]
        median = {"seed": "median", "variant": v}
        for key in columns[2:]:
            median[key] = statistics.median(r[key] for r in mine)
        rows.append(median)

    def fmt(x):
        return format(x, ".17g") if isinstance(x, float) else str(x)

    out = sys.stdout
    try:
        if opts["out"]:
            out = open(opts["out"], "w", newline="")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow(fmt(r[c]) for c in columns)
    except OSError as exc:
        raise UsageError(f"{opts['out']}: {exc.strerror or exc}") from None
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_logistic(opts: dict) -> int:
    if opts["data"]:
        try:
            problem = load_logistic_csv(opts["data"], opts["lam"])
        except OSError as exc:
            raise UsageError(f"{opts['data']}: {exc.strerror or exc}") from None
    else:
        problem = make_synthetic(opts["samples"], opts["features"], opts["seed"], opts["lam"])
    result = solve_logistic(
        problem,
        rho=opts["rho"],
        rho_x=opts["rho_x"],
        tau_ratio=opts["tau_ratio"],
        max_iters=opts["max_iters"],
        tol=opts["tol"],
    )
    if opts["trace_out"]:
        try:
            result.trace.save(opts["trace_out"])
        except OSError as exc:
            raise UsageError(f"{opts['trace_out']}: {exc.strerror or exc}") from None
    l1 = problem.lam * float(abs(result.z).sum())
    print(
        f"objective={composite_objective(problem, result.z):.10g} l1={l1:.10g} "
        f"consensus_gap={result.consensus_gap:.3g} iters={result.state.t} reason={result.reason}"
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(parser, args)
        return args.handler(opts)
    except (UsageError, ValueError) as exc:
        print(f"badmm: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
