"""Command-line front end and experiment harness.

Subcommands:

* ``analyze-chain``    exact spectral summary plus a trace-variance sweep (JSON)
* ``estimate``         replicated adaptive/static mean estimation (JSON)
* ``count-colorings``  telescoping coloring counter on a graph file (JSON)
* ``gen-planted``      planted-partition graph generator (graph JSON + sidecar)
* ``bench-compare``    method-by-problem benchmark table (CSV)

Exit codes: 0 success, 2 configuration error, 3 guard rejection (size or
ergodicity), 4 statistical-run failure.

All outputs are pure functions of (flags, files, seed); wall-clock columns
and report durations are the one deliberate exception and are therefore kept
out of the JSON renderings (the CSV keeps its wall_clock_s column, documented
as non-reproducible).  Relative output paths resolve against the
``DYNAMITE_OUT_DIR`` environment variable when it is set.

JSON layouts are frozen by golden tests:

* estimate: {config, reports: [EstimateReport...], aggregate}
* EstimateReport: estimate, termination, seed, epsilon, delta, lambda_bound,
  trace_length, function_range, total_base_steps, warmup_steps, schedule,
  iterations (run durations are intentionally omitted).
* count-colorings: CountResult plus optional {exact, relative_error}.
* graph files: {"n": int, "edges": [[u, v], ...]} with 0-indexed vertices.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .adaptive import dynamite, mcmc_pro, warm_start
from .chains import ScalarFunction, indicator_function, make_cycle, make_cycle_function, make_two_state_uniform
from .coloring import Graph, brute_force_count, jvv_count
from .errors import GuardError, StatisticalFailure
from .estimators import (
    ConcentrationParams,
    bernstein_sample_complexity,
    hoeffding_sample_complexity,
    static_estimate,
)
from .planted import PlantedParams, cut_set, generate
from .rng import REPLICATE, child_seed, stream
from .spectral import check_sandwich, exact_trace_variance, summarize

OUT_DIR_ENV = "DYNAMITE_OUT_DIR"

EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_STATISTICAL = 4

BENCH_COLUMNS = ["method", "problem", "batch", "steps", "mean_abs_error", "coverage", "wall_clock_s"]

CYCLE_METHODS = ("dynamite", "mcmc-pro", "static-hoeffding", "static-bernstein")
COUNT_METHODS = ("dynamite", "static-hoeffding")


class ConfigError(ValueError):
    pass


def _resolve_out(path: str) -> str:
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        path = _resolve_out(out)
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_chain(args):
    if args.chain == "cycle":
        if args.n is None:
            raise ConfigError("--chain cycle needs --n")
        return make_cycle(args.n)
    if args.chain == "two-state":
        return make_two_state_uniform()
    raise ConfigError(f"unknown chain {args.chain!r}")


def _build_function(args, kernel) -> ScalarFunction:
    if args.fn == "cycle-f":
        if args.i is None:
            raise ConfigError("--fn cycle-f needs --i")
        return make_cycle_function(kernel.n_states, args.i)
    if args.fn == "indicator":
        states = [int(s) for s in args.states.split(",")] if args.states else [1]
        return indicator_function(states)
    raise ConfigError(f"unknown function {args.fn!r}")


def _lambda_for(args, kernel, f):
    if args.lambda_bound == "oracle":
        if kernel.matrix is None:
            raise ConfigError("--lambda oracle needs a chain with an explicit matrix")
        return summarize(kernel, f).second_eigenvalue
    try:
        value = float(args.lambda_bound)
    except ValueError as exc:
        raise ConfigError(f"--lambda must be a float or 'oracle', got {args.lambda_bound!r}") from exc
    if not 0.0 <= value < 1.0:
        raise ConfigError("--lambda must lie in [0, 1)")
    return value


def cmd_analyze_chain(args) -> int:
    kernel = _build_chain(args)
    f = _build_function(args, kernel)
    summary = summarize(kernel, f)
    horizons = sorted(set(args.T or [1]))
    profiles = [exact_trace_variance(kernel, f, t, summary=summary) for t in horizons]
    payload = {
        "chain": kernel.name,
        "function": f.name,
        "spectral": summary.to_json(),
        "profiles": [p.to_json() for p in profiles],
        "sandwich": [check_sandwich(kernel, f, t, summary=summary).to_json() for t in horizons]
        if kernel.is_lazy and kernel.is_reversible
        else None,
    }
    _emit(payload, args.out)
    return 0


def _stationary_pair(summary, rng):
    pi = summary.stationary
    return int(rng.choice(len(pi), p=pi)), int(rng.choice(len(pi), p=pi))


def _run_replicate(method, kernel, f, lam, summary, args, rep_index):
    rep_seed = child_seed(args.seed, REPLICATE, rep_index)
    rng = stream(args.seed, REPLICATE, rep_index)
    if method == "warm-start":
        start = args.start if args.start is not None else 0
        report = warm_start(start, kernel, lam, summary.pi_min, f, args.epsilon, args.delta, rep_seed)
        return report.to_json()
    if method in ("mcmc-pro", "dynamite"):
        pair = _stationary_pair(summary, rng)
        fn = mcmc_pro if method == "mcmc-pro" else dynamite
        report = fn(pair, kernel, lam, f, args.epsilon, args.delta, rep_seed)
        return report.to_json()
    if method in ("static-hoeffding", "static-bernstein"):
        params = ConcentrationParams(lambda_bound=lam, value_range=f.value_range, delta_prime=args.delta, m=1)
        if method == "static-hoeffding":
            m = hoeffding_sample_complexity(params, args.epsilon)
        else:
            m = bernstein_sample_complexity(params, summary.stationary_variance, args.epsilon)
        start = _stationary_pair(summary, rng)[0]
        est = static_estimate(kernel, f, m, start, stream(rep_seed, 0))
        return {
            "estimate": est,
            "termination": "static",
            "seed": rep_seed,
            "epsilon": args.epsilon,
            "delta": args.delta,
            "lambda_bound": lam,
            "trace_length": 1,
            "function_range": [f.lo, f.hi],
            "total_base_steps": m,
            "warmup_steps": 0,
            "schedule": None,
            "iterations": [],
        }
    raise ConfigError(f"unknown method {method!r}")


def cmd_estimate(args) -> int:
    kernel = _build_chain(args)
    f = _build_function(args, kernel)
    summary = summarize(kernel, f)
    lam = _lambda_for(args, kernel, f)
    indices = range(args.replicates)
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            reports = list(pool.map(lambda r: _run_replicate(args.method, kernel, f, lam, summary, args, r), indices))
    else:
        reports = [_run_replicate(args.method, kernel, f, lam, summary, args, r) for r in indices]
    true_mean = summary.mean
    errors = [abs(rep["estimate"] - true_mean) for rep in reports]
    payload = {
        "config": {
            "chain": kernel.name,
            "function": f.name,
            "method": args.method,
            "epsilon": args.epsilon,
            "delta": args.delta,
            "lambda_bound": lam,
            "seed": args.seed,
            "replicates": args.replicates,
        },
        "reports": reports,
        "aggregate": {
            "true_mean": true_mean,
            "coverage": sum(e <= args.epsilon for e in errors) / len(errors),
            "mean_abs_error": sum(errors) / len(errors),
            "mean_steps": sum(rep["total_base_steps"] for rep in reports) / len(reports),
        },
    }
    _emit(payload, args.out)
    return 0


def cmd_count_colorings(args) -> int:
    with open(args.graph) as fh:
        graph = Graph.from_json(json.load(fh))
    lam = None
    if args.lambda_bound is not None:
        lam = float(args.lambda_bound)
        if not 0.0 <= lam < 1.0:
            raise ConfigError("--lambda must lie in [0, 1)")
    result = jvv_count(
        graph,
        args.k,
        args.epsilon,
        args.delta,
        estimator=args.estimator,
        seed=args.seed,
        lambda_bound=lam,
    )
    payload = result.to_json()
    if args.exact:
        exact = brute_force_count(graph, args.k)
        payload["exact"] = exact
        payload["relative_error"] = (
            abs(math.exp(result.log_count) - exact) / exact if exact else None
        )
    _emit(payload, args.out)
    return 0


def cmd_gen_planted(args) -> int:
    params = PlantedParams(n=args.n, communities=args.r, within_prob=args.p, cross_mass=args.q)
    pg = generate(params, args.seed)
    out = _resolve_out(args.out)
    with open(out, "w") as fh:
        json.dump(pg.graph.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    sidecar = os.path.splitext(out)[0] + ".communities.json"
    meta = {
        "communities": [int(c) for c in pg.communities],
        "params": {"n": args.n, "r": args.r, "p": args.p, "q": args.q, "seed": args.seed},
        "cut_sizes": [len(cut_set(pg, j)) for j in range(args.r)],
    }
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.stdout.write(json.dumps({"graph": out, "sidecar": sidecar}) + "\n")
    return 0


# ---------------------------------------------------------------------------
# benchmark table


def _cycle_problem(name, n, i, epsilon, delta):
    kernel = make_cycle(n)
    f = make_cycle_function(n, i)
    summary = summarize(kernel, f)
    return {
        "name": name,
        "kind": "cycle",
        "kernel": kernel,
        "f": f,
        "summary": summary,
        "epsilon": epsilon,
        "delta": delta,
        "tolerance": epsilon,
    }


def _planted_problem(name, seed, epsilon, delta):
    # tiny on purpose: the default conservative eigenvalue heuristic makes the
    # per-phase warm-up grow like n^2 k log(k^n), so n=4 keeps a batch near a second
    params = PlantedParams(n=4, communities=2, within_prob=0.9, cross_mass=0.5)
    pg = generate(params, seed)
    k = pg.graph.d_max + 2
    exact = brute_force_count(pg.graph, k)
    return {
        "name": name,
        "kind": "count",
        "graph": pg.graph,
        "k": k,
        "exact": exact,
        "epsilon": epsilon,
        "delta": delta,
        "tolerance": 1.2 * epsilon,  # additive-per-phase to relative slack
    }


def _bench_cycle_row(problem, method, batch_seed):
    kernel, f, summary = problem["kernel"], problem["f"], problem["summary"]
    lam = summary.second_eigenvalue
    eps, dlt = problem["epsilon"], problem["delta"]
    rng = stream(batch_seed, REPLICATE)
    started = time.perf_counter()
    if method in ("mcmc-pro", "dynamite"):
        pair = _stationary_pair(summary, rng)
        fn = mcmc_pro if method == "mcmc-pro" else dynamite
        report = fn(pair, kernel, lam, f, eps, dlt, batch_seed)
        est, steps = report.estimate, report.total_base_steps
    elif method in ("static-hoeffding", "static-bernstein"):
        params = ConcentrationParams(lambda_bound=lam, value_range=f.value_range, delta_prime=dlt, m=1)
        m = (
            hoeffding_sample_complexity(params, eps)
            if method == "static-hoeffding"
            else bernstein_sample_complexity(params, summary.stationary_variance, eps)
        )
        start = _stationary_pair(summary, rng)[0]
        est, steps = static_estimate(kernel, f, m, start, stream(batch_seed, 0)), m
    else:
        raise ConfigError(f"method {method!r} not applicable to cycle problems")
    err = abs(est - summary.mean)
    return steps, err, float(err <= problem["tolerance"]), time.perf_counter() - started


def _bench_count_row(problem, method, batch_seed):
    started = time.perf_counter()
    result = jvv_count(
        problem["graph"],
        problem["k"],
        problem["epsilon"],
        problem["delta"],
        estimator=method,
        seed=batch_seed,
    )
    rel = abs(math.exp(result.log_count) - problem["exact"]) / problem["exact"]
    return result.total_steps, rel, float(rel <= problem["tolerance"]), time.perf_counter() - started


def default_bench_problems(epsilon, delta, seed):
    return [
        _cycle_problem("cycle16-f1", 16, 1, epsilon, delta),
        _cycle_problem("cycle16-f8", 16, 8, epsilon, delta),
        _planted_problem("planted4-count", seed, 0.25, 0.25),
    ]


def cmd_bench_compare(args) -> int:
    names = [p for p in (args.problems.split(",") if args.problems else []) if p]
    catalog = {p["name"]: p for p in default_bench_problems(args.epsilon, args.delta, args.seed)}
    unknown = [n for n in names if n not in catalog]
    if unknown:
        raise ConfigError(f"unknown problems: {unknown}; available: {sorted(catalog)}")
    problems = [catalog[n] for n in names]

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(BENCH_COLUMNS)
    for problem in problems:
        methods = CYCLE_METHODS if problem["kind"] == "cycle" else COUNT_METHODS
        for method in methods:
            for batch in range(args.batches):
                batch_seed = child_seed(args.seed, REPLICATE, batch)
                if problem["kind"] == "cycle":
                    steps, err, cover, wall = _bench_cycle_row(problem, method, batch_seed)
                else:
                    steps, err, cover, wall = _bench_count_row(problem, method, batch_seed)
                writer.writerow(
                    [method, problem["name"], batch, steps, f"{err:.9f}", f"{cover:.1f}", f"{wall:.4f}"]
                )
    text = buf.getvalue()
    if args.out:
        with open(_resolve_out(args.out), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynamite", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_chain_args(p):
        p.add_argument("--chain", required=True, choices=["cycle", "two-state"])
        p.add_argument("--n", type=int, default=None, help="cycle size")
        p.add_argument("--fn", required=True, choices=["cycle-f", "indicator"])
        p.add_argument("--i", type=int, default=None, help="block half-width for cycle-f")
        p.add_argument("--states", default=None, help="comma list for indicator")

    p = sub.add_parser("analyze-chain", help="exact spectral summary and trace-variance sweep")
    add_chain_args(p)
    p.add_argument("--T", type=int, action="append", help="horizon(s) to profile")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze_chain)

    p = sub.add_parser("estimate", help="replicated mean estimation")
    add_chain_args(p)
    p.add_argument("--method", required=True,
                   choices=["mcmc-pro", "dynamite", "warm-start", "static-hoeffding", "static-bernstein"])
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--lambda", dest="lambda_bound", default="oracle",
                   help="eigenvalue bound, or 'oracle' for the exact value")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--start", type=int, default=None, help="start state for warm-start")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("count-colorings", help="telescoping coloring counter")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--estimator", default="dynamite", choices=["dynamite", "static-hoeffding"])
    p.add_argument("--lambda", dest="lambda_bound", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="cross-check against brute force")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_count_colorings)

    p = sub.add_parser("gen-planted", help="generate a planted-partition graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_planted)

    p = sub.add_parser("bench-compare", help="method-by-problem benchmark CSV")
    p.add_argument("--problems", default="cycle16-f1,cycle16-f8,planted4-count")
    p.add_argument("--epsilon", type=float, default=0.02)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batches", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"guard rejection: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except StatisticalFailure as exc:
        print(f"statistical failure: {exc}", file=sys.stderr)
        return EXIT_STATISTICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
