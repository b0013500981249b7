"""fracqp command line: generate | solve | check | bench.

Exit codes: 0 success, 1 input error, 2 no exact engine applicable,
3 a lemma check failed.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import io as fio
from .analysis import annotate_divergence, check_lemmas, iteration_scaling
from .dinkelbach import solve
from .engines import ENGINES, EngineError, get_brute_limit
from .generator import FAMILIES, FamilySpec, generate
from .model import InstanceError, ensure_nonnegative_root

EXIT_OK, EXIT_INPUT, EXIT_ENGINE, EXIT_CHECK = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _family(value):
    name = value.replace("-", "_")
    if name not in FAMILIES:
        raise argparse.ArgumentTypeError(f"unknown family {value!r}")
    return name


def _positive_float(value):
    v = float(value)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(value):
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _int_list(value):
    try:
        out = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def build_parser():
    p = _Parser(prog="fracqp", description="Exact Newton-Dinkelbach solver for binary quadratic ratios")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a seeded random instance")
    g.add_argument("--family", type=_family, default="nsd_psd")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--ra", type=_positive_int, default=1)
    g.add_argument("--rb", type=_positive_int, default=1)
    g.add_argument("--s", type=int, default=0, help="positive support size (sparse-positive)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", help="output path (default stdout)")

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("instance")
    _run_flags(s)
    s.add_argument("--trace", dest="trace_path", help="write the iteration trace CSV here")
    s.add_argument("--annotate", action="store_true", help="fill the divergence column (small n only)")
    s.add_argument("-o", "--output", help="also write the result JSON here")

    c = sub.add_parser("check", help="check the convergence lemmas on a trace")
    c.add_argument("trace")
    c.add_argument("instance")
    c.add_argument("--method", choices=["auto", "classical", "lookahead"], default="auto")

    b = sub.add_parser("bench", help="iteration-count sweep over n")
    b.add_argument("--family", type=_family, default="nsd_psd")
    b.add_argument("--ns", type=_int_list, default=[50, 100, 200])
    b.add_argument("--ra", type=_positive_int, default=1)
    b.add_argument("--rb", type=_positive_int, default=1)
    b.add_argument("--s", type=int, default=0)
    b.add_argument("--seeds", type=_positive_int, default=5, help="instances per n")
    b.add_argument("--seed", type=int, default=0, help="base seed")
    _run_flags(b)
    b.add_argument("-o", "--output", help="output CSV (default stdout)")
    return p


def _run_flags(p):
    p.add_argument("--method", choices=["classical", "lookahead"], default="lookahead")
    p.add_argument("--engine", choices=list(ENGINES), default="auto")
    p.add_argument("--tol", type=_positive_float, default=1e-12)


def bench_seed(base, n, k):
    return int(np.random.SeedSequence([base, n, k]).generate_state(1)[0])


def cmd_generate(args):
    spec = FamilySpec(args.family, args.n, args.ra, args.rb, args.s, args.seed)
    inst = generate(spec)
    text = fio.dumps_instance(inst)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_solve(args):
    inst = fio.load_instance(args.instance)
    result, trace = solve(inst, args.method, args.tol, args.engine)
    if args.trace_path:
        if args.annotate:
            norm = ensure_nonnegative_root(inst)
            trace = annotate_divergence(trace, norm, result.delta_star)
        fio.write_trace(trace, args.trace_path)
    text = fio.dumps_result(result)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_check(args):
    method = None if args.method == "auto" else args.method
    trace = fio.read_trace(args.trace, method)
    inst = ensure_nonnegative_root(fio.load_instance(args.instance))
    if inst.n <= get_brute_limit():
        trace = annotate_divergence(trace, inst, trace.rows[-1].delta)
    report = check_lemmas(trace)
    print(json.dumps(report.to_dict(), indent=1))
    print(report.to_text(), file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_CHECK


def cmd_bench(args):
    results = []
    for n in sorted(set(args.ns)):
        for k in range(args.seeds):
            spec = FamilySpec(args.family, n, args.ra, args.rb, args.s, bench_seed(args.seed, n, k))
            inst = generate(spec)
            t0 = time.perf_counter()
            res, _ = solve(inst, args.method, args.tol, args.engine)
            results.append((n, res.iterations, time.perf_counter() - t0))
    rows = iteration_scaling(results)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fio.write_bench(rows, fh)
    else:
        fio.write_bench(rows, sys.stdout)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "check": cmd_check, "bench": cmd_bench}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return COMMANDS[args.command](args)
    except EngineError as exc:
        print(f"fracqp: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except (InstanceError, OSError, ValueError) as exc:
        print(f"fracqp: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
