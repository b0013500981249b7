"""JSON instances/results and CSV traces/benchmarks.

Floats are written with ``repr`` so every value round-trips exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math

from .dinkelbach import SolveTrace, TraceRow
from .model import InstanceError, ProblemInstance, validate_instance

TRACE_HEADER = ["iter", "delta", "f", "g", "branch", "engine", "divergence"]
BENCH_HEADER = [
    "n", "runs", "mean_iterations", "max_iterations", "bound", "ratio",
    "within_bound", "mean_seconds", "max_seconds",
]


def _num(v):
    return repr(float(v))


def instance_to_dict(inst: ProblemInstance):
    def pairs(form):
        return {"pairs": [
            {"eigenvalue": float(lam), "vector": [float(v) for v in vec]}
            for lam, vec in zip(form.eigenvalues, form.vectors)
        ]}

    out = {"n": inst.n, "alpha": float(inst.alpha), "beta": float(inst.beta),
           "A": pairs(inst.A), "B": pairs(inst.B)}
    if inst.gamma:
        out["gamma"] = float(inst.gamma)
    return out


def dumps_instance(inst: ProblemInstance):
    return json.dumps(instance_to_dict(inst), indent=1)


def save_instance(inst: ProblemInstance, path):
    with open(path, "w") as fh:
        fh.write(dumps_instance(inst))
        fh.write("\n")


def load_instance(path, validate=True) -> ProblemInstance:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError(f"cannot read instance {path}: {exc}") from exc
    return validate_instance(raw)


def dumps_result(result):
    return json.dumps(result.to_dict(), indent=1)


def write_trace(trace: SolveTrace, fh_or_path):
    if isinstance(fh_or_path, (str, bytes)) or hasattr(fh_or_path, "__fspath__"):
        with open(fh_or_path, "w", newline="") as fh:
            return write_trace(trace, fh)
    w = csv.writer(fh_or_path, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace.rows:
        w.writerow([
            r.iter, _num(r.delta), _num(r.f), _num(r.g), r.branch, r.engine,
            "" if r.divergence is None else _num(r.divergence),
        ])


def trace_to_csv(trace: SolveTrace):
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def read_trace(path, method=None) -> SolveTrace:
    """Parse a trace CSV.  ``method`` defaults to look-ahead if any row took that branch."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != TRACE_HEADER:
                raise ValueError(f"unexpected header {header}")
            rows = []
            for rec in reader:
                if not rec:
                    continue
                it, delta, f, g, branch, engine, div = rec
                if branch not in ("init", "newton", "lookahead"):
                    raise ValueError(f"unknown branch {branch!r}")
                rows.append(TraceRow(int(it), float(delta), float(f), float(g), branch, engine,
                                     float(div) if div else None))
    except (OSError, StopIteration, ValueError) as exc:
        raise InstanceError(f"malformed trace {path}: {exc}") from exc
    if not rows:
        raise InstanceError(f"malformed trace {path}: no rows")
    if method is None:
        method = "lookahead" if any(r.branch == "lookahead" for r in rows) else "classical"
    return SolveTrace(method, rows)


def write_bench(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in rows:
        w.writerow([
            r["n"], r["runs"], _num(r["mean_iterations"]), r["max_iterations"], _num(r["bound"]),
            _num(r["ratio"]), int(r["within_bound"]),
            "" if math.isnan(r["mean_seconds"]) else f"{r['mean_seconds']:.6f}",
            "" if math.isnan(r["max_seconds"]) else f"{r['max_seconds']:.6f}",
        ])
