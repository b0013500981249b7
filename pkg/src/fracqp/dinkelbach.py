"""Newton-Dinkelbach root finding for the parametric function

    f(delta) = min_x  x'Ax + alpha - delta (x'Bx + beta),

which is concave, piecewise linear and strictly decreasing; its root is the
optimal ratio.  Each evaluation is one exact binary quadratic solve.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .engines import EngineError, solve_qp
from .model import ProblemInstance, ensure_nonnegative_root, merge_parametric

BRANCHES = ("init", "newton", "lookahead")


@dataclass(frozen=True, eq=False)
class ParametricPoint:
    delta: float
    f_value: float
    argmin: np.ndarray
    supergradient: float
    engine: str = ""


@dataclass(eq=False)
class TraceRow:
    iter: int
    delta: float
    f: float
    g: float
    branch: str
    engine: str
    divergence: Optional[float] = None
    x: Optional[np.ndarray] = None


@dataclass(eq=False)
class SolveTrace:
    method: str
    rows: List[TraceRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    @property
    def deltas(self):
        return np.array([r.delta for r in self.rows])

    @property
    def f_values(self):
        return np.array([r.f for r in self.rows])

    @property
    def supergradients(self):
        return np.array([r.g for r in self.rows])

    @property
    def divergences(self):
        return [r.divergence for r in self.rows]

    def add(self, point: ParametricPoint, branch):
        self.rows.append(
            TraceRow(len(self.rows) + 1, point.delta, point.f_value, point.supergradient,
                     branch, point.engine, None, point.argmin)
        )


@dataclass(eq=False)
class SolveResult:
    delta_star: float
    x_star: np.ndarray
    iterations: int
    subproblem_calls: int
    lookahead_accepts: int
    engine_used: str
    gamma_shift: float = 0.0
    engine_counts: dict = field(default_factory=dict)

    @property
    def original_delta_star(self):
        """Optimal ratio of the problem before any nonnegative-root shift."""
        return self.delta_star - self.gamma_shift

    def to_dict(self):
        return {
            "delta_star": float(self.original_delta_star),
            "x_star": [int(v) for v in self.x_star],
            "iterations": int(self.iterations),
            "subproblem_calls": int(self.subproblem_calls),
            "lookahead_accepts": int(self.lookahead_accepts),
            "engine_used": self.engine_used,
            "gamma_shift": float(self.gamma_shift),
        }


def eval_parametric(inst: ProblemInstance, delta, engine="auto") -> ParametricPoint:
    """Evaluate ``f(delta)`` with an argmin and the supergradient it induces."""
    delta = float(delta)
    if delta < 0 and engine == "auto":
        # the nonpositive-diagonal guarantee needs delta >= 0
        engine = "brute"
    form = merge_parametric(inst.A, inst.alpha, inst.B, inst.beta, delta)
    sol = solve_qp(form, engine=engine)
    g = -float(inst.denominator(sol.argmin))
    return ParametricPoint(delta, sol.min_value, sol.argmin, g, sol.engine_used)


def initial_point(inst: ProblemInstance, x0=None, engine="auto") -> ParametricPoint:
    """Start at the ratio attained by ``x0`` (all ones by default)."""
    x0 = np.ones(inst.n) if x0 is None else np.asarray(x0, dtype=float)
    delta = float(inst.ratio(x0))
    if delta < 0:
        raise ValueError(
            f"initial ratio {delta:.6g} is negative; normalize with ensure_nonnegative_root first"
        )
    return eval_parametric(inst, delta, engine)


def newton_step(p: ParametricPoint) -> float:
    if not p.supergradient < 0:
        raise ValueError(f"supergradient must be negative, got {p.supergradient}")
    return p.delta - p.f_value / p.supergradient


def _tol_abs(inst, tol, delta1):
    return tol * (1.0 + abs(inst.alpha) + delta1 * (1.0 + abs(inst.beta)))


class _Run:
    """Shared bookkeeping for the two drivers."""

    def __init__(self, inst, engine, method, max_iter):
        self.inst = inst
        self.engine = engine
        self.trace = SolveTrace(method)
        self.calls = 0
        self.engines = Counter()
        self.max_iter = max_iter

    def eval(self, delta):
        try:
            p = eval_parametric(self.inst, delta, self.engine)
        except EngineError as exc:
            exc.partial_trace = self.trace
            raise
        self.calls += 1
        self.engines[p.engine] += 1
        return p

    def check_budget(self):
        if len(self.trace) >= self.max_iter:
            raise RuntimeError(f"no convergence within {self.max_iter} iterations")

    def result(self, point, accepts):
        x = point.argmin
        return SolveResult(
            delta_star=float(self.inst.ratio(x)),
            x_star=x,
            iterations=len(self.trace),
            subproblem_calls=self.calls,
            lookahead_accepts=accepts,
            engine_used=point.engine,
            gamma_shift=float(self.inst.gamma),
            engine_counts=dict(sorted(self.engines.items())),
        )


def solve_classical(inst: ProblemInstance, tol=1e-12, engine="auto", x0=None, max_iter=10_000):
    """Classical Newton-Dinkelbach iteration ``delta <- delta - f/g``.

    Stops once ``f(delta) >= -tol_abs`` with
    ``tol_abs = tol * (1 + |alpha| + delta1 * (1 + |beta|))``.
    """
    run = _Run(inst, engine, "classical", max_iter)
    x0 = np.ones(inst.n) if x0 is None else np.asarray(x0, dtype=float)
    delta1 = float(inst.ratio(x0))
    if delta1 < 0:
        raise ValueError("instance is not normalized (negative initial ratio)")
    p = run.eval(delta1)
    run.trace.add(p, "init")
    tol_abs = _tol_abs(inst, tol, delta1)
    while p.f_value < -tol_abs:
        run.check_budget()
        p = run.eval(newton_step(p))
        run.trace.add(p, "newton")
    return run.result(p, 0), run.trace


def solve_lookahead(inst: ProblemInstance, tol=1e-12, engine="auto", x0=None, max_iter=10_000):
    """Look-ahead Newton: after each Newton point ``d`` also try ``2d - delta_i``.

    The guess is clamped at zero and accepted when ``f`` there is below
    ``-tol_abs`` and the supergradient is negative.  Both evaluations of an
    iteration count as subproblem calls.
    """
    run = _Run(inst, engine, "lookahead", max_iter)
    x0 = np.ones(inst.n) if x0 is None else np.asarray(x0, dtype=float)
    delta1 = float(inst.ratio(x0))
    if delta1 < 0:
        raise ValueError("instance is not normalized (negative initial ratio)")
    p = run.eval(delta1)
    run.trace.add(p, "init")
    tol_abs = _tol_abs(inst, tol, delta1)
    accepts = 0
    while p.f_value < -tol_abs:
        run.check_budget()
        newton = run.eval(newton_step(p))
        guess = run.eval(max(2.0 * newton.delta - p.delta, 0.0))
        if guess.f_value < -tol_abs and guess.supergradient < 0:
            p = guess
            accepts += 1
            run.trace.add(p, "lookahead")
        else:
            p = newton
            run.trace.add(p, "newton")
    return run.result(p, accepts), run.trace


def solve(inst: ProblemInstance, method="lookahead", tol=1e-12, engine="auto", normalize=True, x0=None):
    """Normalize if needed, then run the chosen driver."""
    if normalize:
        inst = ensure_nonnegative_root(inst)
    if method == "classical":
        return solve_classical(inst, tol, engine, x0)
    if method == "lookahead":
        return solve_lookahead(inst, tol, engine, x0)
    raise ValueError(f"unknown method {method!r}")
