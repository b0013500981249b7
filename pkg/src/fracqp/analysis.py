"""Bregman divergences along solver traces and checks of the convergence laws."""
from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .dinkelbach import SolveTrace
from .engines import get_brute_limit, solve_qp_brute
from .model import ProblemInstance, merge_parametric

LEMMA_TOL = 1e-9
STRICT_RTOL = 1e-12


@dataclass(frozen=True)
class DivergenceRecord:
    iter: int
    divergence: float
    sup_g: float
    closed_form: float


@dataclass
class LemmaReport:
    lemma1_ok: bool
    lemma3_ok: Optional[bool]
    lemma4_ok: Optional[bool]
    violations: List[dict] = field(default_factory=list)

    @property
    def first_violation(self):
        return self.violations[0] if self.violations else None

    @property
    def ok(self):
        return all(v is not False for v in (self.lemma1_ok, self.lemma3_ok, self.lemma4_ok))

    def to_dict(self):
        return {
            "lemma1": self.lemma1_ok,
            "lemma3": self.lemma3_ok,
            "lemma4": self.lemma4_ok,
            "violations": self.violations,
        }

    def to_text(self):
        def fmt(v):
            return "n/a" if v is None else ("ok" if v else "VIOLATED")

        lines = [
            f"lemma 1 (monotone iterates, ratio inequality): {fmt(self.lemma1_ok)}",
            f"lemma 3 (nonincreasing divergence):            {fmt(self.lemma3_ok)}",
            f"lemma 4 (divergence halves every two steps):   {fmt(self.lemma4_ok)}",
        ]
        for v in self.violations:
            lines.append(f"  iter {v['iter']}: {v['check']} -- {v['detail']}")
        return "\n".join(lines)


def bregman(delta_ref, delta, f_at_delta, sup_g, f_at_ref):
    """``D_f(delta_ref, delta) = f(delta) + sup_g (delta_ref - delta) - f(delta_ref)``."""
    if delta == delta_ref:
        return 0.0
    if sup_g is None:
        raise ValueError("sup_g is required when delta != delta_ref")
    return f_at_delta + sup_g * (delta_ref - delta) - f_at_ref


def sup_supergradient(inst: ProblemInstance, delta):
    """Largest supergradient at ``delta``, from the complete argmin set.

    Returns ``(f(delta), sup_g, x)`` where ``x`` attains the sup.
    """
    sol = solve_qp_brute(merge_parametric(inst.A, inst.alpha, inst.B, inst.beta, delta))
    X = sol.argmin_set.astype(float)
    den = inst.denominator(X)
    j = int(np.argmin(den))
    return sol.min_value, -float(den[j]), X[j]


def annotate_divergence(trace: SolveTrace, inst: ProblemInstance, delta_star) -> SolveTrace:
    """Copy of ``trace`` with ``D_f(delta*, delta_i)`` filled in for every row.

    The closed form ``x'(A~ - delta* B~)x`` at the sup-attaining minimizer is
    kept alongside in ``divergence_records``.
    """
    out = copy.deepcopy(trace)
    out.divergence_records = []
    if inst.n > get_brute_limit():
        warnings.warn(
            f"n={inst.n} exceeds the brute-force limit; divergence column left empty",
            stacklevel=2,
        )
        return out
    f_ref, _, _ = sup_supergradient(inst, delta_star)
    for row in out.rows:
        f_i, g_sup, x = sup_supergradient(inst, row.delta)
        d = bregman(delta_star, row.delta, f_i, g_sup, f_ref)
        closed = float(inst.numerator(x) - delta_star * inst.denominator(x))
        row.divergence = float(d)
        out.divergence_records.append(DivergenceRecord(row.iter, float(d), g_sup, closed))
    return out


def check_lemmas(trace: SolveTrace, method=None, tol=LEMMA_TOL) -> LemmaReport:
    """Check the monotonicity and divergence laws on a converged trace.

    Divergence checks run only when the trace is annotated; the halving law
    is checked only for look-ahead traces.
    """
    method = method or trace.method
    d = trace.deltas
    f = trace.f_values
    g = trace.supergradients
    violations = []

    def bad(i, check, detail):
        violations.append({"iter": int(i), "check": check, "detail": detail})

    d_scale = STRICT_RTOL * max(1.0, float(np.max(np.abs(d), initial=0.0)))
    g_scale = tol * max(1.0, float(np.max(np.abs(g), initial=0.0)))
    for i in range(1, len(d)):
        it = i + 1
        if not d[i] < d[i - 1] - d_scale:
            bad(it, "delta decreasing", f"{d[i]!r} !< {d[i - 1]!r}")
        if not f[i] > f[i - 1]:
            bad(it, "f increasing", f"{f[i]!r} !> {f[i - 1]!r}")
        if not g[i] >= g[i - 1] - g_scale:
            bad(it, "g nondecreasing", f"{g[i]!r} < {g[i - 1]!r}")
        lhs = f[i] / f[i - 1] + g[i] / g[i - 1]
        if not lhs <= 1.0 + tol:
            bad(it, "ratio inequality", f"f_i/f_(i-1) + g_i/g_(i-1) = {lhs!r} > 1")
    lemma1 = not violations

    divs = trace.divergences
    lemma3 = lemma4 = None
    if divs and all(v is not None for v in divs):
        D = np.array(divs, dtype=float)
        dtol = tol * max(1.0, float(np.max(np.abs(D))))
        n_before = len(violations)
        for i, v in enumerate(D):
            if v < -dtol:
                bad(i + 1, "divergence nonnegative", f"D = {v!r}")
        for i in range(1, len(D)):
            if not D[i] <= D[i - 1] + dtol:
                bad(i + 1, "divergence nonincreasing", f"{D[i]!r} > {D[i - 1]!r}")
        lemma3 = len(violations) == n_before
        if method == "lookahead":
            n_before = len(violations)
            for i in range(2, len(D)):
                if not D[i] < 0.5 * D[i - 2] + dtol:
                    bad(i + 1, "divergence halving", f"{D[i]!r} >= {0.5 * D[i - 2]!r}")
            lemma4 = len(violations) == n_before
    return LemmaReport(lemma1, lemma3, lemma4, violations)


def iteration_scaling(results):
    """Summarize iteration counts per ``n`` against ``n^2 log2 n``.

    ``results`` holds ``(n, iterations)`` or ``(n, iterations, seconds)``
    tuples.  Rows are sorted by ``n``.
    """
    by_n = {}
    for item in results:
        n, its = int(item[0]), int(item[1])
        secs = float(item[2]) if len(item) > 2 else math.nan
        by_n.setdefault(n, []).append((its, secs))
    rows = []
    for n in sorted(by_n):
        its = np.array([a for a, _ in by_n[n]], dtype=float)
        secs = np.array([b for _, b in by_n[n]], dtype=float)
        bound = n * n * math.log2(n) if n > 1 else 1.0
        rows.append({
            "n": n,
            "runs": len(its),
            "mean_iterations": float(its.mean()),
            "max_iterations": int(its.max()),
            "bound": bound,
            "ratio": float(its.max() / bound),
            "within_bound": bool(its.max() <= bound),
            "mean_seconds": float(np.mean(secs)),
            "max_seconds": float(np.max(secs)),
        })
    return rows
