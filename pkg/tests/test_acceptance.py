"""Acceptance criteria, one test each.  Every test records a PASS/FAIL line
that is printed in the pytest terminal summary."""
import math
import time

import numpy as np
import pytest

from fracqp.analysis import annotate_divergence, check_lemmas
from fracqp.dinkelbach import solve_classical, solve_lookahead
from fracqp.engines import log_bound, solve_qp, solve_qp_brute, value_tolerance
from fracqp.generator import FAMILIES, FamilySpec, generate
from fracqp.io import dumps_result, trace_to_csv
from fracqp.model import GramForm, ensure_nonnegative_root

import oracle
from conftest import ACCEPTANCE_LINES

ORACLE_TOL = 1e-9          # criteria 1 and 2
LEMMA_TOL = 1e-9           # criteria 3 and 4
N_INSTANCES = 200
N_FORMS = 200
SWEEP_NS = (50, 100, 200, 400, 800)
SWEEP_RANKS = (1, 2)
SWEEP_SEEDS = 20
SLOW_N, SLOW_LIMIT = 800, 5.0
BIG_N, BIG_LIMIT = 2000, 10.0


def record(k, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def corpus_spec(i):
    rng = np.random.default_rng([7, i])
    family = FAMILIES[i % len(FAMILIES)]
    n = 4 + (i // len(FAMILIES)) % 9
    r_a = int(rng.integers(2 if family == "diag_sign" else 1, min(n, 3) + 1))
    r_b = int(rng.integers(1, min(n, 3) + 1))
    s = int(rng.integers(1, min(n, 3) + 1)) if family == "sparse_positive" else 0
    return FamilySpec(family, n, r_a, r_b, s, 1000 + i)


def run_corpus():
    out = []
    for i in range(N_INSTANCES):
        inst = generate(corpus_spec(i))
        work = ensure_nonnegative_root(inst)
        runs = {name: driver(work) for name, driver in
                (("classical", solve_classical), ("lookahead", solve_lookahead))}
        out.append((inst, work, runs))
    return out


def run_sweep():
    out = []
    for r in SWEEP_RANKS:
        for n in SWEEP_NS:
            for k in range(SWEEP_SEEDS):
                inst = generate(FamilySpec("nsd_psd", n, r, r, 0, 10_000 * r + 100 * k + n))
                t0 = time.perf_counter()
                res, trace = solve_lookahead(ensure_nonnegative_root(inst, "zonotope"), engine="zonotope")
                out.append((n, r, res, trace, time.perf_counter() - t0))
    return out


def serialize(runs):
    return [(dumps_result(res), trace_to_csv(trace)) for res, trace in runs]


@pytest.fixture(scope="module")
def corpus():
    t0 = time.perf_counter()
    data = run_corpus()
    return data, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweep():
    return run_sweep()


def test_criterion_1_oracle_equivalence(corpus):
    data, elapsed = corpus
    worst, bad = 0.0, []
    for i, (inst, work, runs) in enumerate(data):
        best, _ = oracle.ratio_min(inst)
        for name, (res, _) in runs.items():
            err = max(abs(res.original_delta_star - best), abs(inst.ratio(res.x_star) - best))
            worst = max(worst, err)
            if err > ORACLE_TOL:
                bad.append((i, name, err))
    ok = not bad and elapsed < 60.0
    record(1, ok, f"{N_INSTANCES} instances x 2 drivers, max |delta*-oracle| = {worst:.2e} "
                  f"(tol {ORACLE_TOL}), {elapsed:.1f}s (< 60s), failures {bad[:3]}")


def _rank1_form(rng):
    n = int(rng.integers(2, 15))
    w = rng.standard_normal(n)
    if rng.random() < 0.5:
        lam = -rng.uniform(0.1, 3.0)
    else:
        lam = rng.uniform(0.1, 3.0)
        k = int(rng.integers(1, min(n, int(log_bound(n))) + 1))
        w[rng.choice(n, n - k, replace=False)] = 0.0
    if rng.random() < 0.3:
        w = np.round(w)
        w[0] = w[0] or 1.0
    return GramForm(n, [lam], w[None, :], rng.uniform(-1, 1))


def _zonotope_form(rng):
    n, r = int(rng.integers(2, 15)), int(rng.integers(1, 5))
    V = rng.standard_normal((r, n))
    if rng.random() < 0.3:
        V = rng.integers(-2, 3, size=(r, n)).astype(float)
    return GramForm(n, -rng.uniform(0.1, 3.0, r), V, rng.uniform(-1, 1))


def _fix_enum_form(rng):
    n = int(rng.integers(2, 15))
    k = int(rng.integers(1, min(n, int(log_bound(n))) + 1))
    S = rng.choice(n, k, replace=False)
    rp = int(rng.integers(1, 3))
    rn = int(rng.integers(0, 5 - rp))
    Vp = np.zeros((rp, n))
    Vp[:, S] = rng.standard_normal((rp, k))
    Vn = rng.standard_normal((rn, n))
    w = np.concatenate([rng.uniform(0.1, 3.0, rp), -rng.uniform(0.1, 3.0, rn)])
    return GramForm(n, w, np.vstack([Vp, Vn]), rng.uniform(-1, 1))


def test_criterion_2_engine_exactness():
    t0 = time.perf_counter()
    makers = {"rank1": _rank1_form, "zonotope": _zonotope_form, "fix_enum": _fix_enum_form}
    worst, bad = 0.0, []
    for e, (engine, make) in enumerate(makers.items()):
        rng = np.random.default_rng([2, e])
        for j in range(N_FORMS):
            Q = make(rng)
            got = solve_qp(Q, engine=engine)
            ref = solve_qp_brute(Q).min_value
            err = abs(got.min_value - ref)
            worst = max(worst, err)
            if err > ORACLE_TOL or got.engine_used != engine:
                bad.append((engine, j, err))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60.0
    record(2, ok, f"3 engines x {N_FORMS} forms (n<=14, r<=4), max |engine-brute| = {worst:.2e} "
                  f"(tol {ORACLE_TOL}), {elapsed:.1f}s (< 60s), failures {bad[:3]}")


def test_criterion_3_lemma1(corpus):
    data, _ = corpus
    bad, rows = [], 0
    for i, (_, _, runs) in enumerate(data):
        for name, (_, trace) in runs.items():
            rows += len(trace)
            rep = check_lemmas(trace, tol=LEMMA_TOL)
            if not rep.lemma1_ok:
                bad.append((i, name, rep.first_violation))
    record(3, not bad, f"lemma-1 law on {2 * len(data)} traces ({rows} iterates), tol {LEMMA_TOL}, "
                       f"violations {bad[:3]}")


def test_criterion_4_bregman(corpus):
    data, _ = corpus
    bad, rows = [], 0
    for i, (_, work, runs) in enumerate(data):
        res, trace = runs["lookahead"]
        annotated = annotate_divergence(trace, work, res.delta_star)
        rows += len(trace)
        rep = check_lemmas(annotated, "lookahead", tol=LEMMA_TOL)
        if not (rep.lemma3_ok and rep.lemma4_ok):
            bad.append((i, rep.first_violation, trace_to_csv(annotated)))
    record(4, not bad, f"divergence nonnegative/nonincreasing/halving on {len(data)} look-ahead traces "
                       f"({rows} iterates), tol {LEMMA_TOL}, violations {bad[:1]}")


def test_criterion_5_scaling(sweep):
    worst_ratio, max_its, slow, bad = 0.0, 0, 0.0, []
    for n, r, res, trace, secs in sweep:
        bound = n * n * math.log2(n)
        max_its = max(max_its, res.iterations)
        worst_ratio = max(worst_ratio, res.iterations / bound)
        if res.iterations > bound or "brute" in res.engine_counts:
            bad.append((n, r, res.iterations))
        if n == SLOW_N:
            slow = max(slow, secs)
    ok = not bad and slow < SLOW_LIMIT
    record(5, ok, f"{len(sweep)} look-ahead solves, max iterations {max_its} "
                  f"(max its/(n^2 log2 n) = {worst_ratio:.2e}), slowest n={SLOW_N} solve {slow:.2f}s "
                  f"(< {SLOW_LIMIT}s), failures {bad[:3]}")


def test_criterion_6_polynomial_dispatch():
    inst = generate(FamilySpec("nsd_psd", BIG_N, 1, 1, 0, 6))
    t0 = time.perf_counter()
    res, trace = solve_lookahead(ensure_nonnegative_root(inst, "zonotope"), engine="zonotope")
    big = time.perf_counter() - t0
    big_ok = set(res.engine_counts) == {"zonotope"} and {r.engine for r in trace.rows} == {"zonotope"}

    sp = generate(FamilySpec("sparse_positive", 256, 2, 1, 8, 6))
    work = ensure_nonnegative_root(sp)
    res2, trace2 = solve_lookahead(work)
    sp_ok = "fix_enum" in res2.engine_counts and "brute" not in res2.engine_counts

    ok = big_ok and big < BIG_LIMIT and sp_ok
    record(6, ok, f"n={BIG_N} r=1 via {sorted(res.engine_counts)} in {big:.2f}s (< {BIG_LIMIT}s); "
                  f"sparse-positive n=256 s=8 via {res2.engine_counts}")


def test_criterion_7_determinism(corpus, sweep):
    data, _ = corpus
    first = [serialize(runs.values()) for _, _, runs in data]
    second = [serialize(runs.values()) for _, _, runs in run_corpus()]
    corpus_same = first == second
    sweep_same = serialize((r, t) for _, _, r, t, _ in sweep) == serialize(
        (r, t) for _, _, r, t, _ in run_sweep())
    record(7, corpus_same and sweep_same,
           f"rerun byte-identical: criterion-1 results/traces {corpus_same}, "
           f"criterion-5 results/traces {sweep_same}")
