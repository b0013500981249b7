"""Exact minimizers of ``x'Qx + 2 l'x + c`` over ``x in {-1, 1}^n``.

Engines:

* ``brute``    -- full enumeration in canonical order (the oracle).
* ``rank1``    -- closed form / small enumeration for a single term.
* ``zonotope`` -- concave forms (every weight <= 0), optionally with a
  linear term.  Two exact routes: candidate sign vectors from the cells of
  the dual hyperplane arrangement (``method="cells"``), or a
  branch-and-bound over the dual multipliers (``method="bnb"``, default).
* ``fix_enum`` -- enumerate the coordinates carrying the positive terms and
  solve each concave remainder with the zonotope engine.

Canonical vertex order: index ``k`` maps to ``x_i = -1`` iff bit ``i`` of
``k`` is set, so index 0 is the all-ones vector.  Sign convention
``sign(0) = +1`` throughout.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import GramForm

ENGINES = ("auto", "brute", "rank1", "zonotope", "fix_enum")
DEFAULT_BRUTE_LIMIT = 24
DEFAULT_RANK_BUDGET = 6
MAX_BRANCH_BITS = 10
VALUE_RTOL = 1e-9


class EngineError(ValueError):
    """An engine's precondition does not hold for the given form."""


class NoExactEngineError(EngineError):
    """No exact engine applies to the given form."""


def get_brute_limit():
    raw = os.environ.get("FRACQP_BRUTE_LIMIT")
    if raw:
        return int(raw)
    return DEFAULT_BRUTE_LIMIT


def log_bound(n, kappa=1.0, c=4.0):
    """Largest support treated as ``O(log n)``: ``kappa*log2(n) + c``."""
    return kappa * math.log2(max(n, 1)) + c


def sign(v):
    return np.where(np.asarray(v) >= 0, 1.0, -1.0)


@dataclass(frozen=True, eq=False)
class QPSolution:
    min_value: float
    argmin: np.ndarray
    engine_used: str
    argmin_indices: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    @property
    def argmin_set(self):
        if self.argmin_indices is None:
            return None
        return index_to_signs(self.argmin_indices, len(self.argmin))


def index_to_signs(indices, n):
    idx = np.asarray(indices, dtype=np.int64).reshape(-1, 1)
    bits = (idx >> np.arange(n, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def signs_to_index(x):
    x = np.asarray(x)
    bits = (x < 0).astype(np.int64)
    return int(np.sum(bits << np.arange(len(x), dtype=np.int64)))


def _linear(ell, n):
    if ell is None:
        return np.zeros(n)
    ell = np.asarray(ell, dtype=float).reshape(-1)
    if ell.shape[0] != n:
        raise ValueError(f"linear term has length {ell.shape[0]}, expected {n}")
    return ell


def objective(Q: GramForm, ell, x):
    x = np.asarray(x, dtype=float)
    val = Q.value(x)
    if ell is not None:
        val = val + 2.0 * (x @ np.asarray(ell, dtype=float))
    return val


def value_tolerance(Q: GramForm, ell=None):
    scale = Q.scale()
    if ell is not None:
        scale += 2.0 * float(np.abs(ell).sum())
    return VALUE_RTOL * scale


def _finish(Q, ell, x, engine, **extra):
    x = np.asarray(x, dtype=float)
    return QPSolution(float(objective(Q, ell, x)), x, engine, **extra)


# --------------------------------------------------------------------------
# brute force


def _sign_table(bits):
    k = np.arange(1 << bits, dtype=np.int64)[:, None]
    return (1 - 2 * ((k >> np.arange(bits, dtype=np.int64)) & 1)).astype(float)


def vertex_values(Q: GramForm, ell=None, limit=None):
    """Objective at every vertex, in canonical order."""
    return solve_qp_brute(Q, ell, limit=limit, all_values=True).values


def solve_qp_brute(Q: GramForm, ell=None, limit=None, tie_tol=None, all_values=False):
    """Enumerate all ``2^n`` vertices.

    Projections are assembled from a low block and a high block of
    coordinates, so each vertex costs ``O(r)``; the result is deterministic
    for a fixed ``n``.
    """
    n = Q.dim
    limit = get_brute_limit() if limit is None else limit
    if n > limit:
        raise EngineError(f"brute force: n={n} exceeds limit {limit}")
    ell = _linear(ell, n)
    tie_tol = value_tolerance(Q, ell) if tie_tol is None else tie_tol
    w, V = Q.weights, Q.vectors

    n_lo = min(n, 12)
    n_hi = n - n_lo
    S_lo = _sign_table(n_lo)
    P_lo = S_lo @ V[:, :n_lo].T
    L_lo = S_lo @ ell[:n_lo]
    m_lo = S_lo.shape[0]
    chunk = max(1, (1 << 18) // m_lo)

    best = np.inf
    cand_idx, cand_val = [], []
    every = np.empty(1 << n) if all_values else None
    for start in range(0, 1 << n_hi, chunk):
        stop = min(start + chunk, 1 << n_hi)
        hk = np.arange(start, stop, dtype=np.int64)[:, None]
        S_hi = (1 - 2 * ((hk >> np.arange(n_hi, dtype=np.int64)) & 1)).astype(float)
        P_hi = S_hi @ V[:, n_lo:].T
        L_hi = S_hi @ ell[n_lo:]
        P = P_hi[:, None, :] + P_lo[None, :, :]
        vals = (P * P) @ w + 2.0 * (L_hi[:, None] + L_lo[None, :]) + Q.constant
        vals = vals.reshape(-1)
        base = start * m_lo
        if every is not None:
            every[base:base + vals.size] = vals
        block_min = vals.min()
        if block_min < best:
            best = block_min
        sel = np.nonzero(vals <= best + tie_tol)[0]
        if sel.size:
            cand_idx.append(sel + base)
            cand_val.append(vals[sel])

    idx = np.concatenate(cand_idx)
    val = np.concatenate(cand_val)
    keep = val <= best + tie_tol
    idx, val = idx[keep], val[keep]
    first = idx[np.argmin(val)]
    x = index_to_signs([first], n)[0].astype(float)
    return _finish(Q, ell, x, "brute", argmin_indices=idx, values=every)


# --------------------------------------------------------------------------
# rank one


def solve_qp_rank1(lam, w, kappa=1.0, c=4.0):
    """Minimize ``lam (w'x)^2``.

    For ``lam <= 0`` the answer is ``sign(w)``; for ``lam > 0`` only the
    supported coordinates are enumerated and the bound on the support size
    is enforced.
    """
    w = np.asarray(w, dtype=float).reshape(-1)
    n = w.shape[0]
    Q = GramForm(n, [lam], w[None, :])
    if lam <= 0:
        return _finish(Q, None, sign(w), "rank1")
    support = np.nonzero(w)[0]
    if support.size > log_bound(n, kappa, c):
        raise EngineError(
            f"rank1: positive weight with support {support.size} > {log_bound(n, kappa, c):.2f}"
        )
    x = np.ones(n)
    if support.size:
        table = _sign_table(support.size)
        vals = (table @ w[support]) ** 2
        x[support] = table[int(np.argmin(vals))]
    return _finish(Q, None, x, "rank1")


# --------------------------------------------------------------------------
# hyperplane arrangement cells


def enumerate_sign_cells(W, rank_budget=DEFAULT_RANK_BUDGET, zero_tol=1e-12):
    """Sign vectors of the cells of the central arrangement ``{c : w_i'c = 0}``.

    ``W`` has one row per hyperplane normal (shape ``(n, r)``).  Every
    full-dimensional cell is represented, antipodes included.  Candidate
    rays come from ``(k-1)``-subsets of normals, ``k`` being the rank of
    ``W``.  Normals through a ray are resolved by the cells of their
    projections onto the ray's orthogonal complement, so degenerate
    arrangements are handled exactly.  Zero normals take both signs.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ValueError("W must be a 2-D array of normals")
    n, r = W.shape
    if r < 1 or not np.any(W):
        raise ValueError("need r >= 1 and at least one nonzero normal")
    if r > rank_budget:
        raise EngineError(f"arrangement dimension {r} exceeds budget {rank_budget}")

    norms = np.linalg.norm(W, axis=1)
    nz = norms > zero_tol * norms.max()
    zeros = np.nonzero(~nz)[0]
    if zeros.size > MAX_BRANCH_BITS:
        raise EngineError(f"{zeros.size} zero normals exceed the branching cap")
    cells = _cells(W[nz], zero_tol)
    out = np.empty((cells.shape[0] << zeros.size, n), dtype=np.int8)
    table = _sign_table(zeros.size).astype(np.int8)
    for i, combo in enumerate(table):
        block = out[i * cells.shape[0]:(i + 1) * cells.shape[0]]
        block[:, nz] = cells
        block[:, zeros] = combo
    uniq = {row.tobytes() for row in out}
    rows = [np.frombuffer(b, dtype=np.int8) for b in sorted(uniq)]
    return np.array(rows, dtype=np.int8).reshape(-1, n)


def _cells(G, zero_tol):
    """Cell sign patterns (int8 rows) for nonzero normals ``G``."""
    _, svals, vt = np.linalg.svd(G, full_matrices=False)
    k = int(np.sum(svals > zero_tol * svals[0]))
    G = G @ vt[:k].T
    m = G.shape[0]
    if k == 1:
        s = sign(G[:, 0]).astype(np.int8)
        return np.array([s, -s])
    norms = np.linalg.norm(G, axis=1)
    found = set()
    seen = set()
    for subset in itertools.combinations(range(m), k - 1):
        _, sv, vv = np.linalg.svd(G[list(subset)])
        if sv[-1] <= zero_tol * sv[0]:
            continue
        for c in (vv[-1], -vv[-1]):
            dots = G @ c
            amb = np.nonzero(np.abs(dots) <= zero_tol * norms)[0]
            base = sign(dots).astype(np.int8)
            key = (base.tobytes(), amb.tobytes())
            if key in seen:
                continue
            seen.add(key)
            if amb.size == k - 1:
                local = _sign_table(k - 1).astype(np.int8)
            else:
                basis = np.linalg.qr(np.column_stack([c, np.eye(k)]))[0][:, 1:k]
                local = _cells(G[amb] @ basis, zero_tol)
            for combo in local:
                base[amb] = combo
                found.add(base.tobytes())
    return np.array([np.frombuffer(b, dtype=np.int8) for b in sorted(found)])


# --------------------------------------------------------------------------
# concave engine


def _concave_parts(Q, ell):
    Q = Q.pruned()
    if np.any(Q.weights > 0):
        raise EngineError("zonotope: strictly positive weight present")
    return Q, -Q.weights, Q.vectors, _linear(ell, Q.dim)


def _psi(mu, W, ell, X):
    P = X @ W.T
    return (P * P) @ mu - 2.0 * (X @ ell)


def _ascent_starts(mu, W, ell):
    """Deterministic local-ascent incumbents: fixed points of ``x = sign(W'(mu*Wx) - l)``."""
    starts = [sign(-ell)]
    for j in range(W.shape[0]):
        starts.append(sign(W[j] - ell))
        starts.append(sign(-W[j] - ell))
    out = []
    for x in starts:
        for _ in range(64):
            nxt = sign(W.T @ (mu * (W @ x)) - ell)
            if np.array_equal(nxt, x):
                break
            x = nxt
        out.append(x)
    return np.array(out)


def _maximize_bnb(mu, W, ell, floor=-np.inf, chunk=4096):
    """Maximize ``psi(x) = sum_j mu_j (w_j'x)^2 - 2 l'x`` exactly.

    Uses ``max_x psi(x) = max_u F(u)``, ``F(u) = 2 |W'u - l|_1 - sum u_j^2/mu_j``,
    and bounds ``F`` on boxes of ``u`` by linearizing the absolute values at
    the box centre; the error term only involves hyperplanes crossing the
    box and shrinks quadratically.  Returns ``(value, x)``, or
    ``(floor, None)`` when nothing beats ``floor``.
    """
    r, n = W.shape
    if n == 0:
        x = np.zeros(0)
        val = 0.0
        return (val, x) if val > floor else (floor, None)
    if r == 0:
        x = sign(-ell)
        val = float(-2.0 * (x @ ell))
        return (val, x) if val > floor else (floor, None)

    absW = np.abs(W)
    norm1 = absW.sum(axis=1)
    scale = float(np.sum(mu * norm1 * norm1) + 2.0 * np.abs(ell).sum() + 1.0)
    tol = 1e-12 * scale
    tiny = 1e-13 * scale

    best, best_x = floor, None
    starts = _ascent_starts(mu, W, ell)
    vals = _psi(mu, W, ell, starts)
    i = int(np.argmax(vals))
    if vals[i] > best:
        best, best_x = float(vals[i]), starts[i]

    radius = mu * norm1 * (1 + 1e-9) + 1e-300
    lo, hi = -radius.copy(), radius.copy()
    if not np.any(ell):
        lo[0] = 0.0
    stack = [(lo[None, :], hi[None, :])]
    while stack:
        L, H = stack.pop()
        U0 = 0.5 * (L + H)
        Hw = 0.5 * (H - L)
        A0 = U0 @ W - ell
        S = np.where(A0 >= 0, 1.0, -1.0)
        excess = np.maximum(Hw @ absW - np.abs(A0), 0.0)
        corr = excess.sum(axis=1)
        V = S @ W.T
        lin = S @ ell
        cand = (V * V) @ mu - 2.0 * lin
        j = int(np.argmax(cand))
        if cand[j] > best:
            best, best_x = float(cand[j]), S[j].copy()
        Uopt = np.clip(mu * V, L, H)
        bound = np.sum(2.0 * Uopt * V - Uopt * Uopt / mu, axis=1) - 2.0 * lin + 4.0 * corr
        alive = np.nonzero(bound > best + tol)[0]
        if alive.size == 0:
            continue
        width = Hw[alive] * norm1
        small = width.max(axis=1) < tiny
        for a in alive[small]:
            amb = np.nonzero(excess[a] > 0)[0]
            if amb.size > MAX_BRANCH_BITS:
                raise EngineError("zonotope: degenerate arrangement exceeds the branching cap")
            X = np.repeat(S[a][None, :], 1 << amb.size, axis=0)
            X[:, amb] = _sign_table(amb.size)
            v = _psi(mu, W, ell, X)
            t = int(np.argmax(v))
            if v[t] > best:
                best, best_x = float(v[t]), X[t].copy()
        alive = alive[~small]
        if alive.size == 0:
            continue
        dim = np.argmax(Hw[alive] * norm1, axis=1)
        Lc, Hc = L[alive], H[alive]
        mid = U0[alive, dim]
        rows = np.arange(alive.size)
        L2, H1 = Lc.copy(), Hc.copy()
        H1[rows, dim] = mid
        L2[rows, dim] = mid
        Lnew = np.vstack([L2, Lc])
        Hnew = np.vstack([Hc, H1])
        for s in reversed(range(0, Lnew.shape[0], chunk)):
            stack.append((Lnew[s:s + chunk], Hnew[s:s + chunk]))
    return best, best_x


def solve_qp_zonotope(Q: GramForm, ell=None, method="bnb", rank_budget=DEFAULT_RANK_BUDGET):
    """Exact minimum of a concave form (all weights <= 0) plus ``2 l'x``.

    The objective is concave in the projections ``(w_1'x, ..., w_r'x, l'x)``,
    so the minimum sits at a vertex of the zonotope image of the cube.
    """
    Qp, mu, W, ell_v = _concave_parts(Q, ell)
    r = W.shape[0]
    lifted = r + (1 if np.any(ell_v) else 0)
    if lifted > rank_budget + 1 or r > rank_budget:
        raise EngineError(f"zonotope: rank {r} exceeds budget {rank_budget}")
    if method == "bnb":
        _, x = _maximize_bnb(mu, W, ell_v)
        return _finish(Q, ell, x, "zonotope")
    if method != "cells":
        raise ValueError(f"unknown zonotope method {method!r}")
    gens = np.vstack([W, ell_v[None, :]]).T if np.any(ell_v) else W.T
    live = np.any(gens != 0, axis=1)
    if not live.any():
        return _finish(Q, ell, np.ones(Q.dim), "zonotope")
    cells = enumerate_sign_cells(gens[live], rank_budget=rank_budget + 1)
    cands = np.ones((cells.shape[0], Q.dim))
    cands[:, live] = cells
    vals = objective(Q, ell, cands)
    return _finish(Q, ell, cands[int(np.argmin(vals))], "zonotope")


# --------------------------------------------------------------------------
# fix and enumerate


def positive_support(Q: GramForm):
    Q = Q.pruned()
    pos = Q.weights > 0
    if not pos.any():
        return np.zeros(0, dtype=int)
    return np.nonzero(np.any(Q.vectors[pos] != 0, axis=0))[0]


def solve_qp_fix_enum(Q: GramForm, S=None, ell=None, kappa=1.0, c=4.0, rank_budget=DEFAULT_RANK_BUDGET):
    """Enumerate ``x_S`` and solve each concave remainder exactly.

    With ``x_S`` fixed, positive terms are constants and each nonpositive
    term splits into a concave quadratic on the free coordinates, a linear
    term and a constant.  ``S`` defaults to the joint support of the
    positive terms.
    """
    n = Q.dim
    Qp = Q.pruned()
    ell_v = _linear(ell, n)
    if S is None:
        S = positive_support(Qp)
    S = np.array(sorted(set(int(i) for i in S)), dtype=int)
    if S.size > log_bound(n, kappa, c):
        raise EngineError(f"fix_enum: |S|={S.size} exceeds {log_bound(n, kappa, c):.2f}")
    pos = Qp.weights > 0
    free = np.setdiff1d(np.arange(n), S)
    if pos.any() and np.any(Qp.vectors[pos][:, free] != 0):
        raise EngineError("fix_enum: a positive-weight vector is supported outside S")
    if np.sum(~pos) > rank_budget:
        raise EngineError(f"fix_enum: {np.sum(~pos)} concave terms exceed budget {rank_budget}")

    lam_n = Qp.weights[~pos]
    Wn_S, Wn_F = Qp.vectors[~pos][:, S], Qp.vectors[~pos][:, free]
    live = np.any(Wn_F != 0, axis=1)
    mu = -lam_n[live]
    W_free = Wn_F[live]
    Wp_S = Qp.vectors[pos][:, S]
    lam_p = Qp.weights[pos]

    table = _sign_table(S.size)
    if S.size and not np.any(ell_v):
        table = table[table[:, 0] > 0]
    best_total, best_x = np.inf, None
    for z in table:
        a = Wn_S @ z
        const = (
            float(lam_p @ (Wp_S @ z) ** 2)
            + float(lam_n @ (a * a))
            + Qp.constant
            + 2.0 * float(ell_v[S] @ z)
        )
        lin = ell_v[free] + (lam_n * a) @ Wn_F
        floor = const - best_total if np.isfinite(best_total) else -np.inf
        psi, xf = _maximize_bnb(mu, W_free, lin, floor=floor)
        if xf is None:
            continue
        total = const - psi
        if total < best_total:
            best_total = total
            best_x = np.empty(n)
            best_x[S] = z
            best_x[free] = xf
    return _finish(Q, ell, best_x, "fix_enum")


# --------------------------------------------------------------------------
# dispatch


def solve_qp(Q: GramForm, engine="auto", ell=None, limit=None, kappa=1.0, c=4.0,
             rank_budget=DEFAULT_RANK_BUDGET) -> QPSolution:
    """Exact minimum via the requested engine, or the first applicable one.

    ``auto`` tries, in order: rank1 (single term), zonotope (all weights
    <= 0), fix_enum (positive supports within the log bound), brute
    (``n`` within the brute-force limit).
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    n = Q.dim
    limit = get_brute_limit() if limit is None else limit
    Qp = Q.pruned()
    has_linear = ell is not None and np.any(ell)

    if engine == "brute":
        return solve_qp_brute(Q, ell, limit=limit)
    if engine == "rank1":
        if Qp.n_terms != 1 or has_linear:
            raise EngineError(f"rank1: form has {Qp.n_terms} terms" + (" and a linear term" if has_linear else ""))
        sol = solve_qp_rank1(Qp.weights[0], Qp.vectors[0], kappa, c)
        return _finish(Q, ell, sol.argmin, "rank1")
    if engine == "zonotope":
        return solve_qp_zonotope(Q, ell, rank_budget=rank_budget)
    if engine == "fix_enum":
        return solve_qp_fix_enum(Q, None, ell, kappa, c, rank_budget)

    failed = []
    if Qp.n_terms == 1 and not has_linear:
        try:
            sol = solve_qp_rank1(Qp.weights[0], Qp.vectors[0], kappa, c)
            return _finish(Q, ell, sol.argmin, "rank1")
        except EngineError as exc:
            failed.append(str(exc))
    else:
        failed.append(f"rank1: {Qp.n_terms} terms")
    if np.all(Qp.weights <= 0):
        if Qp.n_terms <= rank_budget:
            return solve_qp_zonotope(Q, ell, rank_budget=rank_budget)
        failed.append(f"zonotope: rank {Qp.n_terms} exceeds budget {rank_budget}")
    else:
        failed.append("zonotope: positive weight present")
    supp = positive_support(Qp)
    if supp.size <= log_bound(n, kappa, c) and np.sum(Qp.weights <= 0) <= rank_budget:
        return solve_qp_fix_enum(Q, supp, ell, kappa, c, rank_budget)
    failed.append(f"fix_enum: positive support {supp.size} exceeds {log_bound(n, kappa, c):.2f}")
    if n <= limit:
        return solve_qp_brute(Q, ell, limit=limit)
    failed.append(f"brute: n={n} exceeds limit {limit}")
    raise NoExactEngineError("no exact engine applicable (" + "; ".join(failed) + ")")
