"""Low-rank quadratic forms and problem instances.

A problem instance describes

    min (x'Ax + alpha) / (x'Bx + beta)   over x in {-1, 1}^n

where ``A`` and ``B`` arrive factored as weighted sums of rank-1 outer
products.  Everything here is immutable and pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

ORTHO_TOL = 1e-10


class InstanceError(ValueError):
    """Raised when an instance or form fails validation."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def _as_vectors(vectors, dim):
    arr = np.asarray(vectors, dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise InstanceError(f"expected vectors of length {dim}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class GramForm:
    """Quadratic form ``sum_j w_j (v_j'x)^2 + c`` with no orthogonality requirement.

    ``weights`` has shape (r,), ``vectors`` has shape (r, n).
    """

    dim: int
    weights: np.ndarray
    vectors: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        v = _as_vectors(self.vectors, self.dim)
        if v.shape[0] != w.shape[0]:
            raise InstanceError("weights and vectors disagree in length")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def from_terms(cls, dim, terms, constant=0.0):
        terms = list(terms)
        weights = [t[0] for t in terms]
        vectors = [t[1] for t in terms] if terms else np.zeros((0, dim))
        return cls(dim, np.array(weights, dtype=float), vectors, constant)

    @property
    def n_terms(self):
        return len(self.weights)

    @property
    def terms(self):
        return list(zip(self.weights.tolist(), self.vectors))

    def value(self, x):
        """Evaluate at one sign vector, or row-wise on a 2-D array of them."""
        x = np.asarray(x, dtype=float)
        proj = x @ self.vectors.T
        return (proj * proj) @ self.weights + self.constant

    def diagonal(self):
        return diagonal(self)

    def pruned(self):
        """Drop terms that contribute nothing (zero weight or zero vector)."""
        keep = (self.weights != 0) & np.any(self.vectors != 0, axis=1)
        if keep.all():
            return self
        return GramForm(self.dim, self.weights[keep], self.vectors[keep], self.constant)

    def dense(self):
        return (self.vectors.T * self.weights) @ self.vectors

    def scale(self):
        """Magnitude used to scale absolute value tolerances."""
        sq = np.sum(self.vectors * self.vectors, axis=1)
        return max(1.0, self.dim * float(np.sum(np.abs(self.weights) * sq)), abs(self.constant))

    def with_constant(self, constant):
        return replace(self, constant=float(constant))


@dataclass(frozen=True, eq=False)
class EigenForm:
    """Symmetric matrix given by nonzero eigenvalues and orthonormal eigenvectors."""

    dim: int
    eigenvalues: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InstanceError("dimension must be positive")
        lam = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        vec = _as_vectors(self.vectors, self.dim)
        if vec.shape[0] != lam.shape[0]:
            raise InstanceError("eigenvalues and eigenvectors disagree in length")
        if lam.shape[0] > self.dim:
            raise InstanceError("more eigenpairs than the dimension")
        if np.any(lam == 0) or not np.all(np.isfinite(lam)):
            raise InstanceError("eigenvalues must be finite and nonzero")
        if not np.all(np.isfinite(vec)):
            raise InstanceError("eigenvectors must be finite")
        if lam.size:
            gram = vec @ vec.T
            dev = np.abs(gram - np.eye(lam.size))
            if np.any(np.abs(np.diag(gram) - 1.0) > ORTHO_TOL):
                raise InstanceError("eigenvectors must have unit norm")
            if dev.max() > ORTHO_TOL:
                raise InstanceError("eigenvectors must be pairwise orthogonal")
        lam.setflags(write=False)
        vec.setflags(write=False)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "vectors", vec)

    @classmethod
    def from_pairs(cls, dim, pairs):
        pairs = list(pairs)
        if not pairs:
            return cls(dim, np.zeros(0), np.zeros((0, dim)))
        return cls(dim, [p[0] for p in pairs], [p[1] for p in pairs])

    @classmethod
    def from_matrix(cls, matrix, rtol=1e-12):
        """Factor a small dense symmetric matrix, dropping negligible eigenvalues."""
        matrix = np.asarray(matrix, dtype=float)
        lam, vec = np.linalg.eigh((matrix + matrix.T) / 2)
        cutoff = rtol * max(1.0, np.abs(lam).max(initial=0.0))
        keep = np.abs(lam) > cutoff
        return cls(matrix.shape[0], lam[keep], vec[:, keep].T)

    @property
    def rank(self):
        return len(self.eigenvalues)

    @property
    def pairs(self):
        return list(zip(self.eigenvalues.tolist(), self.vectors))

    def gram(self, constant=0.0):
        return GramForm(self.dim, self.eigenvalues, self.vectors, constant)

    def quad(self, x):
        return self.gram().value(x)

    def dense(self):
        return self.gram().dense()

    def is_psd(self):
        return bool(np.all(self.eigenvalues > 0))

    def is_nsd(self):
        return bool(np.all(self.eigenvalues < 0))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    n: int
    alpha: float
    beta: float
    A: EigenForm
    B: EigenForm
    gamma: float = field(default=0.0)

    def numerator(self, x):
        return self.A.quad(x) + self.alpha

    def denominator(self, x):
        return self.B.quad(x) + self.beta

    def ratio(self, x):
        return self.numerator(x) / self.denominator(x)


@dataclass(frozen=True, eq=False)
class HomogenizedForms:
    """Numerator and denominator with their constants folded in.

    On the hypercube a constant ``c`` is the same as adding ``(c/n) I`` to
    the matrix, so the constant is carried separately to keep the rank low.
    """

    A_tilde: GramForm
    B_tilde: GramForm


def homogenize(inst: ProblemInstance) -> HomogenizedForms:
    return HomogenizedForms(inst.A.gram(inst.alpha), inst.B.gram(inst.beta))


def merge_parametric(A: EigenForm, alpha, B: EigenForm, beta, delta) -> GramForm:
    """The parametric form ``x'(A - delta B)x + alpha - delta beta``.

    B's terms are appended with weights scaled by ``-delta``; parallel
    vectors across the two groups are left unmerged.
    """
    if A.dim != B.dim:
        raise InstanceError("A and B dimensions differ")
    delta = float(delta)
    weights = np.concatenate([A.eigenvalues, -delta * B.eigenvalues])
    vectors = np.vstack([A.vectors, B.vectors])
    return GramForm(A.dim, weights, vectors, alpha - delta * beta)


def diagonal(Q) -> np.ndarray:
    """Diagonal of the represented matrix, ``d_i = sum_j w_j v_ji^2``."""
    if isinstance(Q, EigenForm):
        Q = Q.gram()
    return (Q.vectors * Q.vectors).T @ Q.weights


def diagonal_sign_counts(Q):
    d = diagonal(Q)
    return int(np.sum(d > 0)), int(np.sum(d < 0))


def validate_instance(raw, brute_limit=None) -> ProblemInstance:
    """Build a checked ``ProblemInstance`` from a mapping or an instance.

    Denominator positivity is certified either by ``B`` PSD with
    ``beta > 0`` or, for small ``n``, by enumerating every vertex.
    """
    from .engines import get_brute_limit, solve_qp_brute

    if isinstance(raw, ProblemInstance):
        n, alpha, beta, A, B = raw.n, raw.alpha, raw.beta, raw.A, raw.B
        gamma = raw.gamma
    else:
        try:
            n = int(raw["n"])
            alpha = float(raw["alpha"])
            beta = float(raw["beta"])
            A = _coerce_eigen(raw["A"], n)
            B = _coerce_eigen(raw["B"], n)
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"malformed instance: {exc}") from exc
        gamma = float(raw.get("gamma", 0.0)) if hasattr(raw, "get") else 0.0
    if n < 1:
        raise InstanceError("n must be positive")
    if A.dim != n or B.dim != n:
        raise InstanceError(f"dimension mismatch: n={n}, A.dim={A.dim}, B.dim={B.dim}")
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        raise InstanceError("alpha and beta must be finite")

    inst = ProblemInstance(n, alpha, beta, A, B, gamma)
    if np.all(B.eigenvalues >= 0) and beta > 0:
        return inst
    limit = get_brute_limit() if brute_limit is None else brute_limit
    if n > limit:
        raise InstanceError(
            f"uncertifiable: B is not PSD with beta > 0 and n={n} exceeds the brute-force limit {limit}"
        )
    sol = solve_qp_brute(B.gram(beta), limit=limit)
    if sol.min_value <= 0:
        raise InstanceError(
            f"denominator nonpositive: x'Bx + beta = {sol.min_value:.17g} at x={sol.argmin.tolist()}",
            witness=sol.argmin,
        )
    return inst


def _coerce_eigen(obj, n):
    if isinstance(obj, EigenForm):
        return obj
    pairs = obj["pairs"]
    if not pairs:
        return EigenForm(n, np.zeros(0), np.zeros((0, n)))
    for p in pairs:
        if len(p["vector"]) != n:
            raise InstanceError(f"dimension mismatch: vector of length {len(p['vector'])} for n={n}")
    return EigenForm(n, [p["eigenvalue"] for p in pairs], [p["vector"] for p in pairs])


def ensure_nonnegative_root(inst: ProblemInstance, engine="auto") -> ProblemInstance:
    """Shift the objective by ``gamma`` so that the optimal ratio is nonnegative.

    The returned instance has ``A + gamma B`` and ``alpha + gamma beta``;
    its ``gamma`` attribute accumulates the shift so callers can recover
    the original optimum as ``delta_star - gamma``.
    """
    from .engines import get_brute_limit, solve_qp, vertex_values

    f0 = solve_qp(inst.A.gram(inst.alpha), engine=engine).min_value
    if f0 >= 0:
        return inst

    if np.all(inst.B.eigenvalues >= 0) and inst.beta > 0:
        gamma = -f0 / inst.beta
    elif inst.n <= get_brute_limit():
        num = vertex_values(inst.A.gram(inst.alpha))
        den = vertex_values(inst.B.gram(inst.beta))
        gamma = max(0.0, -float(np.min(num / den)))
    else:
        raise InstanceError("cannot certify a shift: B is indefinite and n exceeds the brute-force limit")

    stacked = np.vstack([inst.A.vectors, inst.B.vectors])
    weights = np.concatenate([inst.A.eigenvalues, gamma * inst.B.eigenvalues])
    A_new = _refactor(inst.n, weights, stacked)
    return ProblemInstance(
        inst.n, inst.alpha + gamma * inst.beta, inst.beta, A_new, inst.B, inst.gamma + gamma
    )


def _refactor(n, weights, vectors):
    """Eigen form of ``sum_j w_j v_j v_j'`` via a thin QR of the stacked vectors."""
    if len(weights) == 0:
        return EigenForm(n, np.zeros(0), np.zeros((0, n)))
    q, r = np.linalg.qr(vectors.T)
    core = (r * weights) @ r.T
    small = EigenForm.from_matrix(core)
    return EigenForm(n, small.eigenvalues, small.vectors @ q.T)


def random_sign_vectors(n, count, rng) -> np.ndarray:
    return rng.choice(np.array([-1.0, 1.0]), size=(count, n))


def as_sign_vector(x: Sequence[float], n=None) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if n is not None and x.shape[0] != n:
        raise InstanceError(f"sign vector has length {x.shape[0]}, expected {n}")
    if not np.all(np.abs(x) == 1):
        raise InstanceError("sign vector entries must be +1 or -1")
    return x
