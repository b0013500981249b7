"""Seeded random instance families.

* ``nsd_psd``          -- A negative definite on its range, B positive; every
  merged form at ``delta >= 0`` is concave.
* ``sparse_positive``  -- A has one positive eigenvector supported on ``s``
  coordinates, the rest negative; B positive.
* ``diag_sign``        -- A indefinite but with a nonpositive diagonal.
* ``adversarial_pieces`` -- concave/convex pair with a root close to zero so
  the parametric function is crossed through many pieces.

``alpha`` is chosen large enough that the numerator is nonnegative on the
cube, hence the optimal ratio is nonnegative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engines import get_brute_limit, log_bound, solve_qp
from .model import EigenForm, InstanceError, ProblemInstance, validate_instance

FAMILIES = ("nsd_psd", "sparse_positive", "diag_sign", "adversarial_pieces")


@dataclass(frozen=True)
class FamilySpec:
    family: str
    n: int
    r_a: int = 1
    r_b: int = 1
    s: int = 0
    seed: int = 0

    def check(self):
        if self.family not in FAMILIES:
            raise InstanceError(f"unknown family {self.family!r}")
        if self.n < 1 or self.r_a < 1 or self.r_b < 1:
            raise InstanceError("n, r_a and r_b must be positive")
        if self.r_a > self.n or self.r_b > self.n:
            raise InstanceError("ranks cannot exceed n")
        if self.family == "sparse_positive":
            if not 1 <= self.s <= min(self.n, log_bound(self.n)):
                raise InstanceError(
                    f"support size s={self.s} must be in [1, {min(self.n, log_bound(self.n)):.2f}]"
                )
        if self.family == "diag_sign" and self.r_a < 2:
            raise InstanceError("diag_sign needs r_a >= 2 to be indefinite")


def _eigenvalues(rng, k):
    return 10.0 ** rng.uniform(-1.0, 1.0, size=k)


def _orthonormal(rng, n, k):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q.T


def _numerator_alpha(A, n, rng, margin=None):
    """Smallest-ish alpha making ``x'Ax + alpha >= 0`` on the cube."""
    f0 = solve_qp(A.gram(0.0)).min_value
    if margin is None:
        margin = rng.uniform(0.0, 0.5)
    return -f0 + margin * abs(f0)


def generate(spec: FamilySpec) -> ProblemInstance:
    spec.check()
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    beta = float(rng.uniform(0.5, 2.0))

    if spec.family in ("nsd_psd", "adversarial_pieces"):
        A = EigenForm(n, -_eigenvalues(rng, spec.r_a), _orthonormal(rng, n, spec.r_a))
        if spec.family == "adversarial_pieces":
            # B's eigenvalues span two decades in a fixed spread so that the
            # minimizer keeps changing as delta sweeps down.
            lam_b = np.geomspace(10.0, 0.1, spec.r_b) if spec.r_b > 1 else np.array([10.0])
            B = EigenForm(n, lam_b, _orthonormal(rng, n, spec.r_b))
            alpha = _numerator_alpha(A, n, rng, margin=1e-3)
            beta = 0.5
        else:
            B = EigenForm(n, _eigenvalues(rng, spec.r_b), _orthonormal(rng, n, spec.r_b))
            alpha = _numerator_alpha(A, n, rng)

    elif spec.family == "sparse_positive":
        support = np.sort(rng.choice(n, size=spec.s, replace=False))
        p = np.zeros(n)
        p[support] = rng.standard_normal(spec.s)
        p /= np.linalg.norm(p)
        vecs = [p]
        if spec.r_a > 1:
            G = rng.standard_normal((n, spec.r_a - 1))
            G -= np.outer(p, p @ G)
            q, _ = np.linalg.qr(G)
            q -= np.outer(p, p @ q)
            q, _ = np.linalg.qr(q)
            vecs.extend(q.T)
        lam = np.concatenate([_eigenvalues(rng, 1), -_eigenvalues(rng, spec.r_a - 1)])
        A = EigenForm(n, lam, np.array(vecs))
        B = EigenForm(n, _eigenvalues(rng, spec.r_b), _orthonormal(rng, n, spec.r_b))
        alpha = _numerator_alpha(A, n, rng)

    else:  # diag_sign
        V = _orthonormal(rng, n, spec.r_a)
        lam = -_eigenvalues(rng, spec.r_a)
        lam[0] = -lam[0]
        pos = lam[0] * V[0] ** 2
        neg = (V[1:] ** 2).T @ (-lam[1:])
        factor = float(np.max(pos / np.maximum(neg, 1e-300)))
        if factor > 1.0:
            lam[1:] *= factor * 1.05
        A = EigenForm(n, lam, V)
        B = EigenForm(n, _eigenvalues(rng, spec.r_b), _orthonormal(rng, n, spec.r_b))
        if n <= get_brute_limit():
            alpha = _numerator_alpha(A, n, rng)
        else:
            # valid lower bound on x'Ax when exact minimization is out of reach
            alpha = float(np.sum(-lam[lam < 0] * np.abs(V[lam < 0]).sum(axis=1) ** 2))

    return validate_instance(ProblemInstance(n, float(alpha), beta, A, B))
