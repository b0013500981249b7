"""scikit-learn style front end.

``fit`` takes a problem instance (object, mapping or JSON path) and solves
it; ``predict`` evaluates the objective ratio on rows of sign vectors, and
``decision_function`` returns the parametric value at the fitted root,
which is nonnegative everywhere and zero exactly at optimal vertices.
"""
from __future__ import annotations

import os

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import annotate_divergence, check_lemmas
from .dinkelbach import solve_classical, solve_lookahead
from .engines import ENGINES
from .model import InstanceError, ProblemInstance, ensure_nonnegative_root, validate_instance


def check_instance(obj) -> ProblemInstance:
    """Coerce an instance, a schema mapping or a JSON file path into a validated instance."""
    if isinstance(obj, (str, os.PathLike)):
        from .io import load_instance

        return load_instance(obj)
    return validate_instance(obj)


def check_sign_matrix(X, n):
    """2-D float array of +-1 entries with ``n`` columns."""
    X = check_array(X, dtype=float, ensure_2d=False)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n:
        raise ValueError(f"X has {X.shape[1]} columns, expected {n}")
    if not np.all(np.abs(X) == 1):
        raise ValueError("X entries must be +1 or -1")
    return X


class DinkelbachSolver(BaseEstimator):
    """Exact solver for ``min (x'Ax + alpha)/(x'Bx + beta)`` over ``{-1, 1}^n``.

    Parameters
    ----------
    method : {"lookahead", "classical"}
    engine : {"auto", "brute", "rank1", "zonotope", "fix_enum"}
    tol : float
        Relative termination tolerance on ``f(delta)``.
    normalize : bool
        Shift the objective when the optimal ratio could be negative.
    annotate : bool
        Compute Bregman divergences and lemma checks (small ``n`` only).
    """

    def __init__(self, method="lookahead", engine="auto", tol=1e-12, normalize=True, annotate=False):
        self.method = method
        self.engine = engine
        self.tol = tol
        self.normalize = normalize
        self.annotate = annotate

    def fit(self, X, y=None):
        if self.method not in ("lookahead", "classical"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        inst = check_instance(X)
        work = ensure_nonnegative_root(inst) if self.normalize else inst
        driver = solve_lookahead if self.method == "lookahead" else solve_classical
        result, trace = driver(work, self.tol, self.engine)
        if self.annotate:
            trace = annotate_divergence(trace, work, result.delta_star)
            self.lemma_report_ = check_lemmas(trace)
        self.instance_ = inst
        self.result_ = result
        self.trace_ = trace
        self.delta_star_ = result.original_delta_star
        self.x_star_ = result.x_star.copy()
        self.n_features_in_ = inst.n
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = check_sign_matrix(X, self.n_features_in_)
        return self.instance_.ratio(X)

    def decision_function(self, X):
        check_is_fitted(self, "result_")
        X = check_sign_matrix(X, self.n_features_in_)
        inst = self.instance_
        return inst.numerator(X) - self.delta_star_ * inst.denominator(X)

    def fit_predict(self, X, y=None):
        """Fit and return the optimal vertex."""
        return self.fit(X).x_star_


__all__ = ["DinkelbachSolver", "check_instance", "check_sign_matrix", "InstanceError"]
