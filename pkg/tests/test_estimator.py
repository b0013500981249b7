import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fracqp.estimator import DinkelbachSolver, check_sign_matrix
from fracqp.generator import FamilySpec, generate
from fracqp.io import save_instance

import oracle


def test_params_roundtrip():
    est = DinkelbachSolver(method="classical", tol=1e-10)
    assert est.get_params()["method"] == "classical"
    est.set_params(engine="brute")
    assert clone(est).get_params()["engine"] == "brute"


def test_fit_predict_and_decision(tmp_path):
    inst = generate(FamilySpec("diag_sign", 9, 3, 2, 0, 5))
    path = tmp_path / "i.json"
    save_instance(inst, path)
    best, _ = oracle.ratio_min(inst)
    est = DinkelbachSolver(annotate=True).fit(str(path))
    assert est.delta_star_ == pytest.approx(best, abs=1e-9)
    assert est.lemma_report_.ok
    X = oracle.vertices(9)
    assert est.predict(X).min() == pytest.approx(best, abs=1e-9)
    d = est.decision_function(X)
    assert d.min() == pytest.approx(0.0, abs=1e-9)
    assert est.decision_function(est.x_star_) == pytest.approx(0.0, abs=1e-9)


def test_fit_predict_returns_vertex():
    inst = generate(FamilySpec("nsd_psd", 7, 1, 1, 0, 0))
    x = DinkelbachSolver().fit_predict(inst)
    assert set(np.abs(x)) == {1.0}


def test_not_fitted_and_bad_input():
    with pytest.raises(NotFittedError):
        DinkelbachSolver().predict([[1, -1]])
    with pytest.raises(ValueError):
        DinkelbachSolver(method="bisection").fit(generate(FamilySpec("nsd_psd", 4)))
    with pytest.raises(ValueError):
        check_sign_matrix([[1, 0.5]], 2)
    with pytest.raises(ValueError):
        check_sign_matrix([[1, 1, 1]], 2)
