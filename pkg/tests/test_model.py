import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracqp.model import (
    EigenForm, GramForm, InstanceError, ProblemInstance, diagonal, ensure_nonnegative_root,
    homogenize, merge_parametric, validate_instance,
)

import oracle
from conftest import e


def test_eigenform_rejects_non_orthonormal():
    with pytest.raises(InstanceError, match="unit norm"):
        EigenForm(2, [1.0], [[1.0, 1.0]])
    with pytest.raises(InstanceError):
        EigenForm(2, [1.0, 1.0], [[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(InstanceError):
        EigenForm(2, [0.0], [[1.0, 0.0]])


def test_eigenform_from_matrix_roundtrip():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((5, 2))
    M = M @ np.diag([2.0, -1.0]) @ M.T
    F = EigenForm.from_matrix(M)
    assert F.rank == 2
    assert np.allclose(F.dense(), M)
    assert not F.is_psd() and not F.is_nsd()


def test_validate_psd_denominator():
    raw = {"n": 2, "alpha": 1.0, "beta": 1.0,
           "A": {"pairs": [{"eigenvalue": -1.0, "vector": [1.0, 0.0]}]},
           "B": {"pairs": [{"eigenvalue": 2.0, "vector": [0.0, 1.0]}]}}
    inst = validate_instance(raw)
    assert inst.n == 2 and inst.beta == 1.0


def test_validate_indefinite_denominator_certified_by_enumeration():
    # min over the cube of -x1^2 + 2 x2^2 + 2 is 3
    B = EigenForm(3, [-1.0, 2.0], [e(3, 0), e(3, 1)])
    inst = validate_instance(ProblemInstance(3, 0.0, 2.0, EigenForm(3, [], np.zeros((0, 3))), B))
    assert inst.n == 3


def test_validate_reports_witness():
    B = EigenForm(2, [-3.0], [e(2, 0)])
    with pytest.raises(InstanceError, match="nonpositive") as info:
        validate_instance(ProblemInstance(2, 0.0, 1.0, EigenForm(2, [], np.zeros((0, 2))), B))
    assert info.value.witness is not None
    assert abs(info.value.witness[0]) == 1


def test_validate_dimension_mismatch():
    raw = {"n": 3, "alpha": 0.0, "beta": 1.0,
           "A": {"pairs": [{"eigenvalue": -1.0, "vector": [1.0, 0.0]}]},
           "B": {"pairs": []}}
    with pytest.raises(InstanceError, match="dimension"):
        validate_instance(raw)


def test_validate_uncertifiable_above_limit(monkeypatch):
    monkeypatch.setenv("FRACQP_BRUTE_LIMIT", "4")
    B = EigenForm(6, [-1.0, 5.0], [e(6, 0), e(6, 1)])
    with pytest.raises(InstanceError, match="uncertifiable"):
        validate_instance(ProblemInstance(6, 0.0, 3.0, EigenForm(6, [], np.zeros((0, 6))), B))


def test_merge_parametric_matches_dense():
    v = np.array([1.0, 2.0, -1.0]) / np.sqrt(6)
    A = EigenForm(3, [-1.0], [v])
    B = EigenForm(3, [1.0], [e(3, 1)])
    Q = merge_parametric(A, 0.5, B, 1.5, 2.0)
    x = np.array([1.0, 1.0, -1.0])
    expected = x @ (A.dense() - 2.0 * B.dense()) @ x + 0.5 - 2.0 * 1.5
    assert Q.value(x) == pytest.approx(expected, abs=1e-12)
    assert Q.n_terms == 2


def test_diagonal():
    Q = GramForm(2, [2.0, -1.0], [[1.0, 1.0], [0.0, 3.0]])
    assert np.allclose(diagonal(Q), np.diag(Q.dense()))
    assert np.allclose(diagonal(Q), [2.0, -7.0])


def test_homogenize_keeps_constants():
    A = EigenForm(2, [-1.0], [e(2, 0)])
    B = EigenForm(2, [1.0], [e(2, 1)])
    h = homogenize(ProblemInstance(2, 2.0, 1.0, A, B))
    assert h.A_tilde.constant == 2.0 and h.B_tilde.constant == 1.0


def test_ensure_nonnegative_root_shift():
    # f(0) = min x'Ax + alpha = -0.5 - 1.5 = -2, beta = 1, so gamma = 2
    A = EigenForm(2, [-0.5], [e(2, 0)])
    B = EigenForm(2, [1.0], [e(2, 1)])
    inst = validate_instance(ProblemInstance(2, -1.5, 1.0, A, B))
    out = ensure_nonnegative_root(inst)
    assert out.gamma == pytest.approx(2.0)
    f0, _ = oracle.qp_min(out.A.dense(), out.alpha)
    assert f0 >= -1e-12
    # minimizers are unchanged, ratios shift by gamma
    r0, x0 = oracle.ratio_min(inst)
    r1, x1 = oracle.ratio_min(out)
    assert r1 - out.gamma == pytest.approx(r0, abs=1e-12)
    assert {tuple(x) for x in x0} == {tuple(x) for x in x1}


def test_ensure_nonnegative_root_noop_when_already_nonnegative(trivial_inst):
    assert ensure_nonnegative_root(trivial_inst) is trivial_inst


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 8))
def test_shift_preserves_order_random(seed, n):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, 3)))
    A = EigenForm(n, rng.uniform(-3, 3, 2) + np.array([0.1, -0.1]), q[:, :2].T)
    B = EigenForm(n, [rng.uniform(0.5, 2)], q[:, 2:].T)
    inst = validate_instance(ProblemInstance(n, rng.uniform(-5, 1), rng.uniform(0.5, 2), A, B))
    out = ensure_nonnegative_root(inst)
    r0, _ = oracle.ratio_min(inst)
    r1, _ = oracle.ratio_min(out)
    assert r1 >= -1e-9
    assert r1 - out.gamma == pytest.approx(r0, abs=1e-9 * max(1, abs(r0)))
