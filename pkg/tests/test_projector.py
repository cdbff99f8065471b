import itertools

import numpy as np
import pytest

from conftest import random_dataset, refit_rss
from mtsomp import projector
from mtsomp.datamodel import MultiTaskDataset


def test_init_state_rss():
    ds = MultiTaskDataset(np.eye(3), np.array([1.0, 2.0, 2.0]))
    assert projector.init_state(ds, 0).rss == 9.0
    ds0 = MultiTaskDataset(np.eye(3), np.zeros(3))
    assert projector.init_state(ds0, 0).rss == 0.0


def test_init_state_matches_direct_sum(rng):
    y = rng.standard_normal(8)
    ds = MultiTaskDataset(rng.standard_normal((8, 3)), y)
    assert projector.init_state(ds, 0).rss == pytest.approx(sum(v * v for v in y), rel=1e-14)


def test_gain_of_perfect_column_and_orthogonal_column():
    y = np.array([1.0, 2.0, 0.0, 0.0])
    X = np.column_stack([y, [0.0, 0.0, 1.0, 0.0]])
    st = projector.init_state(MultiTaskDataset(X, y), 0)
    assert projector.candidate_gain(st, 0) == pytest.approx(5.0)
    assert projector.candidate_gain(st, 1) == 0.0


def test_candidate_gain_matches_refit(rng):
    ds = random_dataset(rng, 10, 6, 1)
    X, y = ds.design(0), ds.response(0)
    st = projector.init_state(ds, 0)
    projector.extend(st, 2)
    projector.extend(st, 4)
    base = refit_rss(X, y, [2, 4])
    for j in (0, 1, 3, 5):
        oracle = base - refit_rss(X, y, [2, 4, j])
        assert projector.candidate_gain(st, j) == pytest.approx(oracle, rel=1e-8)


def test_candidate_gain_errors(rng):
    st = projector.init_state(random_dataset(rng, 6, 3, 1), 0)
    projector.extend(st, 0)
    with pytest.raises(IndexError):
        projector.candidate_gain(st, 3)
    with pytest.raises(ValueError):
        projector.candidate_gain(st, 0)


def test_orthonormal_columns_give_identity_factor(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((7, 4)))
    st = projector.init_state(MultiTaskDataset(Q, rng.standard_normal(7)), 0)
    for j in range(3):
        projector.extend(st, j)
    np.testing.assert_allclose(st.factor, np.eye(3), atol=1e-12)


def test_duplicate_column_is_degenerate(rng):
    X = rng.standard_normal((6, 2))
    X = np.column_stack([X, X[:, 0]])
    st = projector.init_state(MultiTaskDataset(X, rng.standard_normal(6)), 0)
    projector.extend(st, 0)
    assert projector.is_degenerate(st, 2)
    assert projector.candidate_gain(st, 2) == 0.0
    with pytest.raises(projector.DegenerateColumn):
        projector.extend(st, 2)


def test_extend_matches_refit_and_gain_additivity(rng):
    ds = random_dataset(rng, 15, 8, 1)
    X, y = ds.design(0), ds.response(0)
    st = projector.init_state(ds, 0)
    order = [5, 1, 7, 0]
    for k, j in enumerate(order):
        before = st.rss
        gain = projector.candidate_gain(st, j)
        projector.extend(st, j)
        assert before - st.rss == pytest.approx(gain, rel=1e-10)
        assert st.rss == pytest.approx(refit_rss(X, y, order[: k + 1]), rel=1e-8)


def test_factorization_reproduces_gram(rng):
    for _ in range(20):
        n, p = rng.integers(6, 20), rng.integers(3, 10)
        ds = random_dataset(rng, n, p, 1)
        st = projector.init_state(ds, 0)
        sel = rng.permutation(p)[: min(p, n - 1)]
        for j in sel:
            projector.extend(st, int(j))
        Xs = ds.design(0)[:, sel]
        L = st.factor
        assert np.all(np.diag(L) > 0)
        np.testing.assert_allclose(L @ L.T, Xs.T @ Xs, rtol=1e-10, atol=1e-10 * n)


def test_rss_is_order_free(rng):
    ds = random_dataset(rng, 12, 6, 2)
    values = []
    for perm in itertools.permutations([0, 3, 5]):
        st = projector.init_states(ds)[0]
        for j in perm:
            projector.extend(st, j)
        values.append(st.rss)
    assert max(values) - min(values) <= 1e-9 * max(values)


def test_rss_invariant_recomputation(rng):
    ds = random_dataset(rng, 12, 5, 1)
    st = projector.init_state(ds, 0)
    for j in (1, 3):
        projector.extend(st, j)
    z = st.Z[: st.k, 0]
    assert st.rss == pytest.approx(st.response_sq_norm[0] - z @ z, rel=1e-12)


def test_coefficients_examples(rng):
    x = rng.standard_normal(9)
    st = projector.init_state(MultiTaskDataset(x[:, None], 3 * x), 0)
    projector.extend(st, 0)
    np.testing.assert_allclose(projector.coefficients(st), [3.0])
    e1, e2 = np.eye(4)[:, :1], np.eye(4)[:, 1]
    st = projector.init_state(MultiTaskDataset(e1, e2), 0)
    projector.extend(st, 0)
    np.testing.assert_allclose(projector.coefficients(st), [0.0], atol=1e-15)
    with pytest.raises(projector.EmptyModel):
        projector.coefficients(projector.init_state(MultiTaskDataset(e1, e2), 0))


def test_coefficients_match_dense_solver(rng):
    X = rng.standard_normal((12, 6))
    y = rng.standard_normal(12)
    st = projector.init_state(MultiTaskDataset(X, y), 0)
    sel = [4, 0, 2, 5]
    for j in sel:
        projector.extend(st, j)
    beta = projector.coefficients(st)
    oracle = np.linalg.solve(X[:, sel].T @ X[:, sel], X[:, sel].T @ y)
    np.testing.assert_allclose(beta, oracle, rtol=1e-8)
    resid = y - X[:, sel] @ beta
    assert np.max(np.abs(X[:, sel].T @ resid)) < 1e-8


def test_batched_gains(rng):
    ds1 = random_dataset(rng, 10, 5, 1)
    st = projector.init_state(ds1, 0)
    assert projector.batched_gains([st], 2) == projector.candidate_gain(st, 2)
    y = ds1.response(0)
    ds3 = MultiTaskDataset(ds1.design(0), np.column_stack([y, y, y]))
    shared = projector.init_states(ds3)
    assert projector.batched_gains(shared, 2) == pytest.approx(3 * projector.candidate_gain(st, 2),
                                                               rel=1e-14)


def test_shared_and_per_task_paths_agree(rng):
    ds = random_dataset(rng, 14, 7, 3)
    per_task = MultiTaskDataset([ds.design(0)] * 3, ds.responses, shared=False)
    a = projector.init_states(ds)
    b = projector.init_states(per_task)
    assert len(a) == 1 and len(b) == 3
    for j in (3, 0, 6):
        for cand in range(7):
            if cand in a[0].selected:
                continue
            ga, gb = projector.batched_gains(a, cand), projector.batched_gains(b, cand)
            assert ga == pytest.approx(gb, rel=1e-12)
        for st in a + b:
            projector.extend(st, j)


def test_batched_gains_rejects_mismatched_supports(rng):
    ds = random_dataset(rng, 8, 4, 2, shared=False)
    a, b = projector.init_states(ds)
    projector.extend(a, 0)
    with pytest.raises(projector.MismatchedSupports):
        projector.batched_gains([a, b], 1)


def test_ols_fit(rng):
    X = rng.standard_normal((10, 4))
    y = rng.standard_normal(10)
    beta, resid = projector.ols_fit(X, y, [1, 3])
    np.testing.assert_allclose(beta, np.linalg.lstsq(X[:, [1, 3]], y, rcond=None)[0], rtol=1e-10)
    np.testing.assert_allclose(resid, y - X[:, [1, 3]] @ beta)


def test_rss_accurate_near_interpolation(rng):
    # y almost in the span of the first six columns of a 7-row design
    X = rng.standard_normal((7, 6))
    y = X @ rng.standard_normal(6) + 1e-4 * rng.standard_normal(7)
    st = projector.init_state(MultiTaskDataset(X, y), 0)
    for j in range(6):
        projector.extend(st, j)
    oracle = refit_rss(X, y, range(6))
    assert oracle < 1e-7 * (y @ y)
    assert st.rss == pytest.approx(oracle, rel=1e-9)
