import math

import numpy as np
import pytest

from conftest import random_dataset
from mtsomp import alasso
from mtsomp.baselines import METHODS, BaselineConfig, isis_screen, omp_single, run_pipeline, sis_screen
from mtsomp.datamodel import MultiTaskDataset, union_support
from mtsomp.somp import SompConfig, run_somp


def test_sis_examples():
    X = np.eye(4)[:, :3] * np.array([1.0, 5.0, 1.0])
    y = np.array([0.5, 0.9, 0.1, 0.0])
    # column scale must not matter
    assert tuple(sis_screen(MultiTaskDataset(X, y), 0, 2)) == (1, 0)
    X = np.ones((4, 3))
    assert tuple(sis_screen(MultiTaskDataset(X, np.ones(4)), 0, 3)) == (0, 1, 2)


def test_sis_matches_sort_oracle_and_prefix(rng):
    ds = random_dataset(rng, 25, 40, 1)
    X, y = ds.design(0), ds.response(0)
    scores = [abs(X[:, j] @ y) / np.linalg.norm(X[:, j]) for j in range(40)]
    oracle = sorted(range(40), key=lambda j: (-scores[j], j))
    full = tuple(sis_screen(ds, 0, 24))
    assert full == tuple(oracle[:24])
    assert tuple(sis_screen(ds, 0, 10)) == full[:10]
    with pytest.raises(ValueError):
        sis_screen(ds, 0, 0)


def test_isis_single_iteration_equals_sis(rng):
    ds = random_dataset(rng, 30, 50, 1)
    cfg = BaselineConfig(isis_per_iter=8, isis_iterations=1)
    assert isis_screen(ds, 0, cfg) == sis_screen(ds, 0, 8)


def test_isis_matches_residual_oracle(rng):
    ds = random_dataset(rng, 20, 12, 1)
    X, y = ds.design(0), ds.response(0)
    cfg = BaselineConfig(isis_per_iter=3, isis_iterations=3)
    trace = []
    got = isis_screen(ds, 0, cfg, trace)
    chosen = []
    for it in range(3):
        if chosen:
            beta = np.linalg.lstsq(X[:, chosen], y, rcond=None)[0]
            r = y - X[:, chosen] @ beta
        else:
            r = y
        scores = {j: abs(X[:, j] @ r) / np.linalg.norm(X[:, j]) for j in range(12) if j not in chosen}
        step = sorted(scores, key=lambda j: (-scores[j], j))[:3]
        assert trace[it] == step
        chosen += step
    assert list(got) == chosen


def test_isis_defaults_and_validation(rng):
    cfg = BaselineConfig().resolved(100, 1000)
    assert cfg.isis_per_iter == int(100 // math.log(100))
    assert cfg.isis_iterations == 3
    assert cfg.sis_model_size == 99
    with pytest.raises(ValueError):
        BaselineConfig(sis_model_size=20).resolved(20, 25)
    with pytest.raises(ValueError):
        isis_screen(random_dataset(rng, 20, 25, 1), 0, BaselineConfig(isis_per_iter=10, isis_iterations=3))


def test_isis_skips_collinear_additions(rng):
    X = rng.standard_normal((15, 6))
    X[:, 4] = X[:, 0]
    y = X[:, 0] + 0.1 * rng.standard_normal(15)
    got = isis_screen(MultiTaskDataset(X, y), 0, BaselineConfig(isis_per_iter=3, isis_iterations=2))
    assert not {0, 4} <= set(got)
    assert len(got) == 6 - 1


def test_omp_single_equals_somp_on_one_task(rng):
    ds = random_dataset(rng, 20, 15, 3)
    for t in range(3):
        assert omp_single(ds, t) == run_somp(ds.task(t))


def _noiseless_toy(rng):
    X = rng.standard_normal((30, 10))
    B = np.zeros((10, 2))
    B[2] = [3.0, -2.0]
    B[7] = [2.5, 4.0]
    return MultiTaskDataset(X, X @ B), B


@pytest.mark.parametrize("method", METHODS)
def test_noiseless_toy_recovered_by_every_method(rng, method):
    ds, B = _noiseless_toy(rng)
    est = run_pipeline(ds, method, baseline_config=BaselineConfig(isis_per_iter=4, isis_iterations=2))
    assert union_support(est) == (2, 7)
    # the penalized fits keep a little shrinkage at the end of the grid
    tol = 1e-8 if method in ("OMP", "SOMP") else 1e-2
    np.testing.assert_allclose(est.to_dense(), B, atol=tol)


@pytest.mark.parametrize("method", METHODS)
def test_estimate_support_within_screening(rng, method):
    ds = random_dataset(rng, 25, 60, 3, signal=1.0)
    stages = {}
    est = run_pipeline(ds, method, stages=stages)
    screened = stages["screened"]
    if isinstance(screened[0] if len(screened) else None, (tuple, list)):
        for t in range(ds.T):
            assert {j for (j, tt) in est.entries if tt == t} <= set(screened[t])
    else:
        assert set(union_support(est)) <= set(screened)


def test_somp_alasso_composes_stages(rng):
    ds = random_dataset(rng, 30, 80, 4)
    stages = {}
    est = run_pipeline(ds, "SOMP-ALASSO", stages=stages)
    direct = alasso.exact_support_pipeline(ds, stages["screened"])
    assert est == direct


def test_unknown_method(rng):
    with pytest.raises(ValueError):
        run_pipeline(random_dataset(rng, 10, 5, 1), "LASSO")


def test_somp_config_is_respected(rng):
    ds = random_dataset(rng, 30, 40, 2)
    stages = {}
    run_pipeline(ds, "SOMP", SompConfig(max_steps=2), stages=stages)
    assert len(stages["path"]) == 2
