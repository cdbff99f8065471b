import itertools

import numpy as np
import pytest

from mtsomp.datamodel import MultiTaskDataset


def refit_rss(X, y, support):
    """RSS of y after least squares on X[:, support], by a dense solver."""
    support = list(support)
    if not support:
        return float(y @ y)
    beta, *_ = np.linalg.lstsq(X[:, support], y, rcond=None)
    r = y - X[:, support] @ beta
    return float(r @ r)


def total_refit_rss(ds: MultiTaskDataset, support):
    return sum(refit_rss(ds.design(t), ds.response(t), support) for t in range(ds.T))


def random_dataset(rng, n, p, T, shared=True, signal=2.0):
    if shared:
        X = rng.standard_normal((n, p))
        B = np.zeros((p, T))
        B[: min(2, p)] = signal * rng.standard_normal((min(2, p), T))
        Y = X @ B + rng.standard_normal((n, T))
        return MultiTaskDataset(X, Y, shared=True)
    Xs = [rng.standard_normal((n, p)) for _ in range(T)]
    Y = np.column_stack([X[:, :1] @ [signal] + rng.standard_normal(n) for X in Xs])
    return MultiTaskDataset(Xs, Y, shared=False)


def weighted_lasso_prox(X, y, lam, w, iters=200000):
    """Proximal-gradient oracle for |y - Xb|^2 + lam sum w|b| (independent of CD)."""
    G = X.T @ X
    b = X.T @ y
    L = 2 * np.linalg.eigvalsh(G).max()
    beta = np.zeros(X.shape[1])
    prev = beta
    for _ in range(iters):
        z = beta - (2 * (G @ beta - b)) / L
        beta = np.sign(z) * np.maximum(np.abs(z) - lam * w / L, 0.0)
        if np.max(np.abs(beta - prev)) < 1e-15:
            break
        prev = beta
    return beta


def exhaustive_bic_support(X, y, p_ambient, candidates):
    """Subset of ``candidates`` minimizing the T=1 modified BIC over OLS fits."""
    import math
    n = X.shape[0]
    best, best_score = (), None
    for k in range(len(candidates) + 1):
        for sub in itertools.combinations(candidates, k):
            rss = refit_rss(X, y, sub)
            score = math.log(max(rss, 1e-12 * n) / n) + k * (math.log(n) + 2 * math.log(p_ambient)) / n
            if best_score is None or score < best_score - 1e-12:
                best, best_score = sub, score
    return frozenset(best)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
