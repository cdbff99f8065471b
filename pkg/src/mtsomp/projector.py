"""Incremental least-squares engine built on a progressive Cholesky factor.

A :class:`CholeskyState` tracks one design matrix X together with a block of
response columns Y (a single task, or every task when the design is
shared). With M the selected columns it keeps

    L            lower-triangular factor, L L' = X_M' X_M
    W = L^-1 X_M' X     (k x p)  whitened cross-products with every column
    Z = L^-1 X_M' Y     (k x m)
    R = X' Y - W' Z     (p x m)  residual correlations X_j' r
    d = |X_j|^2 - |W_j|^2        squared norm of X_j residualized on X_M

so the RSS reduction from adding column j is sum_t R[j, t]^2 / d[j], and
adding a column costs one O(np) product plus O(pk + pm) bookkeeping.

The reported RSS is not |y|^2 - |z|^2: that difference cancels badly once the
model nearly interpolates. Each extend also orthogonalizes the new column
against an explicit basis Q (classical Gram-Schmidt, applied twice) and
updates the residual block, which is O(nk + nm) per step and keeps the RSS
accurate relative to its own size.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .datamodel import MultiTaskDataset, SupportSet


class DegenerateColumn(ValueError):
    """Candidate column is (numerically) in the span of the selected columns."""


class EmptyModel(ValueError):
    pass


class MismatchedSupports(ValueError):
    pass


def default_eps_col(n: int) -> float:
    return 1e-10 * n


def _sq_norms(A: np.ndarray) -> np.ndarray:
    # squared column norms; contiguous rows so numpy uses pairwise summation
    At = np.ascontiguousarray(A.T)
    return np.sum(At * At, axis=1)


class CholeskyState:
    """Progressive Cholesky state for one design and one or more responses.

    ``tasks`` records which dataset tasks the response columns belong to.
    """

    def __init__(self, X: np.ndarray, Y: np.ndarray, tasks=(0,), eps_col: float | None = None,
                 max_size: int | None = None):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        n, p = X.shape
        if Y.shape[0] != n:
            raise ValueError("X and Y row counts differ")
        self.X = X
        self.Y = Y
        self.tasks = tuple(tasks)
        self.n, self.p, self.m = n, p, Y.shape[1]
        self.eps_col = default_eps_col(n) if eps_col is None else float(eps_col)
        self.max_size = min(n, p) if max_size is None else int(max_size)

        self.col_sq = _sq_norms(X)
        self.response_sq_norm = _sq_norms(Y)
        self.rss_current = self.response_sq_norm.copy()
        self.R = X.T @ Y
        self.d = self.col_sq.copy()
        self.L = np.zeros((self.max_size, self.max_size))
        self.W = np.zeros((self.max_size, p))
        self.Z = np.zeros((self.max_size, self.m))
        self.Q = np.zeros((n, self.max_size))
        self.resid = Y.copy()
        self.selected: list[int] = []

    @property
    def k(self) -> int:
        return len(self.selected)

    @property
    def support(self) -> SupportSet:
        return SupportSet(self.selected)

    @property
    def factor(self) -> np.ndarray:
        return self.L[:self.k, :self.k].copy()

    @property
    def rss(self) -> float:
        """Total RSS over this state's response columns."""
        return float(max(self.rss_current.sum(), 0.0))

    def degenerate_mask(self) -> np.ndarray:
        return self.d <= self.eps_col

    def gains(self) -> np.ndarray:
        """RSS reduction for every column, summed over responses.

        Selected and degenerate columns get 0.
        """
        num = np.sum(self.R * self.R, axis=1)
        ok = ~self.degenerate_mask()
        g = np.zeros(self.p)
        g[ok] = num[ok] / self.d[ok]
        if self.selected:
            g[self.selected] = 0.0
        return g

    def gains_per_response(self, j: int) -> np.ndarray:
        if self.d[j] <= self.eps_col:
            return np.zeros(self.m)
        return self.R[j] ** 2 / self.d[j]

    def copy(self) -> "CholeskyState":
        new = object.__new__(CholeskyState)
        new.__dict__.update(self.__dict__)
        for name in ("col_sq", "response_sq_norm", "rss_current", "R", "d", "L", "W", "Z", "Q", "resid"):
            setattr(new, name, getattr(self, name).copy())
        new.selected = list(self.selected)
        return new


def init_state(dataset: MultiTaskDataset, task_index: int, eps_col: float | None = None,
               max_size: int | None = None) -> CholeskyState:
    """Empty-model state for a single task."""
    X = dataset.design(task_index)
    return CholeskyState(X, dataset.response(task_index), tasks=(task_index,),
                         eps_col=eps_col, max_size=max_size)


def init_states(dataset: MultiTaskDataset, eps_col: float | None = None,
                max_size: int | None = None) -> list[CholeskyState]:
    """States covering every task.

    A shared design yields a single state carrying all T responses, so the
    residualized column norms are computed once for all tasks.
    """
    if dataset.shared:
        return [CholeskyState(dataset.design(0), dataset.responses, tasks=range(dataset.T),
                              eps_col=eps_col, max_size=max_size)]
    return [init_state(dataset, t, eps_col, max_size) for t in range(dataset.T)]


def _check_candidate(state: CholeskyState, j: int):
    if not 0 <= j < state.p:
        raise IndexError(f"variable index {j} out of range for p={state.p}")
    if j in state.selected:
        raise ValueError(f"variable {j} is already selected")


def candidate_gain(state: CholeskyState, j: int) -> float:
    """RSS(M) - RSS(M + {j}) summed over the state's responses.

    Returns 0 for a degenerate candidate (check with :func:`is_degenerate`).
    """
    _check_candidate(state, j)
    return float(np.sum(state.gains_per_response(j)))


def is_degenerate(state: CholeskyState, j: int) -> bool:
    return bool(state.d[j] <= state.eps_col)


def extend(state: CholeskyState, j: int) -> CholeskyState:
    """Add column ``j`` to the model in place and return the state."""
    _check_candidate(state, j)
    dj = state.d[j]
    if dj <= state.eps_col:
        raise DegenerateColumn(
            f"column {j} has residualized squared norm {dj:.3e} <= {state.eps_col:.3e}")
    k = state.k
    if k >= state.max_size:
        raise ValueError(f"state capacity {state.max_size} exhausted")
    l = state.W[:k, j].copy()
    lkk = np.sqrt(dj)
    state.L[k, :k] = l
    state.L[k, k] = lkk

    g = state.X.T @ state.X[:, j]
    w = (g - state.W[:k].T @ l) / lkk
    z = state.R[j] / lkk
    state.W[k] = w
    state.Z[k] = z
    state.R -= np.outer(w, z)
    state.d -= w * w
    state.d[j] = 0.0
    state.R[j] = 0.0

    Qk = state.Q[:, :k]
    q = state.X[:, j].copy()
    for _ in range(2):
        q -= Qk @ (Qk.T @ q)
    q /= np.linalg.norm(q)
    state.Q[:, k] = q
    state.resid -= np.outer(q, q @ state.resid)
    state.rss_current = _sq_norms(state.resid)
    state.selected.append(int(j))
    return state


def coefficients(state: CholeskyState) -> np.ndarray:
    """OLS coefficients on the selected columns, k x m (k-vector if m == 1)."""
    k = state.k
    if k == 0:
        raise EmptyModel("no columns selected")
    beta = solve_triangular(state.L[:k, :k], state.Z[:k], lower=True, trans="T")
    return beta[:, 0] if state.m == 1 else beta


def batched_gains(states: list[CholeskyState], j: int) -> float:
    """Total gain of candidate ``j`` over all tasks held by ``states``."""
    if not states:
        raise ValueError("no states given")
    sel = states[0].selected
    for st in states[1:]:
        if st.selected != sel:
            raise MismatchedSupports("task states have different selected sets")
    return float(sum(candidate_gain(st, j) for st in states))


def ols_fit(X: np.ndarray, y: np.ndarray, support, eps_col: float | None = None):
    """OLS of y on X[:, support] through the Cholesky engine.

    Returns (coefficients, residual). Raises DegenerateColumn on collinearity.
    """
    support = list(support)
    if not support:
        raise EmptyModel("empty support")
    sub = np.asarray(X)[:, support]
    st = CholeskyState(sub, y, eps_col=eps_col, max_size=len(support))
    for i in range(len(support)):
        extend(st, i)
    beta = coefficients(st)
    resid = np.asarray(y, dtype=float) - sub @ beta
    return beta, resid
