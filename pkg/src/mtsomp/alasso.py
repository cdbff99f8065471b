"""Per-task adaptive Lasso on a screened variable set.

Objective (no 1/2 or 1/n factors):

    |y - X b|^2 + lam * sum_j w_j |b_j|

so the all-zero solution holds for lam >= 2 max_j |X_j' y| / w_j and the
coordinate update is b_j <- S(X_j' r_(-j), lam w_j / 2) / |X_j|^2.
Weights come from OLS on the screened set; lam is picked by the modified
BIC along a descending log-spaced grid solved with warm starts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from . import projector
from .bic import BicParams, bic_score
from .datamodel import ZERO_THRESHOLD, CoefficientMatrix, MultiTaskDataset, SupportSet


class DegenerateDesign(ValueError):
    pass


class NoConvergence(RuntimeError):
    def __init__(self, lam, sweeps):
        super().__init__(f"coordinate descent did not converge at lambda={lam:.6g} "
                         f"after {sweeps} sweeps")
        self.lam = lam


class TaskError(RuntimeError):
    def __init__(self, task, err):
        super().__init__(f"task {task}: {err}")
        self.task = task
        self.__cause__ = err


@dataclass(frozen=True)
class AlassoConfig:
    lambda_grid_size: int = 100
    lambda_min_ratio: float = 1e-3
    cd_tolerance: float = 1e-8
    max_cd_iterations: int = 10000
    weight_epsilon: float = 1e-12

    def __post_init__(self):
        if self.lambda_grid_size < 1 or self.max_cd_iterations < 1:
            raise ValueError("grid size and iteration cap must be positive")
        if not 0 < self.lambda_min_ratio < 1:
            raise ValueError("lambda_min_ratio must lie in (0, 1)")
        if self.cd_tolerance <= 0 or self.weight_epsilon <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class AlassoFit:
    task: int
    screened: SupportSet
    lambda_selected: float
    coefficients: np.ndarray
    rss: float
    kkt_violation: float
    scale: float
    sweeps: int = 0

    @property
    def nonzero(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    def support(self) -> SupportSet:
        return SupportSet(j for j, b in zip(self.screened, self.coefficients) if b != 0.0)


@dataclass
class AlassoDiagnostics:
    """Running tally over every path fit, for convergence audits."""
    fits: int = 0
    max_kkt_ratio: float = 0.0
    no_convergence: int = 0

    def record(self, fit: AlassoFit):
        self.fits += 1
        if fit.scale > 0:
            self.max_kkt_ratio = max(self.max_kkt_ratio, fit.kkt_violation / fit.scale)


@njit(cache=True, nogil=True)
def _sweep(G, q, beta, thresh, idx):
    maxd = 0.0
    for j in idx:
        gjj = G[j, j]
        old = beta[j]
        rho = q[j] + gjj * old
        if rho > thresh[j]:
            new = (rho - thresh[j]) / gjj
        elif rho < -thresh[j]:
            new = (rho + thresh[j]) / gjj
        else:
            new = 0.0
        delta = new - old
        if delta != 0.0:
            beta[j] = new
            for i in range(q.shape[0]):
                q[i] -= G[i, j] * delta
            if abs(delta) > maxd:
                maxd = abs(delta)
    return maxd


@njit(cache=True, nogil=True)
def _polish(G, b, beta, thresh, active):
    """Exact solve of the stationarity equations on a fixed active set.

    Accepted only if every coordinate keeps its sign. Returns True if applied.
    """
    k = active.shape[0]
    if k == 0:
        return False
    A = np.empty((k, k))
    rhs = np.empty(k)
    for a in range(k):
        ja = active[a]
        rhs[a] = b[ja] - thresh[ja] * np.sign(beta[ja])
        for c in range(k):
            A[a, c] = G[ja, active[c]]
    x = np.linalg.solve(A, rhs)
    for a in range(k):
        if x[a] * beta[active[a]] <= 0.0:
            return False
    for a in range(k):
        beta[active[a]] = x[a]
    return True


@njit(cache=True, nogil=True)
def _cd_solve(G, b, beta, thresh, tol, max_sweeps):
    """Cyclic coordinate descent with active-set cycling.

    While cycling on a stable active set, every 10 sweeps the
    active coordinates are solved exactly (sign-consistent only); a full
    sweep then decides convergence. Returns (sweeps used, converged flag).
    ``beta`` is updated in place.
    """
    m = b.shape[0]
    q = b - G @ beta
    full = np.arange(m)
    sweeps = 0
    while sweeps < max_sweeps:
        maxd = _sweep(G, q, beta, thresh, full)
        sweeps += 1
        if maxd < tol * (1.0 + np.max(np.abs(beta))):
            return sweeps, True
        active = np.nonzero(beta)[0]
        inner = 0
        while sweeps < max_sweeps:
            maxd = _sweep(G, q, beta, thresh, active)
            sweeps += 1
            inner += 1
            if maxd < tol * (1.0 + np.max(np.abs(beta))):
                break
            if inner % 10 == 0:
                active = np.nonzero(beta)[0]
                if _polish(G, b, beta, thresh, active):
                    q = b - G @ beta
                    break
    return sweeps, False


def objective(G, b, yty, beta, lam, weights) -> float:
    return float(yty - 2 * b @ beta + beta @ G @ beta + lam * np.sum(weights * np.abs(beta)))


def kkt_violation(G, b, beta, lam, weights) -> float:
    """Largest violation of the stationarity conditions over coordinates."""
    grad = -2.0 * (b - G @ beta)
    active = beta != 0
    viol = np.zeros_like(beta)
    viol[active] = np.abs(grad[active] + lam * weights[active] * np.sign(beta[active]))
    viol[~active] = np.maximum(np.abs(grad[~active]) - lam * weights[~active], 0.0)
    return float(viol.max()) if viol.size else 0.0


def solve_weighted_lasso(G, b, lam, weights, beta0=None, tol=1e-8, max_sweeps=10000):
    """Minimize the weighted-l1 objective in Gram form. Returns (beta, sweeps)."""
    G = np.ascontiguousarray(G, dtype=float)
    b = np.asarray(b, dtype=float)
    beta = np.zeros(b.size) if beta0 is None else np.array(beta0, dtype=float)
    thresh = 0.5 * lam * np.asarray(weights, dtype=float)
    sweeps, ok = _cd_solve(G, b, beta, thresh, tol, max_sweeps)
    if not ok:
        raise NoConvergence(lam, sweeps)
    beta[np.abs(beta) < ZERO_THRESHOLD] = 0.0
    return beta, sweeps


def lambda_max(b, weights) -> float:
    return float(2.0 * np.max(np.abs(b) / weights)) if b.size else 0.0


def compute_weights(dataset: MultiTaskDataset, task: int, screened,
                    weight_epsilon: float = 1e-12) -> np.ndarray:
    """w_j = 1 / (|b_ols_j| + eps) from OLS on the screened columns."""
    screened = list(screened)
    try:
        beta, _ = projector.ols_fit(dataset.design(task), dataset.response(task), screened)
    except projector.DegenerateColumn as err:
        raise DegenerateDesign(f"screened Gram matrix is singular: {err}") from err
    return 1.0 / (np.abs(np.atleast_1d(beta)) + weight_epsilon)


def fit_alasso_path(dataset: MultiTaskDataset, task: int, screened, weights,
                    config: AlassoConfig | None = None) -> list[AlassoFit]:
    config = config or AlassoConfig()
    screened = SupportSet(screened)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(screened),) or np.any(weights <= 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be positive, finite and match the screened set")
    Xs = dataset.design(task)[:, list(screened)]
    y = dataset.response(task)
    G = np.ascontiguousarray(Xs.T @ Xs)
    b = Xs.T @ y
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    lmax = lambda_max(b, weights)
    if lmax <= 0:
        grid = np.array([0.0])
    else:
        grid = lmax * np.logspace(0, np.log10(config.lambda_min_ratio), config.lambda_grid_size)
    beta = np.zeros(len(screened))
    fits = []
    for lam in grid:
        beta, sweeps = solve_weighted_lasso(G, b, lam, weights, beta, config.cd_tolerance,
                                            config.max_cd_iterations)
        r = y - Xs @ beta
        fits.append(AlassoFit(task, screened, float(lam), beta.copy(), float(r @ r),
                              kkt_violation(G, b, beta, lam, weights), scale, sweeps))
    return fits


def select_fit(path: Sequence[AlassoFit], params: BicParams) -> AlassoFit:
    """BIC-minimizing fit; ties go to the larger lambda."""
    if not path:
        raise ValueError("empty path")
    best = None
    best_key = None
    for fit in path:
        key = (bic_score(fit.rss, fit.nonzero, params), -fit.lambda_selected)
        if best_key is None or key < best_key:
            best, best_key = fit, key
    return best


def fit_task(dataset: MultiTaskDataset, task: int, screened, config: AlassoConfig | None = None,
             bic_p: int | None = None, diagnostics: AlassoDiagnostics | None = None) -> AlassoFit:
    config = config or AlassoConfig()
    w = compute_weights(dataset, task, screened, config.weight_epsilon)
    path = fit_alasso_path(dataset, task, screened, w, config)
    if diagnostics is not None:
        for f in path:
            diagnostics.record(f)
    return select_fit(path, BicParams(n=dataset.n, T=1, p=bic_p or dataset.p))


def exact_support_pipeline(dataset: MultiTaskDataset, screened, config: AlassoConfig | None = None,
                           bic_p: int | None = None,
                           diagnostics: AlassoDiagnostics | None = None) -> CoefficientMatrix:
    """ALasso on every task; ``screened`` is one support or one per task."""
    screened = list(screened) if not isinstance(screened, SupportSet) else screened
    if isinstance(screened, SupportSet) or not screened or np.isscalar(screened[0]):
        per_task = [SupportSet(screened)] * dataset.T
    else:
        per_task = [SupportSet(s) for s in screened]
        if len(per_task) != dataset.T:
            raise ValueError(f"got {len(per_task)} screened sets for {dataset.T} tasks")
    entries = {}
    for t in range(dataset.T):
        if not per_task[t]:
            continue
        try:
            fit = fit_task(dataset, t, per_task[t], config, bic_p, diagnostics)
        except (NoConvergence, DegenerateDesign) as err:
            if diagnostics is not None and isinstance(err, NoConvergence):
                diagnostics.no_convergence += 1
            raise TaskError(t, err) from err
        for j, v in zip(fit.screened, fit.coefficients):
            if v != 0.0:
                entries[(j, t)] = v
    return CoefficientMatrix(dataset.p, dataset.T, entries)
