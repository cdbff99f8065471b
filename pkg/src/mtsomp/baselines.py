"""Single-task comparison methods (SIS, ISIS, OMP) and the composed
estimation pipelines used in the simulation tables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import alasso, projector
from .datamodel import CoefficientMatrix, MultiTaskDataset, SelectionPath, SupportSet
from .somp import SompConfig, run_somp, select_by_bic

METHODS = ("SIS-ALASSO", "ISIS-ALASSO", "OMP", "SOMP", "SOMP-ALASSO")


@dataclass(frozen=True)
class BaselineConfig:
    sis_model_size: Optional[int] = None
    isis_per_iter: Optional[int] = None
    isis_iterations: Optional[int] = None
    omp_max_steps: Optional[int] = None

    def resolved(self, n: int, p: int) -> "BaselineConfig":
        logn = math.log(n)
        cfg = BaselineConfig(
            sis_model_size=self.sis_model_size or min(n - 1, p),
            isis_per_iter=self.isis_per_iter or max(1, int(n // logn)),
            isis_iterations=self.isis_iterations or max(1, int(math.floor(logn - 1))),
            omp_max_steps=self.omp_max_steps or min(n - 1, p),
        )
        if cfg.sis_model_size >= n and n > 1:
            raise ValueError("sis_model_size must be < n")
        return cfg


def _rank(X: np.ndarray, r: np.ndarray, exclude=()) -> np.ndarray:
    """Indices ordered by |X_j' r| / |X_j| descending, ties by smaller index."""
    norms = np.sqrt(np.sum(X * X, axis=0))
    norms[norms == 0] = np.inf
    score = np.abs(X.T @ r) / norms
    if len(exclude):
        score[list(exclude)] = -np.inf
    return np.argsort(-score, kind="stable")


def sis_screen(dataset: MultiTaskDataset, task: int, size: int) -> SupportSet:
    if not 1 <= size <= dataset.p:
        raise ValueError(f"size must be in [1, {dataset.p}]")
    order = _rank(dataset.design(task), dataset.response(task))
    return SupportSet(order[:size])


def isis_screen(dataset: MultiTaskDataset, task: int, config: BaselineConfig | None = None,
                trace: list | None = None) -> SupportSet:
    """Iterative SIS with OLS-residual re-ranking.

    Iteration 1 is plain SIS; later iterations rank the remaining variables
    by correlation with the OLS residual on everything selected so far.
    Additions that are collinear with the current selection are skipped.
    ``trace``, when given, receives the list added in each iteration.
    """
    cfg = (config or BaselineConfig()).resolved(dataset.n, dataset.p)
    if cfg.isis_per_iter * cfg.isis_iterations > dataset.p:
        raise ValueError("isis_per_iter * isis_iterations exceeds p")
    X, y = dataset.design(task), dataset.response(task)
    st = projector.CholeskyState(X, y, max_size=min(dataset.n, dataset.p))
    selected: list[int] = []
    r = y
    for it in range(cfg.isis_iterations):
        if it > 0:
            r = y - X[:, selected] @ projector.coefficients(st)
        added = []
        for j in _rank(X, r, exclude=selected):
            if len(added) == cfg.isis_per_iter or len(selected) >= st.max_size:
                break
            if projector.is_degenerate(st, int(j)):
                continue
            projector.extend(st, int(j))
            selected.append(int(j))
            added.append(int(j))
        if trace is not None:
            trace.append(added)
    return SupportSet(selected)


def omp_single(dataset: MultiTaskDataset, task: int, max_steps: int | None = None,
               bic_p: int | None = None) -> SelectionPath:
    """Single-task OMP: the S-OMP engine on task ``task`` alone."""
    return run_somp(dataset.task(task), SompConfig(max_steps=max_steps, bic_p=bic_p))


def _ols_columns(dataset, supports) -> CoefficientMatrix:
    entries = {}
    for t, sup in enumerate(supports):
        if not sup:
            continue
        beta, _ = projector.ols_fit(dataset.design(t), dataset.response(t), sup)
        for j, v in zip(sup, np.atleast_1d(beta)):
            entries[(j, t)] = v
    return CoefficientMatrix(dataset.p, dataset.T, entries)


def run_pipeline(dataset: MultiTaskDataset, method: str, somp_config: SompConfig | None = None,
                 baseline_config: BaselineConfig | None = None,
                 alasso_config: alasso.AlassoConfig | None = None,
                 bic_p: int | None = None,
                 diagnostics: alasso.AlassoDiagnostics | None = None,
                 stages: dict | None = None) -> CoefficientMatrix:
    """Run one estimation pipeline and return the p x T coefficient estimate.

    ``stages`` (optional dict) receives the screening output for auditing.
    """
    method = method.upper()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    n, p, T = dataset.n, dataset.p, dataset.T
    bic_p = bic_p or p
    stages = {} if stages is None else stages
    if method in ("SIS-ALASSO", "ISIS-ALASSO"):
        cfg = (baseline_config or BaselineConfig()).resolved(n, p)
        if method == "SIS-ALASSO":
            screened = [sis_screen(dataset, t, cfg.sis_model_size) for t in range(T)]
        else:
            screened = [isis_screen(dataset, t, cfg) for t in range(T)]
        stages["screened"] = screened
        return alasso.exact_support_pipeline(dataset, screened, alasso_config, bic_p, diagnostics)
    if method == "OMP":
        cfg = (baseline_config or BaselineConfig()).resolved(n, p)
        supports = []
        for t in range(T):
            path = omp_single(dataset, t, cfg.omp_max_steps, bic_p)
            supports.append(select_by_bic(path, n, bic_p, 1)[1])
        stages["screened"] = supports
        return _ols_columns(dataset, supports)
    cfg = somp_config or SompConfig()
    path = run_somp(dataset, SompConfig(cfg.max_steps, cfg.candidate_tolerance,
                                        cfg.parallel_candidates, cfg.workers, bic_p))
    _, support = select_by_bic(path, n, bic_p, T)
    stages["path"] = path
    stages["screened"] = support
    if method == "SOMP":
        return _ols_columns(dataset, [support] * T)
    if not support:
        return CoefficientMatrix.zeros(p, T)
    return alasso.exact_support_pipeline(dataset, support, alasso_config, bic_p, diagnostics)
