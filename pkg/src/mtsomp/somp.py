"""Simultaneous orthogonal matching pursuit (greedy group forward regression).

At every step the variable that minimizes the residual sum of squares
summed over all tasks is added to the model. The nested path is then
truncated by minimizing the modified BIC.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import projector
from .bic import BicParams, bic_score
from .datamodel import MultiTaskDataset, PathStep, SelectionPath, SupportSet

logger = logging.getLogger(__name__)

# stop once total RSS falls below this fraction of sum_t |y_t|^2
PERFECT_FIT_RTOL = 1e-12


class NoValidCandidate(RuntimeError):
    pass


@dataclass(frozen=True)
class SompConfig:
    max_steps: Optional[int] = None
    candidate_tolerance: Optional[float] = None
    parallel_candidates: bool = False
    workers: int = 4
    bic_p: Optional[int] = None

    def resolve_steps(self, n: int, p: int) -> int:
        cap = min(n - 1, p)
        if self.max_steps is None:
            return cap
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        return min(self.max_steps, cap)


def _best_in_chunk(total: np.ndarray, valid: np.ndarray, lo: int, hi: int):
    g = np.where(valid[lo:hi], total[lo:hi], -np.inf)
    i = int(np.argmax(g))
    return g[i], lo + i


def _argmax_parallel(total, valid, workers):
    p = total.size
    bounds = np.linspace(0, p, workers + 1).astype(int)
    chunks = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        results = list(ex.map(lambda b: _best_in_chunk(total, valid, *b), chunks))
    best_gain, best_idx = -np.inf, -1
    for g, j in results:
        # max gain, then smallest index; chunks are ordered so strict > suffices
        if g > best_gain:
            best_gain, best_idx = g, j
    return best_gain, best_idx


def run_somp(dataset: MultiTaskDataset, config: SompConfig | None = None,
             progress: Callable[[int, int, float, float], None] | None = None) -> SelectionPath:
    """Greedy forward selection shared across all tasks.

    Ties in the total gain go to the smallest variable index. Degenerate
    candidates (collinear with the current model) are skipped.
    """
    config = config or SompConfig()
    n, p, T = dataset.n, dataset.p, dataset.T
    steps = config.resolve_steps(n, p)
    params = BicParams(n=n, T=T, p=config.bic_p or p)
    states = projector.init_states(dataset, eps_col=config.candidate_tolerance,
                                   max_size=steps)
    rss0 = float(sum(st.rss for st in states))
    floor = PERFECT_FIT_RTOL * float(sum(st.response_sq_norm.sum() for st in states))
    records: list[PathStep] = []
    skipped = 0
    rss = rss0
    for k in range(1, steps + 1):
        if rss < floor:
            break
        total = np.zeros(p)
        valid = np.ones(p, dtype=bool)
        for st in states:
            total += st.gains()
            valid &= ~st.degenerate_mask()
        if records:
            valid[[r.selected_index for r in records]] = False
        skipped = int(np.count_nonzero(~valid)) - len(records)
        if not valid.any():
            if k == 1:
                raise NoValidCandidate("every column of the design is degenerate")
            break
        if config.parallel_candidates and config.workers > 1:
            _, j = _argmax_parallel(total, valid, config.workers)
        else:
            _, j = _best_in_chunk(total, valid, 0, p)
        for st in states:
            projector.extend(st, j)
        rss = float(sum(st.rss for st in states))
        bic = bic_score(rss, k, params)
        records.append(PathStep(j, rss, bic))
        if progress is not None:
            progress(k, j, rss, bic)
    logger.debug("s-omp finished after %d steps", len(records))
    return SelectionPath(tuple(records), rss0, bic_score(rss0, 0, params), skipped)


def select_by_bic(path: SelectionPath, n: int, p: int, T: int) -> tuple[int, SupportSet]:
    """Prefix of the path minimizing the modified BIC (ties -> smaller model)."""
    params = BicParams(n=n, T=T, p=p)
    scores = [bic_score(path.rss_empty, 0, params)]
    scores += [bic_score(s.rss_after, k, params) for k, s in enumerate(path.steps, start=1)]
    s_hat = int(np.argmin(scores))
    return s_hat, path.model(s_hat)


def screen(dataset: MultiTaskDataset, config: SompConfig | None = None) -> SupportSet:
    """Run S-OMP and return the BIC-selected support."""
    config = config or SompConfig()
    path = run_somp(dataset, config)
    return select_by_bic(path, dataset.n, config.bic_p or dataset.p, dataset.T)[1]
