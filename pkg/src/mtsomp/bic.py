"""Modified BIC: log(RSS / (nT)) + |M| (log n + 2 log p) / n."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BicParams:
    n: int
    T: int
    p: int
    rss_floor: float | None = None

    def __post_init__(self):
        if self.n < 1 or self.T < 1 or self.p < 1:
            raise ValueError(f"BicParams needs n, T, p >= 1, got {self.n}, {self.T}, {self.p}")
        if self.rss_floor is not None and not self.rss_floor > 0:
            raise ValueError("rss_floor must be positive")

    @property
    def floor(self) -> float:
        return 1e-12 * self.n * self.T if self.rss_floor is None else self.rss_floor

    @property
    def penalty_per_variable(self) -> float:
        return (math.log(self.n) + 2.0 * math.log(self.p)) / self.n


def bic_score(rss: float, model_size: int, params: BicParams) -> float:
    if rss < 0:
        raise ValueError(f"rss must be nonnegative, got {rss}")
    nt = params.n * params.T
    return math.log(max(rss, params.floor) / nt) + model_size * params.penalty_per_variable


def bic_curve(rss, params: BicParams) -> np.ndarray:
    """Vectorized score for models of size 0, 1, ..., len(rss) - 1."""
    rss = np.asarray(rss, dtype=float)
    sizes = np.arange(rss.size)
    return np.log(np.maximum(rss, params.floor) / (params.n * params.T)) \
        + sizes * params.penalty_per_variable
