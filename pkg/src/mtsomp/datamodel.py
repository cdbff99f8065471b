"""Core domain types: multi-task datasets, supports, selection paths and
sparse coefficient matrices.

Indices are 0-based everywhere in memory. Serialized output converts to
1-based indices at the boundary (see ``mtsomp.cli``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

# solver outputs below this magnitude are stored as exact zeros
ZERO_THRESHOLD = 1e-12


class MultiTaskDataset:
    """Designs and responses for T regression tasks.

    Either one shared n x p design (``shared=True``, all tasks regress on
    the same X) or one design per task. Responses are stored as an n x T
    matrix, column t being task t.
    """

    def __init__(self, designs, responses, shared: bool | None = None):
        Y = np.asarray(responses, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2:
            raise ValueError(f"responses must be n x T, got shape {Y.shape}")
        if isinstance(designs, np.ndarray) and designs.ndim == 2:
            if shared is False:
                designs = [designs] * Y.shape[1]
            else:
                shared = True
        if shared:
            X = np.asarray(designs, dtype=float)
            if X.ndim != 2:
                raise ValueError("shared design must be a 2-d array")
            Xs = (X,)
        else:
            Xs = tuple(np.asarray(X, dtype=float) for X in designs)
            if len(Xs) != Y.shape[1]:
                raise ValueError(
                    f"got {len(Xs)} designs for {Y.shape[1]} response columns")
            shared = False
        n, p = Xs[0].shape
        for X in Xs:
            if X.ndim != 2 or X.shape != (n, p):
                raise ValueError("all designs must have identical n x p shape")
        if Y.shape[0] != n:
            raise ValueError(f"responses have {Y.shape[0]} rows, designs have {n}")
        if n < 1 or p < 1 or Y.shape[1] < 1:
            raise ValueError("need n >= 1, p >= 1 and T >= 1")
        for X in Xs:
            X.setflags(write=False)
        Y.setflags(write=False)
        self._designs = Xs
        self.responses = Y
        self.shared = bool(shared)
        self.n, self.p = n, p
        self.T = Y.shape[1]

    def design(self, t: int) -> np.ndarray:
        if not 0 <= t < self.T:
            raise IndexError(f"task index {t} out of range for T={self.T}")
        return self._designs[0] if self.shared else self._designs[t]

    @property
    def designs(self) -> tuple:
        return self._designs

    def response(self, t: int) -> np.ndarray:
        return self.responses[:, t]

    def task(self, t: int) -> "MultiTaskDataset":
        """Single-task view of task ``t``."""
        return MultiTaskDataset(self.design(t), self.responses[:, t], shared=True)

    def subset_tasks(self, tasks: Sequence[int]) -> "MultiTaskDataset":
        tasks = list(tasks)
        if self.shared:
            return MultiTaskDataset(self._designs[0], self.responses[:, tasks], shared=True)
        return MultiTaskDataset([self._designs[t] for t in tasks],
                                self.responses[:, tasks], shared=False)

    def standardized(self) -> "MultiTaskDataset":
        """Columns of every design centered and scaled to unit sample variance."""
        def _std(X):
            mu = X.mean(axis=0)
            sd = X.std(axis=0)
            sd[sd == 0] = 1.0
            return (X - mu) / sd
        Xs = [_std(X) for X in self._designs]
        if self.shared:
            return MultiTaskDataset(Xs[0], self.responses, shared=True)
        return MultiTaskDataset(Xs, self.responses, shared=False)

    def __repr__(self):
        mode = "shared" if self.shared else "per-task"
        return f"MultiTaskDataset(n={self.n}, p={self.p}, T={self.T}, {mode})"


class SupportSet(tuple):
    """Ordered tuple of distinct variable indices."""

    def __new__(cls, indices: Iterable[int] = (), p: int | None = None):
        idx = tuple(int(i) for i in indices)
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate indices in support {idx}")
        if any(i < 0 for i in idx) or (p is not None and any(i >= p for i in idx)):
            raise ValueError(f"support indices out of range [0, {p})")
        return super().__new__(cls, idx)

    def as_set(self) -> frozenset:
        return frozenset(self)

    def one_based(self) -> list[int]:
        return [i + 1 for i in self]


@dataclass(frozen=True)
class PathStep:
    selected_index: int
    rss_after: float
    bic_after: float


@dataclass(frozen=True)
class SelectionPath:
    """Nested greedy models M(0) c M(1) c ... with RSS and BIC per step."""

    steps: tuple[PathStep, ...]
    rss_empty: float
    bic_empty: float
    n_degenerate_skipped: int = 0

    def __post_init__(self):
        idx = [s.selected_index for s in self.steps]
        if len(set(idx)) != len(idx):
            raise ValueError("selected indices must be pairwise distinct")

    def __len__(self):
        return len(self.steps)

    @property
    def selected(self) -> SupportSet:
        return SupportSet(s.selected_index for s in self.steps)

    @property
    def rss(self) -> np.ndarray:
        """RSS for models of size 0..len(path)."""
        return np.array([self.rss_empty] + [s.rss_after for s in self.steps])

    @property
    def bic(self) -> np.ndarray:
        return np.array([self.bic_empty] + [s.bic_after for s in self.steps])

    def model(self, k: int) -> SupportSet:
        return SupportSet(s.selected_index for s in self.steps[:k])


class CoefficientMatrix:
    """Sparse p x T coefficient matrix; absent entries are exactly zero."""

    def __init__(self, p: int, T: int, entries: Mapping[tuple[int, int], float] | None = None):
        self.p, self.T = int(p), int(T)
        clean = {}
        for (j, t), v in (entries or {}).items():
            if not (0 <= j < self.p and 0 <= t < self.T):
                raise IndexError(f"entry ({j}, {t}) outside {self.p} x {self.T}")
            v = float(v)
            if not np.isfinite(v):
                raise ValueError(f"non-finite coefficient at ({j}, {t})")
            if abs(v) >= ZERO_THRESHOLD:
                clean[(int(j), int(t))] = v
        self._entries = clean

    @classmethod
    def from_dense(cls, B) -> "CoefficientMatrix":
        B = np.asarray(B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        rows, cols = np.nonzero(np.abs(B) >= ZERO_THRESHOLD)
        return cls(B.shape[0], B.shape[1],
                   {(j, t): B[j, t] for j, t in zip(rows.tolist(), cols.tolist())})

    @classmethod
    def zeros(cls, p: int, T: int) -> "CoefficientMatrix":
        return cls(p, T)

    @property
    def entries(self) -> dict:
        return dict(self._entries)

    def get(self, j: int, t: int) -> float:
        return self._entries.get((j, t), 0.0)

    def to_dense(self) -> np.ndarray:
        B = np.zeros((self.p, self.T))
        for (j, t), v in self._entries.items():
            B[j, t] = v
        return B

    def column(self, t: int) -> np.ndarray:
        b = np.zeros(self.p)
        for (j, tt), v in self._entries.items():
            if tt == t:
                b[j] = v
        return b

    def triples(self) -> list[tuple[int, int, float]]:
        """(variable, task, value) sorted by variable then task."""
        return sorted((j, t, v) for (j, t), v in self._entries.items())

    def __len__(self):
        return len(self._entries)

    def __eq__(self, other):
        if not isinstance(other, CoefficientMatrix):
            return NotImplemented
        return (self.p, self.T, self._entries) == (other.p, other.T, other._entries)

    def __repr__(self):
        return f"CoefficientMatrix(p={self.p}, T={self.T}, nnz={len(self._entries)})"


def union_support(B: CoefficientMatrix) -> SupportSet:
    """Rows with at least one nonzero entry, ascending."""
    return SupportSet(sorted({j for (j, _t) in B._entries}))


def exact_support(B: CoefficientMatrix) -> frozenset:
    """All (variable, task) pairs with a nonzero entry."""
    return frozenset(B._entries)


@dataclass(frozen=True)
class TrueModel:
    coefficients: CoefficientMatrix
    relevant_set: SupportSet
    noise_sigma: float

    def __post_init__(self):
        if set(self.relevant_set) != set(union_support(self.coefficients)):
            raise ValueError("relevant_set must equal the union support of coefficients")
        if not self.noise_sigma > 0:
            raise ValueError("noise_sigma must be positive")

    @property
    def s(self) -> int:
        return len(self.relevant_set)
