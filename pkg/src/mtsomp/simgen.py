"""Seedable generators for the five simulation designs.

Sim1/Sim2  iid N(0, 1) design, random-sign coefficients
Sim3       AR(1) design, Cov(X_a, X_b) = rho^|a-b|, fixed coefficients
Sim4       block-compound design: blocks of 10, rho / rho^2 / rho^3 between
           variables in the same / adjacent / next-adjacent block
Sim5       'masked' design where variable 1 is weakly marginally correlated

Every random draw comes from a Philox stream keyed by
(seed, replicate, stream id), so an instance is a pure function of its spec.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cholesky_banded
from scipy.signal import lfilter

from .datamodel import CoefficientMatrix, MultiTaskDataset, TrueModel, union_support

SCENARIOS = ("sim1", "sim2", "sim3", "sim4", "sim5")
SIM3_VALUES = (3.0, 1.5, 2.0)
SIM4_BLOCK = 10
SIM4_BANDWIDTH = 30

# stream ids
_COEF, _X_TRAIN, _EPS_TRAIN, _X_TEST, _EPS_TEST = range(5)


class CovarianceNotPD(ValueError):
    pass


class ZeroSignal(ValueError):
    pass


@dataclass(frozen=True)
class SimulationSpec:
    scenario: str
    n: int
    p: int
    s: int
    T: int
    t_nonzero: int
    snr: Optional[float] = None
    sigma: Optional[float] = None
    rho: Optional[float] = None
    seed: int = 0
    test_n: Optional[int] = None
    replicate: int = 0

    def __post_init__(self):
        sc = self.scenario.lower()
        object.__setattr__(self, "scenario", sc)
        if sc not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if min(self.n, self.p, self.T) < 1 or self.s < 0:
            raise ValueError("n, p, T must be >= 1 and s >= 0")
        if self.s > self.p:
            raise ValueError("s must be <= p")
        if not 0 <= self.t_nonzero <= self.T:
            raise ValueError("t_nonzero must lie in [0, T]")
        if sc == "sim5":
            if self.sigma is None or self.sigma <= 0:
                raise ValueError("sim5 needs a positive sigma")
        elif self.snr is None or self.snr <= 0:
            raise ValueError(f"{sc} needs a positive snr")
        if sc in ("sim3", "sim4"):
            if self.rho is None or not 0 <= self.rho < 1:
                raise ValueError(f"{sc} needs rho in [0, 1)")
        if sc == "sim3" and self.s != 3:
            raise ValueError("sim3 has exactly s = 3 relevant variables")
        if self.relevant_positions()[-1:] and self.relevant_positions()[-1] >= self.p:
            raise ValueError("relevant positions exceed p")

    @property
    def n_test(self) -> int:
        return self.n if self.test_n is None else self.test_n

    def relevant_positions(self) -> list[int]:
        if self.scenario == "sim3":
            return [3 * k for k in range(self.s)]
        if self.scenario == "sim4":
            return [10 * k for k in range(self.s)]
        return list(range(self.s))

    def with_replicate(self, replicate: int) -> "SimulationSpec":
        return replace(self, replicate=replicate)


def paper_spec(scenario: str, **overrides) -> SimulationSpec:
    """Full-scale settings of the reported tables (first noise level)."""
    base = {
        "sim1": dict(n=500, p=20000, s=18, T=500, t_nonzero=500, snr=15.0),
        "sim2": dict(n=200, p=5000, s=10, T=1000, t_nonzero=200, snr=5.0),
        "sim3": dict(n=100, p=5000, s=3, T=150, t_nonzero=80, snr=5.0, rho=0.5),
        "sim4": dict(n=150, p=4000, s=8, T=150, t_nonzero=80, snr=10.0, rho=0.5),
        "sim5": dict(n=200, p=10000, s=5, T=500, t_nonzero=400, sigma=1.5),
    }[scenario.lower()]
    base.update(overrides)
    return SimulationSpec(scenario=scenario, **base)


def rng_for(spec: SimulationSpec, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence([spec.seed, spec.replicate, stream])
    return np.random.Generator(np.random.Philox(ss))


def _nonzero_tasks(spec, rng):
    return np.sort(rng.choice(spec.T, size=spec.t_nonzero, replace=False))


def gen_coefficients_sim1(spec: SimulationSpec, rng: np.random.Generator,
                          positions=None) -> CoefficientMatrix:
    """(-1)^u (4 log(n)/sqrt(n) + |z|), u ~ Bernoulli(0.4), z ~ N(0, 1)."""
    positions = spec.relevant_positions() if positions is None else positions
    base = 4.0 * math.log(spec.n) / math.sqrt(spec.n)
    entries = {}
    for j in positions:
        tasks = _nonzero_tasks(spec, rng)
        u = rng.random(tasks.size) < 0.4
        z = rng.standard_normal(tasks.size)
        vals = np.where(u, -1.0, 1.0) * (base + np.abs(z))
        for t, v in zip(tasks.tolist(), vals.tolist()):
            entries[(j, t)] = v
    return CoefficientMatrix(spec.p, spec.T, entries)


def gen_coefficients(spec: SimulationSpec, rng: np.random.Generator) -> CoefficientMatrix:
    if spec.scenario in ("sim1", "sim2", "sim4"):
        return gen_coefficients_sim1(spec, rng)
    entries = {}
    for k, j in enumerate(spec.relevant_positions()):
        value = SIM3_VALUES[k] if spec.scenario == "sim3" else 2.0 * (j + 1)
        for t in _nonzero_tasks(spec, rng).tolist():
            entries[(j, t)] = value
    return CoefficientMatrix(spec.p, spec.T, entries)


def block_compound(rho: float, a, b) -> np.ndarray:
    """Correlation of variables a and b (0-based) under the block rule.

    The lag-only reading (rho for |a-b| <= 10, ...) is indefinite at rho=0.5,
    so distance is measured between blocks of 10 consecutive variables.
    """
    a, b = np.asarray(a), np.asarray(b)
    d = np.abs(a // SIM4_BLOCK - b // SIM4_BLOCK)
    out = np.select([d == 0, d == 1, d == 2], [rho, rho ** 2, rho ** 3], 0.0)
    return np.where(a == b, 1.0, out)


def _sim4_factor(rho: float, p: int) -> np.ndarray:
    bw = min(SIM4_BANDWIDTH, p - 1)
    ab = np.zeros((bw + 1, p))
    cols = np.arange(p)
    for k in range(bw + 1):
        # lower banded storage: ab[k, j] = Sigma[j + k, j]
        ab[k, :p - k] = block_compound(rho, cols[:p - k] + k, cols[:p - k])
    try:
        return cholesky_banded(ab, lower=True)
    except LinAlgError as err:
        raise CovarianceNotPD(f"block-compound covariance is not PD for rho={rho}") from err


def gen_design(spec: SimulationSpec, rng: np.random.Generator, rows: int) -> np.ndarray:
    if rows < 1:
        raise ValueError("rows must be >= 1")
    n, p = rows, spec.p
    E = rng.standard_normal((n, p))
    if spec.scenario in ("sim1", "sim2"):
        return E
    if spec.scenario == "sim3":
        rho = spec.rho
        scale = math.sqrt(1.0 - rho * rho)
        # x_1 = e_1, x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j
        E[:, 0] /= scale
        return lfilter([scale], [1.0, -rho], E, axis=1)
    if spec.scenario == "sim4":
        cb = _sim4_factor(spec.rho, p)
        X = np.zeros((n, p))
        for k in range(cb.shape[0]):
            X[:, k:] += cb[k, :p - k] * E[:, :p - k]
        return X
    s = spec.s
    Zs = rng.standard_normal((n, s))
    X = np.empty((n, p))
    X[:, :s] = (E[:, :s] + Zs) / math.sqrt(2.0)
    X[:, s:] = (E[:, s:] + E[:, :s].sum(axis=1, keepdims=True)) / 2.0
    return X


def covariance(spec: SimulationSpec, idx) -> np.ndarray:
    """Population covariance of the design restricted to columns ``idx``."""
    idx = np.asarray(idx)
    lag = idx[:, None] - idx[None, :]
    if spec.scenario in ("sim1", "sim2"):
        return np.eye(idx.size)
    if spec.scenario == "sim3":
        return spec.rho ** np.abs(lag).astype(float)
    if spec.scenario == "sim4":
        return block_compound(spec.rho, idx[:, None], idx[None, :])
    s = spec.s
    inner = idx < s
    C = np.full((idx.size, idx.size), s / 4.0)
    C[np.ix_(inner, ~inner)] = 1.0 / (2.0 * math.sqrt(2.0))
    C[np.ix_(~inner, inner)] = 1.0 / (2.0 * math.sqrt(2.0))
    C[np.ix_(inner, inner)] = 0.0
    np.fill_diagonal(C, np.where(inner, 1.0, (1.0 + s) / 4.0))
    return C


def signal_variances(spec: SimulationSpec, B: CoefficientMatrix) -> np.ndarray:
    """beta_t' Sigma beta_t for every task."""
    rows = list(union_support(B))
    if not rows:
        return np.zeros(B.T)
    Bsub = B.to_dense()[rows]
    S = covariance(spec, rows)
    return np.einsum("jt,jk,kt->t", Bsub, S, Bsub)


def sigma_from_snr(spec: SimulationSpec, truth: CoefficientMatrix) -> float:
    """sqrt(mean_t Var(x' beta_t) / SNR); one noise level shared by all tasks."""
    if spec.snr is None or spec.snr <= 0:
        raise ValueError("sigma_from_snr needs a positive snr")
    v = signal_variances(spec, truth)
    if not np.any(v > 0):
        raise ZeroSignal("all coefficient vectors are zero")
    return math.sqrt(float(v.mean()) / spec.snr)


@dataclass(frozen=True)
class GeneratedInstance:
    spec: SimulationSpec
    train: MultiTaskDataset
    test: MultiTaskDataset
    truth: TrueModel


def generate(spec: SimulationSpec) -> GeneratedInstance:
    B = gen_coefficients(spec, rng_for(spec, _COEF))
    sigma = spec.sigma if spec.scenario == "sim5" else sigma_from_snr(spec, B)
    Bd = B.to_dense()
    rows = spec.relevant_positions()

    def _draw(n_rows, xs, es):
        X = gen_design(spec, rng_for(spec, xs), n_rows)
        noise = rng_for(spec, es).standard_normal((n_rows, spec.T))
        Y = X[:, rows] @ Bd[rows] + sigma * noise
        return MultiTaskDataset(X, Y, shared=True)

    train = _draw(spec.n, _X_TRAIN, _EPS_TRAIN)
    test = _draw(spec.n_test, _X_TEST, _EPS_TEST)
    truth = TrueModel(B, union_support(B), sigma)
    return GeneratedInstance(spec, train, test, truth)
