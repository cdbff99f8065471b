"""Support-recovery, estimation and prediction metrics plus Monte Carlo
aggregation."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .datamodel import CoefficientMatrix, MultiTaskDataset, TrueModel, exact_support, union_support


class DimensionMismatch(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


@dataclass(frozen=True)
class SupportMetrics:
    covered: bool
    frac_correct_zeros: float
    frac_incorrect_zeros: float
    exactly_fitted: bool
    support_size: int


@dataclass(frozen=True)
class ReplicateReport:
    union: SupportMetrics
    exact: SupportMetrics
    estimation_error: float
    r2_test: float


def _check(truth: TrueModel, estimate: CoefficientMatrix):
    B = truth.coefficients
    if (B.p, B.T) != (estimate.p, estimate.T):
        raise DimensionMismatch(f"truth is {B.p} x {B.T}, estimate is {estimate.p} x {estimate.T}")


def _support_metrics(true_set: frozenset, est_set: frozenset, universe: int) -> SupportMetrics:
    s = len(true_set)
    missed = len(true_set - est_set)
    false_pos = len(est_set - true_set)
    n_zero = universe - s
    # vacuous fractions (no true zeros / no true nonzeros) count as perfect
    correct = (n_zero - false_pos) / n_zero if n_zero else 1.0
    incorrect = missed / s if s else 0.0
    return SupportMetrics(covered=missed == 0, frac_correct_zeros=correct,
                          frac_incorrect_zeros=incorrect,
                          exactly_fitted=(missed == 0 and false_pos == 0),
                          support_size=len(est_set))


def union_metrics(truth: TrueModel, estimate: CoefficientMatrix) -> SupportMetrics:
    _check(truth, estimate)
    return _support_metrics(frozenset(truth.relevant_set), frozenset(union_support(estimate)),
                            estimate.p)


def exact_metrics(truth: TrueModel, estimate: CoefficientMatrix) -> SupportMetrics:
    _check(truth, estimate)
    return _support_metrics(exact_support(truth.coefficients), exact_support(estimate),
                            estimate.p * estimate.T)


def estimation_error(truth: TrueModel, estimate: CoefficientMatrix) -> float:
    """Squared Frobenius norm of B - B_hat."""
    _check(truth, estimate)
    diff = dict(truth.coefficients.entries)
    for key, v in estimate.entries.items():
        diff[key] = diff.get(key, 0.0) - v
    return float(sum(v * v for v in diff.values()))


def _predictions(test: MultiTaskDataset, estimate: CoefficientMatrix) -> np.ndarray:
    if (test.p, test.T) != (estimate.p, estimate.T):
        raise DimensionMismatch("test set and estimate dimensions differ")
    B = estimate.to_dense()
    if test.shared:
        return test.design(0) @ B
    return np.column_stack([test.design(t) @ B[:, t] for t in range(test.T)])


def r2_test(test: MultiTaskDataset, estimate: CoefficientMatrix) -> float:
    """1 - sum_it (y - x'b)^2 / sum_it (y - mean_t)^2 over the test set."""
    Y = test.responses
    resid = Y - _predictions(test, estimate)
    centered = Y - Y.mean(axis=0)
    denom = float(np.sum(centered * centered))
    if denom == 0:
        raise ZeroVariance("test responses have zero variance")
    return 1.0 - float(np.sum(resid * resid)) / denom


def r2_normalized(test: MultiTaskDataset, estimate: CoefficientMatrix) -> float:
    """1 - |Y - X B|^2 / (n T), meant for responses normalized to unit variance."""
    resid = test.responses - _predictions(test, estimate)
    return 1.0 - float(np.sum(resid * resid)) / (test.n * test.T)


def replicate_report(truth: TrueModel, estimate: CoefficientMatrix,
                     test: MultiTaskDataset | None = None, r2=r2_test) -> ReplicateReport:
    r2_value = r2(test, estimate) if test is not None else float("nan")
    return ReplicateReport(union_metrics(truth, estimate), exact_metrics(truth, estimate),
                           estimation_error(truth, estimate), r2_value)


METRIC_FIELDS = [f.name for f in fields(SupportMetrics)]


def flatten(report: ReplicateReport) -> dict:
    out = {}
    for section in ("union", "exact"):
        for k, v in asdict(getattr(report, section)).items():
            out[f"{section}.{k}"] = float(v)
    out["estimation_error"] = report.estimation_error
    out["r2_test"] = report.r2_test
    return out


@dataclass(frozen=True)
class AggregateReport:
    method: str
    replicates: int
    mean: dict
    sd: dict

    def section(self, name: str) -> dict:
        """Table row for 'union' or 'exact', proportions scaled to percent."""
        pct = {"covered", "frac_correct_zeros", "frac_incorrect_zeros", "exactly_fitted"}
        row = {}
        for k in METRIC_FIELDS:
            v = self.mean[f"{name}.{k}"]
            row[k] = 100.0 * v if k in pct else v
        if name == "exact":
            row["estimation_error"] = self.mean["estimation_error"]
            row["r2_test"] = self.mean["r2_test"]
        return row


def aggregate(reports: list[ReplicateReport], method: str) -> AggregateReport:
    """Per-field mean and sample standard deviation (0 for one replicate)."""
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    rows = [flatten(r) for r in reports]
    keys = list(rows[0])
    data = np.array([[row[k] for k in keys] for row in rows])
    mean = data.mean(axis=0)
    sd = data.std(axis=0, ddof=1) if len(rows) > 1 else np.zeros(len(keys))
    return AggregateReport(method, len(rows), dict(zip(keys, mean.tolist())),
                           dict(zip(keys, sd.tolist())))
