"""Rank correlation and regression metrics.

Spearman's rho is computed as the Pearson correlation of average ranks, so
tied values are handled exactly rather than through the no-ties shortcut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import TARGET

MAPE_EPSILON = 1e-8


class UndefinedCorrelationError(ValueError):
    """Raised when a correlation involves a constant vector."""


class MetricError(ValueError):
    pass


def rank_average_ties(x):
    """1-based ranks of ``x`` with ties given the mean of the positions they span.

    >>> rank_average_ties([10, 20, 20, 30]).tolist()
    [1.0, 2.5, 2.5, 4.0]
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected a non-empty 1-D sequence")
    if np.isnan(x).any():
        raise ValueError("cannot rank NaN values")
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    last = np.cumsum(counts).astype(np.float64)
    first = last - counts + 1.0
    return ((first + last) / 2.0)[inverse]


def _pearson(a, b):
    da = a - a.mean()
    db = b - b.mean()
    saa = np.sum(da * da)
    sbb = np.sum(db * db)
    r = np.sum(da * db) / math.sqrt(saa * sbb)
    return float(min(1.0, max(-1.0, r)))


def spearman_pair(x, y):
    """Spearman rank correlation between two equal-length sequences."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    rx = rank_average_ties(x)
    ry = rank_average_ties(y)
    if np.all(rx == rx[0]):
        raise UndefinedCorrelationError("first sequence is constant")
    if np.all(ry == ry[0]):
        raise UndefinedCorrelationError("second sequence is constant")
    return _pearson(rx, ry)


@dataclass(frozen=True, eq=False)
class CorrelationReport:
    """Spearman matrix over every column plus the target-ranked feature list."""

    columns: tuple
    matrix: np.ndarray
    target_ranking: tuple  # of (feature name, rho), most positive first

    def value(self, a, b):
        return float(self.matrix[self.columns.index(a), self.columns.index(b)])

    def matrix_csv(self):
        lines = [",".join(("column",) + self.columns)]
        for name, row in zip(self.columns, self.matrix):
            lines.append(",".join([name] + [repr(float(v)) for v in row]))
        return "\n".join(lines) + "\n"

    def ranking_csv(self):
        lines = ["rank,feature,spearman"]
        for i, (name, rho) in enumerate(self.target_ranking, start=1):
            lines.append(f"{i},{name},{rho:.6f}")
        return "\n".join(lines) + "\n"

    def to_text(self):
        return (
            "# spearman correlation matrix\n" + self.matrix_csv()
            + "\n# ranking by correlation with " + TARGET + "\n" + self.ranking_csv()
        )


def correlation_matrix(dataset):
    """Spearman correlations between all columns of ``dataset``.

    Raises :class:`UndefinedCorrelationError` naming the first constant column.
    """
    if len(dataset) < 2:
        raise ValueError("need at least 2 samples")
    columns = dataset.columns
    ranks = []
    for name in columns:
        r = rank_average_ties(dataset.column(name))
        if np.all(r == r[0]):
            raise UndefinedCorrelationError(f"column {name!r} is constant")
        ranks.append(r)

    k = len(columns)
    matrix = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            matrix[i, j] = matrix[j, i] = _pearson(ranks[i], ranks[j])
    matrix.flags.writeable = False

    ranking = rank_by_correlation(columns[:-1], matrix[-1, :-1])
    return CorrelationReport(columns, matrix, ranking)


def rank_by_correlation(names, values):
    """Sort ``(name, value)`` pairs by signed value, descending; ties keep input order."""
    order = sorted(range(len(names)), key=lambda j: (-values[j], j))
    return tuple((names[j], float(values[j])) for j in order)


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.ndim != 1 or y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise ValueError("need at least 1 observation")
    return y, y_hat


def mse(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def rmse(y, y_hat):
    return math.sqrt(mse(y, y_hat))


def mae(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def mape_percent(y, y_hat, return_count=False):
    """Mean absolute percentage error, in percent.

    Samples with ``|y| < 1e-8`` are skipped; pass ``return_count=True`` to
    also get how many samples were used.
    """
    y, y_hat = _pair(y, y_hat)
    keep = np.abs(y) >= MAPE_EPSILON
    m = int(keep.sum())
    if m == 0:
        raise MetricError("MAPE undefined: every target is zero")
    value = float(100.0 * np.mean(np.abs((y[keep] - y_hat[keep]) / y[keep])))
    return (value, m) if return_count else value


def r2(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    if y.size < 2:
        raise MetricError("R^2 needs at least 2 observations")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricError("R^2 undefined for a constant target")
    ss_res = float(np.sum((y - y_hat) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    rmse: float
    mae: float
    mape_percent: float
    r2: float
    n_used_for_mape: int

    def as_row(self):
        return [self.mse, self.rmse, self.mae, self.mape_percent, self.r2]


def evaluate_all(y, y_hat):
    m = mse(y, y_hat)
    mape, used = mape_percent(y, y_hat, return_count=True)
    return MetricsReport(
        mse=m,
        rmse=math.sqrt(m),
        mae=mae(y, y_hat),
        mape_percent=mape,
        r2=r2(y, y_hat),
        n_used_for_mape=used,
    )


TABLE_HEADER = ("model", "MSE", "RMSE", "MAE", "MAPE", "R2", "MAPE_n")


def comparison_csv(rows):
    """Render ``[(model name, MetricsReport), ...]`` in the results-table layout."""
    lines = [",".join(TABLE_HEADER)]
    for name, report in rows:
        values = [repr(float(v)) for v in report.as_row()]
        lines.append(",".join([name] + values + [str(report.n_used_for_mape)]))
    return "\n".join(lines) + "\n"
