"""Least-squares model of h/sqrt(C) and the o-index scaling coefficient.

The regression model is::

    h / sqrt(C) ~ a0 + a1 * sqrt(C) + a2 * sqrt(<c>)

solved by ordinary least squares through a QR factorization of the design
matrix. All standard deviations use the population (divide by n) convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput, SingularDesign, TooFewPoints
from .metrics import MetricSummary

__all__ = [
    "RegressionDataset",
    "FitResult",
    "ScalingFit",
    "build_dataset",
    "dataset_from_arrays",
    "ols_fit",
    "predict_h_ratio",
    "scaling_ratios",
    "scaling_fit",
    "sample_stats",
    "RANK_TOLERANCE",
]

RANK_TOLERANCE = 1e-10
N_COEFFICIENTS = 3


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    """Columns ``x1 = sqrt(C)``, ``x2 = sqrt(<c>)`` and target ``y = h/sqrt(C)``."""

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    source_ids: tuple

    def __post_init__(self):
        n = len(self.source_ids)
        for name in ("x1", "x2", "y"):
            col = np.array(getattr(self, name), dtype=float).reshape(-1)
            if col.size != n:
                raise ValueError(f"column {name} has {col.size} rows, expected {n}")
            col.setflags(write=False)
            object.__setattr__(self, name, col)
        object.__setattr__(self, "source_ids", tuple(self.source_ids))
        if np.any(self.x1 <= 0):
            raise ValueError("sqrt(C) must be positive for every row")

    def __len__(self):
        return len(self.source_ids)

    @property
    def rows(self):
        return list(zip(self.x1.tolist(), self.x2.tolist(), self.y.tolist()))

    def design_matrix(self) -> np.ndarray:
        return np.column_stack([np.ones(len(self)), self.x1, self.x2])


@dataclass(frozen=True)
class FitResult:
    a0: float
    a1: float
    a2: float
    residual_std: float
    sample_mean: float
    sample_std: float
    n_points: int

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.a0, self.a1, self.a2)

    def as_dict(self) -> dict:
        return {
            "a0": self.a0,
            "a1": self.a1,
            "a2": self.a2,
            "residual_std": self.residual_std,
            "sample_mean": self.sample_mean,
            "sample_std": self.sample_std,
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class ScalingFit:
    """Coefficient ``k`` of ``o ~ k * C**0.5 * <c>**0.25`` and the spread of the per-researcher ratios."""

    k: float
    ratio_std: float
    n_points: int
    method: str = "mean"

    def as_dict(self) -> dict:
        return {"k": self.k, "ratio_std": self.ratio_std, "n_points": self.n_points,
                "method": self.method}


def _usable(s: MetricSummary, min_C=None) -> bool:
    if s.total_citations <= 0 or s.n_papers <= 0:
        return False
    return min_C is None or s.total_citations >= min_C


def build_dataset(summaries: Sequence[MetricSummary], min_C: int | None = None) -> RegressionDataset:
    """One regression row per researcher with C > 0, in input order.

    ``min_C`` optionally drops researchers with fewer total citations; no
    cut is applied by default.
    """
    kept = [s for s in summaries if _usable(s, min_C)]
    if len(kept) < N_COEFFICIENTS:
        raise TooFewPoints(len(kept), N_COEFFICIENTS)
    return RegressionDataset(
        x1=[math.sqrt(s.total_citations) for s in kept],
        x2=[math.sqrt(s.mean_citations) for s in kept],
        y=[s.h_ratio for s in kept],
        source_ids=[s.researcher_id for s in kept],
    )


def dataset_from_arrays(sqrt_C, sqrt_mean_c, h_ratio, source_ids=None) -> RegressionDataset:
    """Wrap precomputed columns, e.g. read back from a figure-data table."""
    n = len(h_ratio)
    if source_ids is None:
        source_ids = [str(i) for i in range(n)]
    if n < N_COEFFICIENTS:
        raise TooFewPoints(n, N_COEFFICIENTS)
    return RegressionDataset(x1=sqrt_C, x2=sqrt_mean_c, y=h_ratio, source_ids=source_ids)


def sample_stats(values) -> tuple[float, float]:
    """Mean and population standard deviation."""
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise EmptyInput("sample_stats needs at least one value")
    mean = float(arr.mean())
    return mean, float(np.sqrt(np.mean((arr - mean) ** 2)))


def ols_fit(data: RegressionDataset) -> FitResult:
    n = len(data)
    if n < N_COEFFICIENTS:
        raise TooFewPoints(n, N_COEFFICIENTS)
    X = data.design_matrix()
    y = data.y

    # Unit-norm columns make the rank test independent of the scale of C.
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise SingularDesign("design matrix has an all-zero column")
    Q, R = np.linalg.qr(X / norms, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.min() <= RANK_TOLERANCE * diag.max():
        raise SingularDesign(
            f"design matrix is rank deficient (|R_ii| min/max = {diag.min() / diag.max():.3e})"
        )
    beta = _back_substitute(R, Q.T @ y) / norms

    resid = y - X @ beta
    mean, std = sample_stats(y)
    return FitResult(
        a0=float(beta[0]),
        a1=float(beta[1]),
        a2=float(beta[2]),
        residual_std=float(np.sqrt(np.mean(resid**2))),
        sample_mean=mean,
        sample_std=std,
        n_points=n,
    )


def _back_substitute(R: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = R.shape[0]
    x = np.zeros(k)
    for i in range(k - 1, -1, -1):
        x[i] = (b[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x


def predict_h_ratio(fit: FitResult, C: float, mean_c: float) -> float:
    """Evaluate the fitted model; the value may fall outside [0, 1]."""
    return fit.a0 + fit.a1 * math.sqrt(C) + fit.a2 * math.sqrt(mean_c)


def scaling_ratios(summaries: Sequence[MetricSummary]) -> np.ndarray:
    """``o / (C**0.5 * <c>**0.25)`` for every researcher with C, N, o > 0."""
    rows = [s for s in summaries if _usable(s) and s.o_index > 0]
    return np.array(
        [s.o_index / (math.sqrt(s.total_citations) * s.mean_citations**0.25) for s in rows],
        dtype=float,
    )


def scaling_fit(summaries: Sequence[MetricSummary], method: str = "mean") -> ScalingFit:
    """Fit the single coefficient of the o-index scaling law.

    ``method="mean"`` takes ``k`` as the mean of the per-researcher ratios;
    ``method="log"`` fits in log space, i.e. the geometric mean of the ratios.
    ``ratio_std`` is the population std of the ratios in both cases.
    """
    ratios = scaling_ratios(summaries)
    if ratios.size == 0:
        raise TooFewPoints(0, 1)
    mean, std = sample_stats(ratios)
    if method == "mean":
        k = mean
    elif method == "log":
        k = float(np.exp(np.mean(np.log(ratios))))
    else:
        raise ValueError(f"unknown scaling method {method!r}")
    return ScalingFit(k=k, ratio_std=std, n_points=int(ratios.size), method=method)
