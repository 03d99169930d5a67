"""Distributed-lag regressions of outside series on structural shocks.

A dependent series (quarterly GDP growth, monthly county employment, ...)
is regressed on a constant and lags ``0..L`` of one structural shock at a
time. The coefficient at lag ``h`` reads as the response at horizon ``h``;
for growth-rate dependents the running sum of coefficients reads as the
level response, reported when ``cumulative`` is set.

Inference resamples whole regression rows (the dependent value together
with its own lag block) in overlapping blocks, so serial dependence within
a block and the row's internal alignment both survive the resampling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import (
    BlockTooLongError,
    ReplicationFailureError,
    SingularDesignError,
    TooFewObservationsError,
)
from .timeseries import MonthlySeries, Panel, QuarterlySeries, quarterly_average
from .validation import check_vector

__all__ = [
    "Stage2Spec",
    "Stage2Bands",
    "DistributedLagRegression",
    "fit_distributed_lag",
    "block_bootstrap_bands",
    "shocks_to_quarterly",
    "write_stage2_csv",
]

_MAX_ATTEMPTS = 5
_FAILURE_SHARE = 0.01


@dataclass(frozen=True)
class Stage2Spec:
    """Settings for one distributed-lag regression.

    ``lags`` is the highest shock lag entering the regression (12 gives 13
    coefficients). ``block_len`` counts periods of whatever frequency the
    regression runs at. ``cumulative`` switches reporting to running sums.
    """

    lags: int = 12
    block_len: int = 6
    replications: int = 1000
    seed: int | None = None
    cumulative: bool = False

    def __post_init__(self) -> None:
        if int(self.lags) < 0:
            raise ValueError(f"lags must be >= 0, got {self.lags}")
        if int(self.block_len) < 1:
            raise ValueError(f"block_len must be >= 1, got {self.block_len}")
        if int(self.replications) < 2:
            raise ValueError(
                f"need >= 2 replications, got {self.replications}"
            )

    def require_seed(self) -> int:
        if self.seed is None:
            raise ValueError(
                "bootstrap seed is required; pass an explicit integer seed"
            )
        return int(self.seed)


def _axis_values(series, name: str):
    """Pull (values, start-or-None) out of a series or bare array."""
    if isinstance(series, (MonthlySeries, QuarterlySeries)):
        return np.asarray(series.values, dtype=float), series.start
    return check_vector(series, name), None


def _align_pair(z, x):
    """Overlap two series on their common calendar (or trust equal-length
    arrays when no calendar is available)."""
    z_vals, z_start = _axis_values(z, "z")
    x_vals, x_start = _axis_values(x, "x")
    if z_start is not None and x_start is not None:
        if type(z_start) is not type(x_start):
            raise ValueError(
                "dependent and shock series have different frequencies"
            )
        lo = max(z_start.index, x_start.index)
        hi = min(z_start.index + z_vals.size, x_start.index + x_vals.size)
        if lo >= hi:
            raise TooFewObservationsError("series ranges do not overlap")
        z_vals = z_vals[lo - z_start.index:hi - z_start.index]
        x_vals = x_vals[lo - x_start.index:hi - x_start.index]
    elif z_vals.size != x_vals.size:
        raise ValueError(
            f"length mismatch without calendars: {z_vals.size} vs {x_vals.size}"
        )
    return z_vals, x_vals


def _design(z: np.ndarray, x: np.ndarray, lags: int):
    """Rows t = lags..n-1 of [1, x_t, x_{t-1}, ..., x_{t-lags}] and z_t."""
    n = z.size
    rows = n - lags
    X = np.ones((rows, lags + 2))
    for h in range(lags + 1):
        X[:, h + 1] = x[lags - h:n - h]
    return X, z[lags:]


def _solve(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    beta, _, _, sv = np.linalg.lstsq(X, y, rcond=None)
    smax = sv[0] if sv.size else 0.0
    if smax <= 0.0 or (sv[-1] / smax) ** 2 < 1e-12:
        raise SingularDesignError(
            f"distributed-lag design is numerically singular "
            f"({X.shape[0]} rows, {X.shape[1]} columns)"
        )
    return beta


class DistributedLagRegression(BaseEstimator):
    """Least squares of a series on a constant and shock lags ``0..lags``.

    Attributes
    ----------
    intercept_ : float
    coef_ : ndarray of shape (lags + 1,)
        Lag coefficients, horizon 0 first.
    residuals_ : ndarray
    nobs_ : int
        Rows in the effective sample (input length minus ``lags``).
    """

    def __init__(self, lags: int = 12):
        self.lags = lags

    def fit(self, X, y):
        """``X`` is the shock series, ``y`` the dependent series; both may
        be calendar series (aligned on overlap) or equal-length arrays."""
        lags = int(self.lags)
        if lags < 0:
            raise ValueError(f"lags must be >= 0, got {self.lags}")
        z_vals, x_vals = _align_pair(y, X)
        if z_vals.size - lags <= lags + 2:
            raise TooFewObservationsError(
                f"{z_vals.size} aligned observations leave "
                f"{z_vals.size - lags} rows for {lags + 2} parameters"
            )
        design, target = _design(z_vals, x_vals, lags)
        beta = _solve(design, target)
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:].copy()
        self.residuals_ = target - design @ beta
        self.nobs_ = target.size
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "coef_"):
            raise NotFittedError(
                "this DistributedLagRegression instance is not fitted yet"
            )

    def cumulative_responses(self) -> np.ndarray:
        """Running sums of the lag coefficients (level response of a
        growth-rate dependent)."""
        self._check_fitted()
        return np.cumsum(self.coef_)

    def responses(self, cumulative: bool = False) -> np.ndarray:
        self._check_fitted()
        return self.cumulative_responses() if cumulative else self.coef_.copy()


def fit_distributed_lag(z, shock, spec: Stage2Spec) -> DistributedLagRegression:
    """Fit the lag regression of ``z`` on ``shock`` under ``spec``."""
    return DistributedLagRegression(lags=int(spec.lags)).fit(shock, z)


@dataclass(frozen=True)
class Stage2Bands:
    """Point responses for one shock with block-bootstrap SE bands."""

    shock: str
    point: np.ndarray                 # reported responses, horizon 0..L
    se: np.ndarray
    coefficients: np.ndarray          # raw lag coefficients
    intercept: float
    cumulative: bool
    replications: int = 0
    failures: int = 0
    k_list: tuple[int, ...] = (1, 2)

    def __post_init__(self) -> None:
        for name in ("point", "se", "coefficients"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.point.shape == self.se.shape == self.coefficients.shape):
            raise ValueError("band arrays must share one shape")

    def lower(self, k: int) -> np.ndarray:
        return self.point - k * self.se

    def upper(self, k: int) -> np.ndarray:
        return self.point + k * self.se


def block_bootstrap_bands(z, shock, spec: Stage2Spec,
                          shock_name: str = "") -> Stage2Bands:
    """Overlapping-block bootstrap of the distributed-lag regression.

    Whole design rows are resampled, so each row keeps its own lag block;
    blocks are ``spec.block_len`` consecutive rows with uniformly drawn
    starts, concatenated and truncated to the original row count. Each
    replication refits and reports (cumulative) responses; ``se`` is the
    per-horizon standard deviation across replications (divisor R - 1).
    """
    seed = spec.require_seed()
    lags = int(spec.lags)
    z_vals, x_vals = _align_pair(z, shock)
    if z_vals.size - lags <= lags + 2:
        raise TooFewObservationsError(
            f"{z_vals.size} aligned observations leave {z_vals.size - lags} "
            f"rows for {lags + 2} parameters"
        )
    design, target = _design(z_vals, x_vals, lags)
    beta = _solve(design, target)
    n_rows = target.size
    ell = int(spec.block_len)
    if ell > n_rows:
        raise BlockTooLongError(
            f"block length {ell} exceeds {n_rows} regression rows"
        )
    n_starts = n_rows - ell + 1
    m = -(-n_rows // ell)   # ceil
    offsets = np.arange(ell)

    point = np.cumsum(beta[1:]) if spec.cumulative else beta[1:].copy()
    draws = []
    failures = 0
    for r in range(int(spec.replications)):
        drawn = None
        for attempt in range(_MAX_ATTEMPTS):
            rng = np.random.default_rng((seed, r, attempt))
            starts = rng.integers(0, n_starts, size=m)
            idx = (starts[:, None] + offsets[None, :]).ravel()[:n_rows]
            try:
                beta_r = _solve(design[idx], target[idx])
            except SingularDesignError:
                continue
            drawn = np.cumsum(beta_r[1:]) if spec.cumulative else beta_r[1:]
            break
        if drawn is None:
            failures += 1
        else:
            draws.append(drawn)
    if failures > _FAILURE_SHARE * int(spec.replications):
        raise ReplicationFailureError(failures, int(spec.replications))
    stack = np.stack(draws)
    se = stack.std(axis=0, ddof=1)
    return Stage2Bands(
        shock=shock_name, point=point, se=se,
        coefficients=beta[1:], intercept=float(beta[0]),
        cumulative=bool(spec.cumulative),
        replications=stack.shape[0], failures=failures,
    )


def shocks_to_quarterly(shock_panel: Panel) -> tuple[QuarterlySeries, ...]:
    """Quarterly averages of each monthly shock column."""
    return tuple(quarterly_average(col) for col in shock_panel.columns())


def write_stage2_csv(path, results) -> None:
    """Long format ``shock,horizon,point,se,lo1,hi1,lo2,hi2,cumulative``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["shock", "horizon", "point", "se",
                         "lo1", "hi1", "lo2", "hi2", "cumulative"])
        for res in results:
            lo1, hi1 = res.lower(1), res.upper(1)
            lo2, hi2 = res.lower(2), res.upper(2)
            flag = "true" if res.cumulative else "false"
            for h in range(res.point.size):
                writer.writerow([
                    res.shock, h,
                    repr(float(res.point[h])), repr(float(res.se[h])),
                    repr(float(lo1[h])), repr(float(hi1[h])),
                    repr(float(lo2[h])), repr(float(hi2[h])),
                    flag,
                ])
