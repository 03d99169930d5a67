"""Reduced-form vector autoregression estimation.

The model is ``y_t = alpha + A_1 y_{t-1} + ... + A_p y_{t-p} + e_t`` with a
K-vector ``y_t``. Estimation is equation-by-equation least squares on the
common regressor block, solved through an orthogonal decomposition of the
design matrix (never through the normal equations, which square the
condition number).

The innovation covariance uses the divisor ``T - p`` (effective sample
size, no further degrees-of-freedom correction). Downstream code relies on
this exactly: it makes the implied structural shocks have unit sample
covariance, see :mod:`oilsvar.identification`.
"""

from __future__ import annotations

import json

import numpy as np

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import SingularDesignError, TooFewObservationsError
from .timeseries import Month
from .validation import check_horizon, check_lag_order, check_time_matrix

__all__ = [
    "VAR",
    "design_matrix",
    "ols_var",
    "companion_matrix",
    "spectral_radius",
    "is_stable",
    "ma_coefficients",
]

# Relative reciprocal-condition floor for the implied cross-product matrix.
# lstsq returns singular values of X; cond(X'X) = cond(X)^2.
_RCOND_FLOOR = 1e-12

# A companion spectral radius this close to one is treated as unstable.
_STABILITY_MARGIN = 1e-9


def design_matrix(y: np.ndarray, lags: int, intercept: bool = True):
    """Stack the lagged regressor block for a ``(T, K)`` sample.

    Returns ``(X, Y)`` where ``Y = y[lags:]`` has ``T - lags`` rows and
    ``X`` holds ``[1, y_{t-1}, ..., y_{t-p}]`` per row (constant column
    only when ``intercept``).
    """
    n_total, k = y.shape
    n = n_total - lags
    blocks = []
    if intercept:
        blocks.append(np.ones((n, 1)))
    for i in range(1, lags + 1):
        blocks.append(y[lags - i:n_total - i])
    return np.hstack(blocks), y[lags:]


def ols_var(y: np.ndarray, lags: int, intercept: bool = True):
    """Least-squares VAR fit on a bare array, the hot path for resampling.

    Returns ``(alpha, coef, residuals, sigma)`` with ``coef`` of shape
    ``(lags, K, K)``; ``coef[i - 1]`` is the matrix on ``y_{t-i}``, rows
    indexing equations.

    Raises
    ------
    SingularDesignError
        If the regressor cross-product is numerically singular
        (reciprocal condition below 1e-12).
    """
    n_total, k = y.shape
    X, Y = design_matrix(y, lags, intercept)
    beta, _, _, sv = np.linalg.lstsq(X, Y, rcond=None)
    smax = sv[0] if sv.size else 0.0
    if smax <= 0.0 or (sv[-1] / smax) ** 2 < _RCOND_FLOOR:
        raise SingularDesignError(
            f"regressor matrix is numerically singular "
            f"({X.shape[0]} rows, {X.shape[1]} columns)"
        )
    if intercept:
        alpha = beta[0].copy()
        lag_block = beta[1:]
    else:
        alpha = np.zeros(k)
        lag_block = beta
    # beta rows follow the design layout: lag 1 block first, each (K, K)
    # sub-block transposed relative to the equation-by-row convention.
    coef = lag_block.reshape(lags, k, k).transpose(0, 2, 1).copy()
    residuals = Y - X @ beta
    sigma = residuals.T @ residuals / residuals.shape[0]
    return alpha, coef, residuals, sigma


def companion_matrix(coef: np.ndarray) -> np.ndarray:
    """Stack ``(p, K, K)`` lag matrices into the ``(Kp, Kp)`` companion form."""
    p, k, _ = coef.shape
    comp = np.zeros((k * p, k * p))
    comp[:k] = coef.transpose(1, 0, 2).reshape(k, k * p)
    if p > 1:
        comp[k:, :-k] = np.eye(k * (p - 1))
    return comp


def spectral_radius(coef: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(companion_matrix(coef))).max())


def is_stable(coef: np.ndarray) -> bool:
    """True when every companion eigenvalue is inside the unit circle,
    with a small safety margin."""
    return spectral_radius(coef) < 1.0 - _STABILITY_MARGIN


def ma_coefficients(coef: np.ndarray, horizon: int) -> np.ndarray:
    """Moving-average matrices ``Phi_0 .. Phi_H`` of the fitted recursion.

    ``Phi_0 = I`` and ``Phi_h = sum_{i=1}^{min(h,p)} Phi_{h-i} A_i``,
    returned stacked as ``(H + 1, K, K)``. ``Phi_h[i, j]`` is the response
    of variable ``i`` to a unit innovation in equation ``j`` after ``h``
    months.
    """
    horizon = check_horizon(horizon)
    p, k, _ = coef.shape
    phi = np.empty((horizon + 1, k, k))
    phi[0] = np.eye(k)
    for h in range(1, horizon + 1):
        acc = np.zeros((k, k))
        for i in range(1, min(h, p) + 1):
            acc += phi[h - i] @ coef[i - 1]
        phi[h] = acc
    return phi


class VAR(BaseEstimator):
    """Least-squares vector autoregression with an sklearn-style interface.

    Parameters
    ----------
    lags : int, default 24
        Autoregressive order ``p``.
    intercept : bool, default True
        Include a constant term in every equation.

    Attributes
    ----------
    alpha_ : ndarray of shape (K,)
        Estimated intercepts (zeros when ``intercept=False``).
    coef_ : ndarray of shape (lags, K, K)
        ``coef_[i - 1]`` is the matrix on ``y_{t-i}``, rows = equations.
    residuals_ : ndarray of shape (T - lags, K)
        One-step-ahead residuals over the effective sample.
    sigma_ : ndarray of shape (K, K)
        Residual covariance with divisor ``T - lags``.
    nobs_ : int
        Effective sample size ``T - lags``.
    var_names_ : tuple of str or None
        Column names when fitted on a panel.
    start_ : Month or None
        First month of the (pre-sample inclusive) input when fitted on a
        panel; residuals start ``lags`` months later.
    """

    def __init__(self, lags: int = 24, intercept: bool = True):
        self.lags = lags
        self.intercept = intercept

    def fit(self, data, y=None):
        values, start, names = check_time_matrix(data, min_rows=2)
        lags = check_lag_order(self.lags, n_obs=values.shape[0])
        n_total, k = values.shape
        n_params = k * lags + (1 if self.intercept else 0)
        if n_total - lags <= n_params:
            raise TooFewObservationsError(
                f"{n_total} rows leave {n_total - lags} equations for "
                f"{n_params} parameters per equation; need more data or "
                f"fewer lags"
            )
        alpha, coef, residuals, sigma = ols_var(values, lags,
                                                bool(self.intercept))
        self.alpha_ = alpha
        self.coef_ = coef
        self.residuals_ = residuals
        self.sigma_ = sigma
        self.nobs_ = residuals.shape[0]
        self.var_names_ = names
        self.start_ = start
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "coef_"):
            raise NotFittedError(
                "this VAR instance is not fitted yet; call fit() first"
            )

    @property
    def n_series_(self) -> int:
        self._check_fitted()
        return self.coef_.shape[1]

    @property
    def residual_start_(self):
        """Month of the first residual row, or None for bare arrays."""
        self._check_fitted()
        return None if self.start_ is None else self.start_ + int(self.lags)

    def predict(self, data):
        """One-step-ahead fitted values for a ``(T, K)`` history.

        Row ``t`` of the output predicts ``data[lags + t]`` from the
        ``lags`` rows before it; output shape is ``(T - lags, K)``.
        """
        self._check_fitted()
        values, _, _ = check_time_matrix(data, min_rows=int(self.lags) + 1)
        if values.shape[1] != self.n_series_:
            raise ValueError(
                f"expected {self.n_series_} columns, got {values.shape[1]}"
            )
        X, _ = design_matrix(values, int(self.lags), bool(self.intercept))
        k, p = self.n_series_, int(self.lags)
        beta_lags = self.coef_.transpose(0, 2, 1).reshape(p * k, k)
        lag_part = X[:, 1:] if self.intercept else X
        out = lag_part @ beta_lags
        if self.intercept:
            out = out + self.alpha_
        return out

    def companion_matrix(self) -> np.ndarray:
        self._check_fitted()
        return companion_matrix(self.coef_)

    def spectral_radius(self) -> float:
        self._check_fitted()
        return spectral_radius(self.coef_)

    def is_stable(self) -> bool:
        self._check_fitted()
        return is_stable(self.coef_)

    def ma_coefficients(self, horizon: int) -> np.ndarray:
        self._check_fitted()
        return ma_coefficients(self.coef_, horizon)

    # ------------------------------------------------------------------
    # JSON round-trip. Floats serialize via repr so a dump/load cycle is
    # lossless and re-dumping is byte-identical.

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "model": "var",
            "lags": int(self.lags),
            "intercept": bool(self.intercept),
            "names": list(self.var_names_) if self.var_names_ else None,
            "start": None if self.start_ is None else str(self.start_),
            "nobs": int(self.nobs_),
            "alpha": self.alpha_.tolist(),
            "coef": self.coef_.tolist(),
            "sigma": self.sigma_.tolist(),
            "residuals": self.residuals_.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, payload: dict) -> "VAR":
        if payload.get("model") != "var":
            raise ValueError(f"not a VAR payload: model={payload.get('model')!r}")
        est = cls(lags=int(payload["lags"]), intercept=bool(payload["intercept"]))
        est.alpha_ = np.asarray(payload["alpha"], dtype=float)
        est.coef_ = np.asarray(payload["coef"], dtype=float)
        est.residuals_ = np.asarray(payload["residuals"], dtype=float)
        est.sigma_ = np.asarray(payload["sigma"], dtype=float)
        est.nobs_ = int(payload["nobs"])
        names = payload.get("names")
        est.var_names_ = tuple(names) if names else None
        start = payload.get("start")
        est.start_ = None if start is None else Month.parse(start)
        return est

    @classmethod
    def from_json(cls, text: str) -> "VAR":
        return cls.from_dict(json.loads(text))
