"""Input validation helpers shared by the estimators.

All estimators accept either a :class:`~oilsvar.timeseries.Panel` or a bare
``(T, K)`` array. These helpers normalize the two forms into
``(values, start, names)`` and centralize the defensive checks so the
estimator bodies stay on the math.
"""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import TooFewObservationsError
from .timeseries import Month, Panel

__all__ = [
    "check_time_matrix",
    "check_vector",
    "check_lag_order",
    "check_horizon",
    "as_square",
]


def check_time_matrix(data, min_rows: int = 1):
    """Coerce panel-or-array input to ``(values, start, names)``.

    ``values`` is a C-contiguous float64 copy of shape ``(T, K)``. ``start``
    and ``names`` are ``None`` for bare arrays. A 1-D array is treated as a
    single column.
    """
    if isinstance(data, Panel):
        values = np.array(data.values, dtype=float, order="C")
        start: Month | None = data.start
        names: tuple[str, ...] | None = data.names
    else:
        values = np.array(data, dtype=float, order="C")
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError(f"expected 2-D data, got shape {values.shape}")
        start, names = None, None
    if not np.isfinite(values).all():
        raise ValueError("data contains NaN or infinite values")
    if values.shape[0] < min_rows:
        raise TooFewObservationsError(
            f"need at least {min_rows} rows, got {values.shape[0]}"
        )
    if values.shape[1] < 1:
        raise ValueError("data has no columns")
    return values, start, names


def check_vector(x, name: str = "x", min_len: int = 1) -> np.ndarray:
    """Coerce to a finite 1-D float64 vector."""
    arr = np.asarray(x, dtype=float).reshape(-1)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or infinite values")
    if arr.size < min_len:
        raise TooFewObservationsError(
            f"{name} needs at least {min_len} values, got {arr.size}"
        )
    return arr


def check_lag_order(lags, n_obs: int | None = None) -> int:
    if not isinstance(lags, numbers.Integral) or isinstance(lags, bool):
        raise ValueError(f"lags must be an integer, got {lags!r}")
    lags = int(lags)
    if lags < 1:
        raise ValueError(f"lags must be >= 1, got {lags}")
    if n_obs is not None and n_obs <= lags:
        raise TooFewObservationsError(
            f"need more than lags={lags} observations, got {n_obs}"
        )
    return lags


def check_horizon(horizon) -> int:
    if not isinstance(horizon, numbers.Integral) or isinstance(horizon, bool):
        raise ValueError(f"horizon must be an integer, got {horizon!r}")
    horizon = int(horizon)
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    return horizon


def as_square(mat, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(mat, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr
