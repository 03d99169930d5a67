"""Recursive structural identification on top of the reduced-form VAR.

The reduced-form innovation covariance is factored as ``sigma = P P'`` with
``P`` lower triangular and positive diagonal. Column signs are then
normalized so that every structural shock moves a designated row (the price
variable, by default the last column) weakly upward on impact. Structural
shocks follow by forward substitution and have unit sample covariance
exactly, thanks to the ``T - p`` covariance divisor used upstream.

Column order of the input panel is load-bearing: it fixes which shock is
which. The canonical three-variable ordering is production growth, real
activity, real price, which labels the shocks supply, aggregate demand, and
market-specific demand.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import NotPositiveDefiniteError, ParseError, ZeroImpactError
from .timeseries import Month, Panel
from .validation import as_square, check_horizon, check_time_matrix
from .var import VAR

__all__ = [
    "OIL_SHOCK_NAMES",
    "cholesky_lower",
    "normalize",
    "structural_shocks",
    "structural_irf",
    "IrfResult",
    "RecursiveSVAR",
]

# Labels for the canonical 3-column ordering (production growth, activity,
# real price). Positive shocks raise the price on impact, so the first one
# is a supply disruption.
OIL_SHOCK_NAMES = ("oil_supply", "aggregate_demand", "oil_specific_demand")

# Relative eigenvalue floor below which the covariance is treated as
# numerically rank deficient.
_PD_FLOOR = 1e-12


def cholesky_lower(sigma) -> np.ndarray:
    """Lower-triangular Cholesky factor with a positive-definiteness gate.

    Raises
    ------
    NotPositiveDefiniteError
        If ``sigma`` is asymmetric beyond rounding or its smallest
        eigenvalue is at or below ``1e-12`` times the largest.
    """
    sigma = as_square(sigma, "sigma")
    scale = np.abs(sigma).max()
    if scale > 0 and np.abs(sigma - sigma.T).max() > 1e-8 * scale:
        raise NotPositiveDefiniteError("covariance matrix is not symmetric")
    eigs = np.linalg.eigvalsh(sigma)
    if eigs[-1] <= 0.0 or eigs[0] <= _PD_FLOOR * eigs[-1]:
        raise NotPositiveDefiniteError(
            f"covariance matrix is not positive definite "
            f"(eigenvalue range [{eigs[0]:.3e}, {eigs[-1]:.3e}])"
        )
    return np.linalg.cholesky(sigma)


def normalize(p_mat, price_row: int = -1):
    """Flip factor columns so every shock raises the price row on impact.

    Parameters
    ----------
    p_mat : (K, K) lower-triangular array
        Cholesky factor with positive diagonal.
    price_row : int, default -1
        Row whose impact responses define the sign convention; negative
        indices count from the end.

    Returns
    -------
    (b0inv, sign_flips)
        ``b0inv`` is the sign-normalized impact matrix, still lower
        triangular with exact zeros above the diagonal; ``sign_flips`` is
        the per-column ±1 vector that was applied.

    Raises
    ------
    ZeroImpactError
        If a price-row entry that triangularity does not force to zero is
        exactly zero, leaving the shock's sign undefined.
    """
    p_mat = as_square(p_mat, "impact matrix")
    k = p_mat.shape[0]
    row = price_row if price_row >= 0 else k + price_row
    if not 0 <= row < k:
        raise ValueError(f"price_row {price_row} out of range for K={k}")
    flips = np.ones(k)
    for j in range(k):
        if j > row:
            continue        # forced to zero by triangularity, never flipped
        impact = p_mat[row, j]
        if impact == 0.0:
            raise ZeroImpactError(
                f"shock {j} has exactly zero impact on row {row}; "
                f"sign normalization is undefined"
            )
        if impact < 0.0:
            flips[j] = -1.0
    b0inv = p_mat * flips
    b0inv[np.triu_indices(k, 1)] = 0.0   # keep upper zeros byte-exact
    return b0inv, flips


def structural_shocks(residuals: np.ndarray, b0inv: np.ndarray) -> np.ndarray:
    """Recover structural shocks by forward substitution.

    Solves ``b0inv @ w_t = e_t`` row by row; with the ``T - p`` covariance
    divisor upstream, the output has sample covariance exactly the
    identity (up to floating-point roundoff).
    """
    residuals = np.asarray(residuals, dtype=float)
    b0inv = as_square(b0inv, "b0inv")
    return solve_triangular(b0inv, residuals.T, lower=True).T


def structural_irf(phi: np.ndarray, b0inv: np.ndarray,
                   cumulative_rows=()) -> np.ndarray:
    """Structural responses ``theta_h = phi_h @ b0inv``, shape (H+1, K, K).

    ``out[h, i, j]`` is the response of variable ``i`` to a one-time unit
    impulse in shock ``j`` after ``h`` periods. Rows listed in
    ``cumulative_rows`` are replaced by running sums over ``h`` so
    log-differenced variables read as level responses; at ``h = 0`` the
    transform is the identity, so ``out[0]`` always equals ``b0inv``.
    """
    theta = np.matmul(phi, b0inv)
    for i in cumulative_rows:
        theta[:, i, :] = np.cumsum(theta[:, i, :], axis=0)
    return theta


@dataclass(frozen=True)
class IrfResult:
    """Structural impulse responses over horizons ``0..H``.

    ``values[h, i, j]`` is the response of ``variables[i]`` to a unit
    impulse in ``shocks[j]`` after ``h`` periods. ``cumulated`` lists the
    variable indices whose rows are running sums.
    """

    values: np.ndarray
    variables: tuple[str, ...]
    shocks: tuple[str, ...]
    cumulated: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 3 or arr.shape[1] != len(self.variables) \
                or arr.shape[2] != len(self.shocks):
            raise ValueError(
                f"values shape {arr.shape} does not match "
                f"{len(self.variables)} variables x {len(self.shocks)} shocks"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "shocks", tuple(self.shocks))
        object.__setattr__(self, "cumulated",
                           tuple(sorted(int(i) for i in self.cumulated)))

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    def response(self, shock: str, variable: str) -> np.ndarray:
        j = self.shocks.index(shock)
        i = self.variables.index(variable)
        return self.values[:, i, j]

    def to_csv(self, path) -> None:
        """Long format: ``shock,variable,horizon,response``."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["shock", "variable", "horizon", "response"])
            for j, shock in enumerate(self.shocks):
                for i, variable in enumerate(self.variables):
                    for h in range(self.values.shape[0]):
                        writer.writerow([shock, variable, h,
                                         repr(float(self.values[h, i, j]))])

    @classmethod
    def from_csv(cls, path) -> "IrfResult":
        """Rebuild from the long format; cumulation flags are not stored in
        the CSV (they live in run metadata) and come back empty."""
        shocks: list[str] = []
        variables: list[str] = []
        cells: dict[tuple[str, str], dict[int, float]] = {}
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["shock", "variable", "horizon", "response"]:
                raise ParseError(f"{path}: unexpected header {header}")
            for row in reader:
                if not row:
                    continue
                shock, variable, h_text, value = row
                if shock not in shocks:
                    shocks.append(shock)
                if variable not in variables:
                    variables.append(variable)
                cells.setdefault((shock, variable), {})[int(h_text)] = float(value)
        if not cells:
            raise ParseError(f"{path}: no rows")
        horizons = sorted(next(iter(cells.values())))
        values = np.empty((len(horizons), len(variables), len(shocks)))
        for j, shock in enumerate(shocks):
            for i, variable in enumerate(variables):
                series = cells.get((shock, variable))
                if series is None or sorted(series) != horizons:
                    raise ParseError(
                        f"{path}: missing cells for ({shock}, {variable})"
                    )
                values[:, i, j] = [series[h] for h in horizons]
        return cls(values, tuple(variables), tuple(shocks))


class RecursiveSVAR(BaseEstimator):
    """Recursively identified structural VAR.

    Fits the reduced form, factors its innovation covariance with a
    lower-triangular Cholesky decomposition, sign-normalizes the columns
    against ``price_row``, and recovers the structural shock series.

    Parameters
    ----------
    lags : int, default 24
    intercept : bool, default True
    price_row : int, default -1
        Variable whose impact response pins down shock signs (default:
        last column).
    shock_names : sequence of str, optional
        Labels for the structural shocks. Defaults to the canonical
        three-variable labels when K = 3, else ``shock_1..shock_K``.

    Attributes
    ----------
    var_ : VAR
        Fitted reduced form.
    b0inv_ : ndarray of shape (K, K)
        Sign-normalized lower-triangular impact matrix.
    sign_flips_ : ndarray of shape (K,)
        ±1 applied to each factor column.
    shocks_ : ndarray of shape (T - lags, K)
        Structural shock series, unit sample covariance.
    shock_names_ : tuple of str
    sample_ : ndarray of shape (T, K)
        The data the model was fitted on (needed by resampling and
        decomposition downstream).
    """

    def __init__(self, lags: int = 24, intercept: bool = True,
                 price_row: int = -1, shock_names=None):
        self.lags = lags
        self.intercept = intercept
        self.price_row = price_row
        self.shock_names = shock_names

    def fit(self, data, y=None):
        values, _, _ = check_time_matrix(data, min_rows=2)
        self.var_ = VAR(lags=self.lags, intercept=self.intercept).fit(data)
        k = self.var_.n_series_
        p_mat = cholesky_lower(self.var_.sigma_)
        self.b0inv_, self.sign_flips_ = normalize(p_mat, self.price_row)
        self.shocks_ = structural_shocks(self.var_.residuals_, self.b0inv_)
        if self.shock_names is not None:
            if len(self.shock_names) != k:
                raise ValueError(
                    f"{len(self.shock_names)} shock names for K={k} shocks"
                )
            self.shock_names_ = tuple(self.shock_names)
        elif k == len(OIL_SHOCK_NAMES):
            self.shock_names_ = OIL_SHOCK_NAMES
        else:
            self.shock_names_ = tuple(f"shock_{j + 1}" for j in range(k))
        values.setflags(write=False)
        self.sample_ = values
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "b0inv_"):
            raise NotFittedError(
                "this RecursiveSVAR instance is not fitted yet; call fit() first"
            )

    @property
    def n_series_(self) -> int:
        self._check_fitted()
        return self.b0inv_.shape[0]

    @property
    def var_names_(self):
        self._check_fitted()
        names = self.var_.var_names_
        if names is not None:
            return names
        return tuple(f"var_{i + 1}" for i in range(self.n_series_))

    @property
    def start_(self):
        self._check_fitted()
        return self.var_.start_

    @property
    def shock_start_(self):
        """Month of the first shock observation (panel input only)."""
        return self.var_.residual_start_

    def resolve_rows(self, rows) -> tuple[int, ...]:
        """Map variable names or indices to column indices."""
        self._check_fitted()
        out = []
        for r in rows:
            if isinstance(r, str):
                out.append(self.var_names_.index(r))
            else:
                out.append(int(r))
        for i in out:
            if not 0 <= i < self.n_series_:
                raise ValueError(f"variable index {i} out of range")
        return tuple(sorted(set(out)))

    def irf(self, horizon: int, cumulate=()) -> IrfResult:
        """Structural impulse responses out to ``horizon``.

        ``cumulate`` lists variables (names or indices) whose response
        rows are reported as running sums.
        """
        self._check_fitted()
        horizon = check_horizon(horizon)
        rows = self.resolve_rows(cumulate)
        phi = self.var_.ma_coefficients(horizon)
        theta = structural_irf(phi, self.b0inv_, rows)
        return IrfResult(theta, self.var_names_, self.shock_names_, rows)

    def shock_panel(self) -> Panel:
        """Structural shocks as a calendar panel (panel-fitted models only)."""
        self._check_fitted()
        if self.shock_start_ is None:
            raise ValueError(
                "model was fitted on a bare array; no calendar available"
            )
        return Panel(self.shock_start_, self.shocks_, self.shock_names_)

    def is_stable(self) -> bool:
        self._check_fitted()
        return self.var_.is_stable()

    # ------------------------------------------------------------------
    # JSON round-trip (self-contained: includes the training sample so
    # downstream stages can run from the document alone)

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "model": "recursive_svar",
            "price_row": int(self.price_row),
            "var": self.var_.to_dict(),
            "b0inv": self.b0inv_.tolist(),
            "sign_flips": self.sign_flips_.tolist(),
            "shock_names": list(self.shock_names_),
            "sample": self.sample_.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, payload: dict) -> "RecursiveSVAR":
        if payload.get("model") != "recursive_svar":
            raise ValueError(
                f"not a recursive SVAR payload: model={payload.get('model')!r}"
            )
        var = VAR.from_dict(payload["var"])
        est = cls(lags=int(var.lags), intercept=bool(var.intercept),
                  price_row=int(payload["price_row"]),
                  shock_names=list(payload["shock_names"]))
        est.var_ = var
        est.b0inv_ = np.asarray(payload["b0inv"], dtype=float)
        est.sign_flips_ = np.asarray(payload["sign_flips"], dtype=float)
        est.shock_names_ = tuple(payload["shock_names"])
        est.shocks_ = structural_shocks(var.residuals_, est.b0inv_)
        sample = np.asarray(payload["sample"], dtype=float)
        sample.setflags(write=False)
        est.sample_ = sample
        return est

    @classmethod
    def from_json(cls, text: str) -> "RecursiveSVAR":
        return cls.from_dict(json.loads(text))
