"""Bootstrap inference for structural impulse responses.

Two resampling schemes over the reduced-form residuals:

* recursive-design wild bootstrap: each residual K-vector is multiplied by
  an i.i.d. Rademacher draw, preserving contemporaneous correlation and
  second moments exactly;
* residual moving-block bootstrap: overlapping blocks of consecutive
  residual rows are drawn uniformly, concatenated, truncated to the sample
  length, and recentered position-by-position.

Either way a synthetic sample is rebuilt recursively from the point
estimates (first ``p`` original observations as initial conditions), the
whole estimation and identification pipeline is re-run on it, and bands are
formed as point ∓ k times the per-entry standard deviation across
replications.

Determinism contract: the random stream of replication ``r`` is derived
from ``(seed, r, attempt)`` alone, and draws are reduced in replication
order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BlockTooLongError,
    NotPositiveDefiniteError,
    ReplicationFailureError,
    SingularDesignError,
)
from .identification import (
    IrfResult,
    RecursiveSVAR,
    cholesky_lower,
    normalize,
    structural_irf,
)
from .validation import check_horizon
from .var import ma_coefficients, ols_var

__all__ = [
    "BootConfig",
    "BandSet",
    "rebuild_sample",
    "bootstrap_draws",
    "wild_bootstrap",
    "mbb_bootstrap",
    "bands",
]

# A replication is retried with a fresh sub-stream this many times before
# it is counted as failed.
_MAX_ATTEMPTS = 5

# Bootstrap aborts when more than this share of replications fail.
_FAILURE_SHARE = 0.01


@dataclass(frozen=True)
class BootConfig:
    """Bootstrap settings.

    ``seed`` has no default on purpose: inference must be reproducible, so
    the caller always states one.
    """

    replications: int = 1000
    method: str = "wild"
    block_len: int = 36
    seed: int | None = None
    horizon: int = 15
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if int(self.replications) < 2:
            raise ValueError(f"need >= 2 replications, got {self.replications}")
        if self.method not in ("wild", "mbb"):
            raise ValueError(f"method must be 'wild' or 'mbb', got {self.method!r}")
        if int(self.block_len) < 1:
            raise ValueError(f"block_len must be >= 1, got {self.block_len}")
        check_horizon(self.horizon)
        if int(self.n_jobs) < 1:
            raise ValueError(f"n_jobs must be >= 1, got {self.n_jobs}")

    def require_seed(self) -> int:
        if self.seed is None:
            raise ValueError(
                "bootstrap seed is required; pass an explicit integer seed"
            )
        return int(self.seed)


@dataclass(frozen=True)
class BandSet:
    """Point responses with symmetric standard-error bands.

    ``se[h, i, j]`` is the bootstrap standard deviation (divisor R - 1) of
    the response of variable ``i`` to shock ``j`` at horizon ``h``; the
    k-SE band is ``point ∓ k·se``, so bands nest and always contain the
    point estimate.
    """

    point: IrfResult
    se: np.ndarray
    k_list: tuple[int, ...] = (1, 2)
    replications: int = 0
    failures: int = 0
    method: str = ""

    def __post_init__(self) -> None:
        se = np.asarray(self.se, dtype=float)
        if se.shape != self.point.values.shape:
            raise ValueError(
                f"se shape {se.shape} does not match point {self.point.values.shape}"
            )
        if (se < 0).any():
            raise ValueError("negative standard errors")
        se = se.copy()
        se.setflags(write=False)
        object.__setattr__(self, "se", se)
        object.__setattr__(self, "k_list",
                           tuple(sorted(int(k) for k in self.k_list)))

    def lower(self, k: int) -> np.ndarray:
        return self.point.values - k * self.se

    def upper(self, k: int) -> np.ndarray:
        return self.point.values + k * self.se

    def to_csv(self, path) -> None:
        """Long format ``shock,variable,horizon,point,se,lo1,hi1,lo2,hi2``."""
        if 1 not in self.k_list or 2 not in self.k_list:
            raise ValueError("CSV layout requires 1-SE and 2-SE bands")
        point = self.point
        lo1, hi1 = self.lower(1), self.upper(1)
        lo2, hi2 = self.lower(2), self.upper(2)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["shock", "variable", "horizon",
                             "point", "se", "lo1", "hi1", "lo2", "hi2"])
            for j, shock in enumerate(point.shocks):
                for i, variable in enumerate(point.variables):
                    for h in range(point.values.shape[0]):
                        writer.writerow([
                            shock, variable, h,
                            repr(float(point.values[h, i, j])),
                            repr(float(self.se[h, i, j])),
                            repr(float(lo1[h, i, j])),
                            repr(float(hi1[h, i, j])),
                            repr(float(lo2[h, i, j])),
                            repr(float(hi2[h, i, j])),
                        ])


def rebuild_sample(initial: np.ndarray, alpha: np.ndarray, coef: np.ndarray,
                   innovations: np.ndarray) -> np.ndarray:
    """Simulate the fitted recursion forward over given innovations.

    ``initial`` supplies the first ``p`` rows verbatim; row ``p + t`` is
    ``alpha + sum_i A_i y_{p+t-i} + innovations[t]``. Output has
    ``p + len(innovations)`` rows.
    """
    p, k, _ = coef.shape
    top = coef.transpose(1, 0, 2).reshape(k, k * p)
    n = innovations.shape[0]
    out = np.empty((p + n, k))
    out[:p] = initial[:p]
    # state holds (y_{t-1}, ..., y_{t-p}) flattened, newest first
    state = out[:p][::-1].ravel().copy()
    scratch = np.empty_like(state)
    for t in range(n):
        y = top @ state + alpha + innovations[t]
        out[p + t] = y
        if p > 1:
            scratch[:k] = y
            scratch[k:] = state[:-k]
            state, scratch = scratch, state
        else:
            state[:] = y
    return out


def _rademacher(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n) * 2.0 - 1.0


def _wild_innovations(rng, residuals, block_len, multiplier_draw):
    draw = multiplier_draw if multiplier_draw is not None else _rademacher
    eta = np.asarray(draw(rng, residuals.shape[0]), dtype=float)
    return residuals * eta[:, None]


def _mbb_innovations(rng, residuals, block_len, multiplier_draw):
    n = residuals.shape[0]
    ell = int(block_len)
    if ell > n:
        raise BlockTooLongError(
            f"block length {ell} exceeds {n} residual rows"
        )
    n_starts = n - ell + 1
    m = -(-n // ell)    # ceil
    starts = rng.integers(0, n_starts, size=m)
    idx = (starts[:, None] + np.arange(ell)[None, :]).ravel()[:n]
    out = residuals[idx]
    if n_starts > 1:
        # position-wise centering: subtract the mean over all admissible
        # blocks at each within-block offset. With a single admissible
        # block that would zero the residuals outright, so it is skipped
        # and the resample degenerates to the original matrix.
        centers = np.empty((ell, residuals.shape[1]))
        for s in range(ell):
            centers[s] = residuals[s:s + n_starts].mean(axis=0)
        out = out - centers[np.tile(np.arange(ell), m)[:n]]
    return out


def bootstrap_draws(model: RecursiveSVAR, cfg: BootConfig,
                    cumulative_rows=(), multiplier_draw=None):
    """Run all replications; return ``(draws, failures)``.

    ``draws`` has shape ``(R_ok, H+1, K, K)`` in replication order. A
    replication whose resample yields a singular design or a non-PD
    covariance is redrawn from a fresh sub-stream up to 5 times, then
    counted in ``failures``; more than 1% failures aborts.

    ``multiplier_draw(rng, n)`` overrides the wild multiplier (test hook).
    """
    model._check_fitted()
    seed = cfg.require_seed()
    horizon = int(cfg.horizon)
    rows = model.resolve_rows(cumulative_rows)
    var = model.var_
    residuals = var.residuals_
    alpha, coef = var.alpha_, var.coef_
    initial = model.sample_[:int(var.lags)]
    intercept = bool(var.intercept)
    lags = int(var.lags)
    price_row = int(model.price_row)
    innovate = _wild_innovations if cfg.method == "wild" else _mbb_innovations
    if cfg.method == "mbb" and int(cfg.block_len) > residuals.shape[0]:
        raise BlockTooLongError(
            f"block length {cfg.block_len} exceeds {residuals.shape[0]} "
            f"residual rows"
        )

    def one(r: int):
        for attempt in range(_MAX_ATTEMPTS):
            rng = np.random.default_rng((seed, r, attempt))
            resampled = innovate(rng, residuals, cfg.block_len,
                                 multiplier_draw)
            sample = rebuild_sample(initial, alpha, coef, resampled)
            try:
                _, coef_r, _, sigma_r = ols_var(sample, lags, intercept)
                b0inv_r, _ = normalize(cholesky_lower(sigma_r), price_row)
            except (SingularDesignError, NotPositiveDefiniteError):
                continue
            phi_r = ma_coefficients(coef_r, horizon)
            return structural_irf(phi_r, b0inv_r, rows)
        return None

    results: list[np.ndarray | None]
    if int(cfg.n_jobs) > 1:
        with ThreadPoolExecutor(max_workers=int(cfg.n_jobs)) as pool:
            results = list(pool.map(one, range(int(cfg.replications))))
    else:
        results = [one(r) for r in range(int(cfg.replications))]

    failures = sum(1 for r in results if r is None)
    if failures > _FAILURE_SHARE * int(cfg.replications):
        raise ReplicationFailureError(failures, int(cfg.replications))
    draws = np.stack([r for r in results if r is not None])
    return draws, failures


def bands(point: IrfResult, draws: np.ndarray,
          k_list=(1, 2), failures: int = 0, method: str = "") -> BandSet:
    """Symmetric SE bands around ``point`` from a stack of replication IRFs."""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 4 or draws.shape[1:] != point.values.shape:
        raise ValueError(
            f"draws shape {draws.shape} does not match point "
            f"{point.values.shape}"
        )
    if draws.shape[0] < 2:
        raise ValueError("need at least 2 replications to form bands")
    se = draws.std(axis=0, ddof=1)
    return BandSet(point, se, tuple(k_list),
                   replications=draws.shape[0], failures=failures,
                   method=method)


def wild_bootstrap(model: RecursiveSVAR, cfg: BootConfig,
                   cumulative_rows=(), multiplier_draw=None) -> BandSet:
    """Recursive-design wild bootstrap bands for the structural IRF."""
    if cfg.method != "wild":
        raise ValueError(f"config method is {cfg.method!r}, expected 'wild'")
    point = model.irf(int(cfg.horizon), cumulative_rows)
    draws, failures = bootstrap_draws(model, cfg, cumulative_rows,
                                      multiplier_draw)
    return bands(point, draws, failures=failures, method="wild")


def mbb_bootstrap(model: RecursiveSVAR, cfg: BootConfig,
                  cumulative_rows=()) -> BandSet:
    """Moving-block bootstrap bands for the structural IRF."""
    if cfg.method != "mbb":
        raise ValueError(f"config method is {cfg.method!r}, expected 'mbb'")
    point = model.irf(int(cfg.horizon), cumulative_rows)
    draws, failures = bootstrap_draws(model, cfg, cumulative_rows)
    return bands(point, draws, failures=failures, method="mbb")
