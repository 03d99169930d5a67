"""Shared test utilities: random stable systems and brute-force oracles.

Everything here is deliberately independent of the package internals: the
oracles rebuild designs with plain Python loops and simulate recursions
step by step, so agreement with the library is evidence, not tautology.
"""

import numpy as np


def make_stable_var(rng, k, p, radius=0.6):
    """Random lag matrices rescaled to an exact companion spectral radius.

    Scaling lag i by c**i scales every companion eigenvalue by c, so the
    output hits ``radius`` exactly (up to eigenvalue roundoff).
    """
    coef = rng.normal(scale=0.5, size=(p, k, k))
    comp = np.zeros((k * p, k * p))
    for i in range(p):
        comp[:k, i * k:(i + 1) * k] = coef[i]
    if p > 1:
        comp[k:, :-k] = np.eye(k * (p - 1))
    r0 = np.abs(np.linalg.eigvals(comp)).max()
    c = radius / r0
    for i in range(p):
        coef[i] *= c ** (i + 1)
    return coef


def random_lower_triangular(rng, k, diag_scale=1.0):
    """Random lower-triangular impact matrix with strictly positive diagonal."""
    b = np.tril(rng.normal(size=(k, k)))
    b[np.diag_indices(k)] = diag_scale * (0.5 + rng.random(k))
    return b


def simulate_var(rng, alpha, coef, chol, n_obs, burn=100):
    """Simulate ``y_t = alpha + sum_i A_i y_{t-i} + chol z_t`` step by step."""
    p, k, _ = coef.shape
    total = burn + n_obs
    y = np.zeros((p + total, k))
    for t in range(p, p + total):
        acc = alpha + chol @ rng.standard_normal(k)
        for i in range(1, p + 1):
            acc = acc + coef[i - 1] @ y[t - i]
        y[t] = acc
    return y[p + burn:]


def impulse_path(coef, delta, horizon):
    """Deterministic response to a one-time innovation ``delta`` at t = 0.

    Returns ``(horizon + 1, K)``; row h is the system state h periods after
    the impulse, starting from rest with no intercept.
    """
    p, k, _ = coef.shape
    path = np.zeros((horizon + 1, k))
    path[0] = delta
    for h in range(1, horizon + 1):
        acc = np.zeros(k)
        for i in range(1, min(h, p) + 1):
            acc = acc + coef[i - 1] @ path[h - i]
        path[h] = acc
    return path


def counterfactual_path(coef, b0inv, shocks, j):
    """Re-simulate the recursion fed only by shock ``j``, from rest.

    ``shocks`` is the (n, K) structural shock matrix; the innovation at
    position t is ``b0inv[:, j] * shocks[t, j]`` and the intercept is
    dropped, reproducing the per-shock attribution of a historical
    decomposition.
    """
    p, k, _ = coef.shape
    n = shocks.shape[0]
    y = np.zeros((p + n, k))
    for t in range(n):
        acc = b0inv[:, j] * shocks[t, j]
        for i in range(1, p + 1):
            acc = acc + coef[i - 1] @ y[p + t - i]
        y[p + t] = acc
    return y[p:]


def normal_equations_fit(y, lags, intercept=True):
    """Independent least-squares path: explicit design loop, Gram solve.

    Returns ``(beta, residuals, sigma)`` with ``beta`` laid out like the
    stacked design (constant row first, then lag-1 block, lag-2 block, ...)
    and equations in columns.
    """
    y = np.asarray(y, dtype=float)
    n_total, k = y.shape
    rows = []
    targets = []
    for t in range(lags, n_total):
        row = [1.0] if intercept else []
        for i in range(1, lags + 1):
            row.extend(y[t - i])
        rows.append(row)
        targets.append(y[t])
    X = np.asarray(rows)
    Y = np.asarray(targets)
    beta = np.linalg.solve(X.T @ X, X.T @ Y)
    residuals = Y - X @ beta
    sigma = residuals.T @ residuals / residuals.shape[0]
    return beta, residuals, sigma


def classical_ols_se(X, y):
    """Textbook homoskedastic standard errors for each coefficient."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    resid = y - X @ beta
    dof = X.shape[0] - X.shape[1]
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return np.sqrt(np.diag(cov))


def max_rel_err(got, expected):
    """Maximum absolute difference scaled by the largest expected entry."""
    got = np.asarray(got, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = max(float(np.abs(expected).max()), 1e-300)
    return float(np.abs(got - expected).max()) / scale
