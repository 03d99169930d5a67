"""Distributed-lag regressions on shocks and their block-bootstrap bands."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from oilsvar.exceptions import BlockTooLongError, TooFewObservationsError
from oilsvar.stage2 import (
    DistributedLagRegression,
    Stage2Bands,
    Stage2Spec,
    block_bootstrap_bands,
    fit_distributed_lag,
    shocks_to_quarterly,
    write_stage2_csv,
)
from oilsvar.timeseries import Month, MonthlySeries, Panel, Quarter, QuarterlySeries

from helpers import classical_ols_se


def _lagged_construction(n=200, seed=80):
    """z_t = 2 * shock_(t-1) + 3 exactly (first entry is pre-sample junk)."""
    rng = np.random.default_rng(seed)
    shock = rng.standard_normal(n)
    z = np.empty(n)
    z[0] = 0.0
    z[1:] = 2.0 * shock[:-1] + 3.0
    return z, shock


# ---------------------------------------------------------------------------
# exact recoveries


def test_contemporaneous_identity_recovered():
    rng = np.random.default_rng(81)
    shock = rng.standard_normal(150)
    model = DistributedLagRegression(lags=2).fit(shock, shock)
    assert np.abs(model.coef_ - [1.0, 0.0, 0.0]).max() < 1e-10
    assert abs(model.intercept_) < 1e-10
    assert np.abs(model.residuals_).max() < 1e-10


def test_pure_lag_construction_recovered():
    z, shock = _lagged_construction()
    model = DistributedLagRegression(lags=2).fit(shock, z)
    assert np.abs(model.coef_ - [0.0, 2.0, 0.0]).max() < 1e-10
    assert abs(model.intercept_ - 3.0) < 1e-10


def test_zero_lag_self_regression():
    rng = np.random.default_rng(82)
    shock = rng.standard_normal(60)
    model = DistributedLagRegression(lags=0).fit(shock, shock)
    assert abs(model.coef_[0] - 1.0) < 1e-10
    assert abs(model.intercept_) < 1e-10


def test_independent_series_give_small_coefficients():
    rng = np.random.default_rng(83)
    shock = rng.standard_normal(5000)
    z = rng.standard_normal(5000)
    model = DistributedLagRegression(lags=3).fit(shock, z)
    assert np.abs(model.coef_).max() < 0.05


def test_fit_matches_normal_equations_oracle():
    rng = np.random.default_rng(84)
    shock = rng.standard_normal(300)
    z = 0.5 + shock * 1.2 + rng.standard_normal(300)
    lags = 4
    rows = [[1.0] + [shock[t - h] for h in range(lags + 1)]
            for t in range(lags, 300)]
    X = np.asarray(rows)
    y = z[lags:]
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    model = DistributedLagRegression(lags=lags).fit(shock, z)
    assert abs(model.intercept_ - beta[0]) < 1e-8
    assert np.abs(model.coef_ - beta[1:]).max() < 1e-8
    # least squares leaves nothing correlated with the regressors
    assert np.abs(X.T @ model.residuals_).max() < 1e-8


def test_cumulative_responses_are_running_sums():
    z, shock = _lagged_construction()
    model = DistributedLagRegression(lags=2).fit(shock, z)
    cum = model.cumulative_responses()
    assert np.abs(cum - [0.0, 2.0, 2.0]).max() < 1e-10
    assert cum[0] == model.coef_[0]
    assert np.array_equal(model.responses(cumulative=True), cum)
    assert np.array_equal(model.responses(), model.coef_)


# ---------------------------------------------------------------------------
# calendar alignment


def test_monthly_series_align_on_overlap():
    rng = np.random.default_rng(85)
    values = rng.standard_normal(60)
    z_series = MonthlySeries("z", Month(2000, 1), values[:50])
    x_series = MonthlySeries("x", Month(2000, 11), values[10:])
    model = DistributedLagRegression(lags=2).fit(x_series, z_series)
    # overlap is 2000-11..2004-02: both series carry identical numbers there
    assert abs(model.coef_[0] - 1.0) < 1e-10


def test_quarterly_series_align_too():
    rng = np.random.default_rng(86)
    values = rng.standard_normal(80)
    z = QuarterlySeries("z", Quarter(1990, 1), values)
    x = QuarterlySeries("x", Quarter(1990, 1), values)
    model = DistributedLagRegression(lags=1).fit(x, z)
    assert abs(model.coef_[0] - 1.0) < 1e-10


def test_mixed_frequencies_are_rejected():
    z = MonthlySeries("z", Month(2000, 1), np.arange(40.0))
    x = QuarterlySeries("x", Quarter(2000, 1), np.arange(40.0))
    with pytest.raises(ValueError, match="frequencies"):
        DistributedLagRegression(lags=1).fit(x, z)


def test_bare_arrays_must_share_length():
    with pytest.raises(ValueError, match="length mismatch"):
        DistributedLagRegression(lags=1).fit(np.zeros(30), np.zeros(31))


def test_disjoint_ranges_are_rejected():
    z = MonthlySeries("z", Month(2000, 1), np.arange(12.0))
    x = MonthlySeries("x", Month(2010, 1), np.arange(12.0))
    with pytest.raises(TooFewObservationsError):
        DistributedLagRegression(lags=1).fit(x, z)


def test_too_few_rows_for_parameters():
    rng = np.random.default_rng(87)
    with pytest.raises(TooFewObservationsError):
        DistributedLagRegression(lags=12).fit(rng.standard_normal(26),
                                              rng.standard_normal(26))


def test_unfitted_access_raises():
    with pytest.raises(NotFittedError):
        DistributedLagRegression().responses()


# ---------------------------------------------------------------------------
# block bootstrap


def test_noiseless_construction_has_degenerate_bands():
    z, shock = _lagged_construction()
    spec = Stage2Spec(lags=2, block_len=6, replications=50, seed=5)
    result = block_bootstrap_bands(z, shock, spec, shock_name="demo")
    assert np.abs(result.point - [0.0, 2.0, 0.0]).max() < 1e-10
    assert abs(result.intercept - 3.0) < 1e-10
    assert result.se.max() < 1e-12
    assert result.failures == 0
    assert result.shock == "demo"


def test_full_sample_block_gives_zero_se():
    rng = np.random.default_rng(88)
    shock = rng.standard_normal(100)
    z = shock * 0.7 + rng.standard_normal(100)
    lags = 2
    spec = Stage2Spec(lags=lags, block_len=100 - lags, replications=20, seed=5)
    result = block_bootstrap_bands(z, shock, spec)
    assert result.se.max() < 1e-12


def test_same_seed_reproduces_bands():
    rng = np.random.default_rng(89)
    shock = rng.standard_normal(150)
    z = shock * 0.5 + rng.standard_normal(150)
    spec = Stage2Spec(lags=3, block_len=6, replications=60, seed=17)
    a = block_bootstrap_bands(z, shock, spec)
    b = block_bootstrap_bands(z, shock, spec)
    assert np.array_equal(a.se, b.se)
    assert np.array_equal(a.point, b.point)


def test_iid_rows_match_classical_standard_errors():
    rng = np.random.default_rng(90)
    n, lags = 1000, 2
    shock = rng.standard_normal(n)
    z = 1.0 + 0.8 * shock + rng.standard_normal(n)
    spec = Stage2Spec(lags=lags, block_len=1, replications=500, seed=7)
    result = block_bootstrap_bands(z, shock, spec)
    rows = [[1.0] + [shock[t - h] for h in range(lags + 1)]
            for t in range(lags, n)]
    classical = classical_ols_se(np.asarray(rows), z[lags:])
    assert abs(result.se[0] - classical[1]) / classical[1] < 0.25


def test_cumulative_bands_sum_before_spread():
    z, shock = _lagged_construction()
    z = z + np.random.default_rng(91).standard_normal(z.size) * 0.1
    spec = Stage2Spec(lags=2, block_len=6, replications=80, seed=13,
                      cumulative=True)
    flat = Stage2Spec(lags=2, block_len=6, replications=80, seed=13)
    cum = block_bootstrap_bands(z, shock, spec)
    raw = block_bootstrap_bands(z, shock, flat)
    assert cum.cumulative and not raw.cumulative
    assert np.abs(cum.point - np.cumsum(raw.point)).max() < 1e-12
    # horizon 0 is identical either way; later horizons accumulate spread
    assert abs(cum.se[0] - raw.se[0]) < 1e-12
    assert not np.allclose(cum.se[1:], raw.se[1:])
    assert np.array_equal(cum.coefficients, raw.coefficients)


def test_band_nesting():
    rng = np.random.default_rng(92)
    shock = rng.standard_normal(150)
    z = shock * 0.5 + rng.standard_normal(150)
    result = block_bootstrap_bands(
        z, shock, Stage2Spec(lags=3, block_len=6, replications=60, seed=19))
    assert (result.lower(2) <= result.lower(1)).all()
    assert (result.lower(1) <= result.point).all()
    assert (result.point <= result.upper(1)).all()
    assert (result.upper(1) <= result.upper(2)).all()


def test_block_longer_than_rows_rejected():
    rng = np.random.default_rng(93)
    shock = rng.standard_normal(40)
    spec = Stage2Spec(lags=2, block_len=39, replications=10, seed=1)
    with pytest.raises(BlockTooLongError):
        block_bootstrap_bands(shock * 0.5, shock, spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        Stage2Spec(lags=-1)
    with pytest.raises(ValueError):
        Stage2Spec(block_len=0)
    with pytest.raises(ValueError):
        Stage2Spec(replications=1)
    with pytest.raises(ValueError):
        Stage2Spec().require_seed()
    assert Stage2Spec(seed=4).require_seed() == 4


# ---------------------------------------------------------------------------
# quarterly aggregation of shocks


def test_quarterly_averages_of_shock_panel():
    values = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0],
                       [4.0, 40.0], [5.0, 50.0], [6.0, 60.0]])
    panel = Panel(Month(2001, 1), values, names=["a", "b"])
    qa, qb = shocks_to_quarterly(panel)
    assert np.array_equal(qa.values, [2.0, 5.0])
    assert np.array_equal(qb.values, [20.0, 50.0])
    assert qa.start == Quarter(2001, 1)


def test_fixture_shock_quarters_match_manual_means(updated_model):
    panel = updated_model.shock_panel()
    quarters = shocks_to_quarterly(panel)
    first = quarters[0]
    # recompute one quarter by hand: average the three member months
    offset = first.start.first_month.index - panel.start.index
    manual = panel.values[offset:offset + 3, 0].mean()
    assert abs(first.values[0] - manual) < 1e-12
    assert len(quarters) == 3


# ---------------------------------------------------------------------------
# output format


def test_stage2_csv_layout(tmp_path):
    z, shock = _lagged_construction()
    spec = Stage2Spec(lags=2, block_len=6, replications=20, seed=5)
    result = block_bootstrap_bands(z, shock, spec, shock_name="supply")
    path = tmp_path / "stage2.csv"
    write_stage2_csv(path, [result])
    lines = path.read_text().splitlines()
    assert lines[0] == "shock,horizon,point,se,lo1,hi1,lo2,hi2,cumulative"
    assert len(lines) == 1 + 3
    assert lines[1].startswith("supply,0,")
    assert lines[1].endswith("false")
