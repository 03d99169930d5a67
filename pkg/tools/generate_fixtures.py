"""Generate the bundled synthetic fixture dataset.

One known data-generating process (a stable structural VAR(2) in the
transformed units: production growth, activity index, log real price) is
simulated once over 1973-01..2025-01 from a fixed seed. Raw-looking series
(production levels, an activity index, a nominal price, a CPI) are derived
from it and sliced into two vintages, so every pipeline identity that
should hold across vintages holds exactly. Second-stage targets (quarterly
growth/inflation, county employment and unemployment) are built from the
TRUE structural shocks with known lag responses plus noise.

The script refuses to freeze fixtures unless the full-lag (p=24) fit on
each vintage is stable and reproduces the qualitative sign structure the
acceptance tests pin (supply column flipped, demand columns not; negative
production impact of supply; positive early price response to the
market-specific shock). Golden reference values go to tests/data.

Run from the repository root:  python3 tools/generate_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from oilsvar.identification import RecursiveSVAR
from oilsvar.ingest import PanelConfig, SourceSpec, build_panel
from oilsvar.timeseries import (
    Month,
    MonthlySeries,
    quarterly_average,
    write_quarterly_csv,
    write_series_csv,
)

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "src" / "oilsvar" / "data" / "fixtures"
GOLDEN = ROOT / "tests" / "data" / "golden.json"

SEED = 20250817
BURN = 240

WORLD_START = Month(1973, 1)
WORLD_END = Month(2025, 1)

ORIGINAL_START, ORIGINAL_END = Month(1973, 1), Month(2007, 12)
UPDATED_START, UPDATED_END = Month(1974, 1), Month(2025, 1)
KERN_START = Month(1990, 1)

# Truth: y_t = ALPHA + A1 y_{t-1} + A2 y_{t-2} + B eps_t, eps ~ N(0, I).
# Units: column 0 log-difference, column 1 index points, column 2 log.
A1 = np.array([
    [0.15, 0.0005, -0.02],
    [3.0,  1.05,    1.0],
    [0.10, 0.0008,  1.05],
])
A2 = np.array([
    [0.05,  0.0,     0.01],
    [-1.0,  -0.18,   -0.5],
    [-0.05, -0.0003, -0.20],
])
B = np.array([
    [-0.009, 0.0,   0.0],
    [-0.10,  6.0,   0.0],
    [0.030,  0.012, 0.050],
])
MEAN = np.array([0.0008, 0.0, 0.0])
ALPHA = (np.eye(3) - A1 - A2) @ MEAN

PROD_BASE = 60000.0       # thousand barrels/day scale
CPI_BASE = 30.0
REAL_PRICE_BASE = 30.0    # dollars/barrel at rp = 0
EMP_BASE = 28000.0
IP_BASE = 100.0


def simulate_world(rng: np.random.Generator):
    n_world = WORLD_END - WORLD_START + 1
    n = n_world + BURN
    eps = rng.standard_normal((n, 3))
    y = np.zeros((n, 3))
    for t in range(n):
        acc = ALPHA + B @ eps[t]
        if t >= 1:
            acc = acc + A1 @ y[t - 1]
        if t >= 2:
            acc = acc + A2 @ y[t - 2]
        y[t] = acc
    return y[BURN:], eps[BURN:]


def slice_series(id_, values, start: Month, lo: Month, hi: Month, units=""):
    a, b = lo - start, hi - start + 1
    return MonthlySeries(id_, lo, values[a:b], units)


def main() -> None:
    rng = np.random.default_rng(SEED)
    world, eps = simulate_world(rng)
    growth, activity, log_rp = world[:, 0], world[:, 1], world[:, 2]
    n = world.shape[0]

    # raw monthly inputs, world-length, then sliced per vintage
    log_prod = np.log(PROD_BASE) + np.concatenate([[0.0], np.cumsum(growth[1:])])
    production = np.exp(log_prod)
    monthly_inflation = 0.0025 + 0.0006 * rng.standard_normal(n)
    cpi = CPI_BASE * np.exp(np.cumsum(monthly_inflation) - monthly_inflation[0])
    nominal = REAL_PRICE_BASE * np.exp(log_rp) * cpi
    assert (production > 0).all() and (cpi > 0).all() and (nominal > 0).all()

    vintages = {
        "original": (ORIGINAL_START, ORIGINAL_END),
        "updated": (UPDATED_START, UPDATED_END),
    }
    for name, (lo, hi) in vintages.items():
        outdir = FIXTURES / name
        outdir.mkdir(parents=True, exist_ok=True)
        write_series_csv(
            slice_series("production", production, WORLD_START, lo, hi,
                         "thousand_barrels_per_day"),
            outdir / "production.csv")
        write_series_csv(
            slice_series("activity", activity, WORLD_START, lo, hi,
                         "index"),
            outdir / "activity.csv")
        write_series_csv(
            slice_series("rac_nominal", nominal, WORLD_START, lo, hi,
                         "usd_per_barrel"),
            outdir / "rac_nominal.csv")
        write_series_csv(
            slice_series("cpi", cpi, WORLD_START, lo, hi, "index"),
            outdir / "cpi.csv")

    # alternative activity measure: an industrial-production level whose
    # log-difference co-moves with the activity index
    ip_growth = 0.002 + 0.00015 * np.diff(activity, prepend=activity[0]) \
        + 0.001 * rng.standard_normal(n)
    ip = IP_BASE * np.exp(np.cumsum(ip_growth) - ip_growth[0])
    (FIXTURES / "oecd6").mkdir(parents=True, exist_ok=True)
    write_series_csv(
        slice_series("ip_index", ip, WORLD_START, UPDATED_START, UPDATED_END,
                     "index"),
        FIXTURES / "oecd6" / "ip_index.csv")

    # quarterly macro targets from TRUE shocks (supply, demand, specific)
    eps_series = [MonthlySeries(f"eps_{j}", WORLD_START, eps[:, j])
                  for j in range(3)]
    zeta = [quarterly_average(s) for s in eps_series]
    zq = np.column_stack([s.values for s in zeta])
    q_start = zeta[0].start                    # 1973-Q1
    first = Month(1974, 1).quarter - q_start   # skip 1973 so lags exist
    n_q = zq.shape[0]
    u_gdp = rng.standard_normal(n_q)
    u_inf = rng.standard_normal(n_q)
    gdp = (0.6 + 0.25 * zq[:, 1] + 0.15 * np.roll(zq[:, 1], 1)
           - 0.20 * zq[:, 2] - 0.10 * np.roll(zq[:, 2], 1)
           - 0.08 * zq[:, 0] + 0.30 * u_gdp)
    inflation = (0.8 + 0.15 * zq[:, 2] + 0.10 * np.roll(zq[:, 2], 1)
                 + 0.08 * zq[:, 0] + 0.20 * u_inf)
    (FIXTURES / "us").mkdir(parents=True, exist_ok=True)
    from oilsvar.timeseries import QuarterlySeries
    write_quarterly_csv(
        QuarterlySeries("gdp_growth", q_start + first, gdp[first:],
                        "percent_per_quarter"),
        FIXTURES / "us" / "gdp_growth.csv")
    write_quarterly_csv(
        QuarterlySeries("inflation", q_start + first, inflation[first:],
                        "percent_per_quarter"),
        FIXTURES / "us" / "inflation.csv")

    # county labor-market targets from the market-specific shock
    kern_lo = KERN_START - WORLD_START
    month_of_year = (np.arange(n) + WORLD_START.month - 1) % 12
    seasonal_emp = 0.008 * np.sin(2 * np.pi * (month_of_year + 1) / 12)
    eps_os = eps[:, 2]
    emp_growth = (0.0010 + seasonal_emp
                  + 0.004 * eps_os
                  + 0.003 * np.roll(eps_os, 1)
                  + 0.002 * np.roll(eps_os, 2)
                  + 0.003 * rng.standard_normal(n))
    employment = EMP_BASE * np.exp(np.cumsum(emp_growth) - emp_growth[0])
    ar_noise = np.zeros(n)
    white = 0.15 * rng.standard_normal(n)
    for t in range(1, n):
        ar_noise[t] = 0.90 * ar_noise[t - 1] + white[t]
    unemployment = (9.0 + 0.6 * np.cos(2 * np.pi * (month_of_year + 1) / 12)
                    - 0.25 * eps_os - 0.35 * np.roll(eps_os, 1)
                    - 0.30 * np.roll(eps_os, 2) + ar_noise)
    assert unemployment[kern_lo:].min() > 1.5, "unemployment fixture hit floor"
    (FIXTURES / "kern").mkdir(parents=True, exist_ok=True)
    write_series_csv(
        slice_series("employment", employment, WORLD_START,
                     KERN_START, WORLD_END, "persons"),
        FIXTURES / "kern" / "employment.csv")
    write_series_csv(
        slice_series("unemployment_rate", unemployment, WORLD_START,
                     KERN_START, WORLD_END, "percent"),
        FIXTURES / "kern" / "unemployment_rate.csv")

    # ------------------------------------------------------------------
    # gate: the full-lag fit on each vintage must reproduce the pinned
    # qualitative structure before anything is frozen

    def vintage_panel(name: str):
        def src(series_id, filename):
            return SourceSpec(provider="csv", series_id=series_id,
                              path=str(FIXTURES / name / filename))
        cfg = PanelConfig(
            production=src("production", "production.csv"),
            activity=src("activity", "activity.csv"),
            price=src("rac_nominal", "rac_nominal.csv"),
            cpi=src("cpi", "cpi.csv"),
        )
        return build_panel(cfg)

    golden = {"seed": SEED}
    for name, (lo, hi) in vintages.items():
        panel = vintage_panel(name)
        assert panel.start == lo + 1 and panel.end == hi, \
            f"{name} panel spans {panel.start}..{panel.end}"
        model = RecursiveSVAR(lags=24).fit(panel)
        radius = model.var_.spectral_radius()
        assert radius < 0.99, f"{name} fit radius {radius}"
        assert tuple(model.sign_flips_) == (-1.0, 1.0, 1.0), \
            f"{name} sign flips {model.sign_flips_}"
        irf = model.irf(15)
        assert irf.values[0, 0, 0] < -1e-3, "supply impact on production"
        assert all(irf.values[h, 2, 2] > 1e-3 for h in range(4)), \
            "early price response to the market-specific shock"
        assert irf.values[0, 1, 1] > 1e-3, "demand impact on activity"
        golden[name] = {
            "panel_window": f"{panel.start}:{panel.end}",
            "rows": len(panel),
            "spectral_radius": radius,
            "sign_flips": [int(f) for f in model.sign_flips_],
            "b0inv": model.b0inv_.tolist(),
        }
        print(f"{name}: {panel.start}..{panel.end} ({len(panel)} rows), "
              f"radius {radius:.4f}, flips {golden[name]['sign_flips']}")

    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_text(json.dumps(golden, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {GOLDEN}")


if __name__ == "__main__":
    main()
