"""Command-line pipeline: fetch -> estimate -> shocks/irf/hd/stage2.

Each subcommand is a pure function of (config file, cache/fixture state,
flags): rerunning with the same inputs rewrites byte-identical artifacts.
Every artifact gets a sidecar ``<name>.meta.json`` recording the settings
that produced it (never timestamps, which would break rerun identity).

Config files are flat ``key = value`` text: ``#`` starts a comment, keys
are dotted paths, values are raw strings. Flags override config values.
See the README for the full key reference.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bootstrap import BootConfig, mbb_bootstrap, wild_bootstrap
from .decomposition import historical_decomposition
from .exceptions import ConfigError, OilSvarError
from .identification import RecursiveSVAR
from .ingest import PanelConfig, SourceSpec, build_panel, resolve_path
from .stage2 import (
    Stage2Spec,
    block_bootstrap_bands,
    shocks_to_quarterly,
    write_stage2_csv,
)
from .timeseries import (
    Month,
    log_diff,
    read_quarterly_csv,
    read_series_csv,
    seasonal_adjust,
    write_panel_csv,
)

__all__ = ["main", "entry_point"]

_RECONSTRUCTION_TOL = 1e-8
_UNIT_VARIANCE_TOL = 1e-8


# ---------------------------------------------------------------------------
# config file


def load_config(path) -> dict[str, str]:
    """Parse the flat ``key = value`` grammar; duplicates are an error."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _parse_month_range(text: str, what: str) -> tuple[Month, Month]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{what} must look like YYYY-MM:YYYY-MM, got {text!r}")
    lo, hi = Month.parse(parts[0]), Month.parse(parts[1])
    if lo > hi:
        raise ConfigError(f"{what} is empty: {text!r}")
    return lo, hi


def _parse_bool(text: str, what: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{what} must be a boolean, got {text!r}")


def _source_from_config(cfg: dict[str, str], role: str) -> SourceSpec:
    prefix = f"panel.{role}."
    keys = {k[len(prefix):]: v for k, v in cfg.items() if k.startswith(prefix)}
    provider = keys.pop("provider", None)
    if provider is None:
        raise ConfigError(f"config is missing panel.{role}.provider")
    params = tuple(
        (name[len("param."):], value)
        for name, value in sorted(keys.items())
        if name.startswith("param.")
    )
    known = {k: v for k, v in keys.items() if not k.startswith("param.")}
    known.pop("transform", None)      # consumed by the panel recipe
    spec_kwargs = {}
    for field in ("series_id", "route", "path", "api_key_env", "units"):
        if field in known:
            spec_kwargs[field] = known.pop(field)
    if "cache_ttl" in known:
        spec_kwargs["cache_ttl"] = float(known.pop("cache_ttl"))
    if known:
        unknown = ", ".join(sorted(prefix + k for k in known))
        raise ConfigError(f"unknown config keys: {unknown}")
    spec_kwargs.setdefault("series_id", role)
    try:
        return SourceSpec(provider=provider, params=params, **spec_kwargs)
    except ValueError as exc:
        raise ConfigError(f"panel.{role}: {exc}") from exc


def panel_config(cfg: dict[str, str], args) -> PanelConfig:
    production = _source_from_config(cfg, "production")
    activity = _source_from_config(cfg, "activity")
    price = _source_from_config(cfg, "price")
    cpi = _source_from_config(cfg, "cpi")
    transform = cfg.get("panel.activity.transform", "none")
    demean_text = args.demean or cfg.get("panel.demean")
    sample_text = args.sample or cfg.get("panel.sample")
    demean_window = (
        _parse_month_range(demean_text, "demean window") if demean_text else None
    )
    sample = (
        _parse_month_range(sample_text, "sample window") if sample_text else None
    )
    try:
        return PanelConfig(
            production=production, activity=activity, price=price, cpi=cpi,
            activity_transform=transform, demean_window=demean_window,
            sample=sample,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# shared plumbing


def _config_int(cfg, key, flag_value, default):
    if flag_value is not None:
        return int(flag_value)
    if key in cfg:
        try:
            return int(cfg[key])
        except ValueError as exc:
            raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}") from exc
    return default


def _get_panel(args, cfg):
    recipe = panel_config(cfg, args)
    base_dir = Path(args.config).resolve().parent
    panel = build_panel(recipe, offline=bool(args.offline), base_dir=base_dir)
    return panel, recipe


def _fit_model(args, cfg):
    panel, recipe = _get_panel(args, cfg)
    lags = _config_int(cfg, "var.lags", args.lags, 24)
    model = RecursiveSVAR(lags=lags).fit(panel)
    return model, panel, recipe


def _cumulate_rows(args, cfg, recipe, model) -> tuple[int, ...]:
    """Which variables to report as running sums. Default: every
    log-differenced column (production growth always; activity only under
    the log_diff transform)."""
    text = args.cumulate if args.cumulate is not None else cfg.get("irf.cumulate")
    if text is not None:
        stripped = text.strip()
        if stripped.lower() in ("", "none"):
            return ()
        names = [part.strip() for part in stripped.split(",") if part.strip()]
        try:
            return model.resolve_rows(names)
        except ValueError as exc:
            raise ConfigError(f"--cumulate: {exc}") from exc
    rows = [0]
    if recipe.activity_transform == "log_diff":
        rows.append(1)
    return model.resolve_rows(rows)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _common_meta(args, panel, model=None) -> dict:
    meta = {
        "config": Path(args.config).name,
        "panel_window": f"{panel.start}:{panel.end}",
        "columns": list(panel.names),
    }
    if model is not None:
        meta.update({
            "lags": int(model.var_.lags),
            "shock_names": list(model.shock_names_),
            "sign_flips": [int(f) for f in model.sign_flips_],
        })
    return meta


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError(
            "--seed is required for bootstrap subcommands; pick any integer "
            "and keep it to make the run reproducible"
        )
    return int(args.seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_fetch(args) -> int:
    cfg = load_config(args.config)
    panel, _ = _get_panel(args, cfg)
    out = _out_dir(args)
    write_panel_csv(panel, out / "panel.csv")
    _write_meta(out / "panel.meta.json", _common_meta(args, panel))
    print(f"wrote {out / 'panel.csv'} "
          f"({len(panel)} months x {panel.n_columns} columns, "
          f"{panel.start}..{panel.end})")
    return 0


def cmd_estimate(args) -> int:
    cfg = load_config(args.config)
    model, panel, _ = _fit_model(args, cfg)
    out = _out_dir(args)
    (out / "model.json").write_text(model.to_json(), encoding="utf-8")
    meta = _common_meta(args, panel, model)
    meta["spectral_radius"] = model.var_.spectral_radius()
    meta["stable"] = model.is_stable()
    _write_meta(out / "model.meta.json", meta)
    print(f"wrote {out / 'model.json'} "
          f"(p={model.var_.lags}, spectral radius "
          f"{model.var_.spectral_radius():.6f})")
    return 0


def cmd_shocks(args) -> int:
    cfg = load_config(args.config)
    model, panel, _ = _fit_model(args, cfg)
    shock_panel = model.shock_panel()
    cov = shock_panel.values.T @ shock_panel.values / len(shock_panel)
    worst = float(np.abs(cov - np.eye(cov.shape[0])).max())
    if worst > _UNIT_VARIANCE_TOL:
        raise OilSvarError(
            f"structural shock covariance deviates from identity by {worst:.3e}"
        )
    out = _out_dir(args)
    write_panel_csv(shock_panel, out / "shocks.csv")
    meta = _common_meta(args, panel, model)
    meta["shock_window"] = f"{shock_panel.start}:{shock_panel.end}"
    _write_meta(out / "shocks.meta.json", meta)
    print(f"wrote {out / 'shocks.csv'} "
          f"({len(shock_panel)} months, unit covariance to {worst:.1e})")
    return 0


def cmd_irf(args) -> int:
    cfg = load_config(args.config)
    seed = _require_seed(args)
    model, panel, recipe = _fit_model(args, cfg)
    rows = _cumulate_rows(args, cfg, recipe, model)
    horizon = _config_int(cfg, "irf.horizon", args.horizon, 15)
    reps = _config_int(cfg, "boot.reps", args.reps, 1000)
    block_len = _config_int(cfg, "boot.block_len", args.block_len, 36)
    method = args.method or cfg.get("boot.method", "wild")
    boot = BootConfig(replications=reps, method=method, block_len=block_len,
                      seed=seed, horizon=horizon)
    if method == "wild":
        result = wild_bootstrap(model, boot, cumulative_rows=rows)
    else:
        result = mbb_bootstrap(model, boot, cumulative_rows=rows)
    out = _out_dir(args)
    result.to_csv(out / "irf_bands.csv")
    meta = _common_meta(args, panel, model)
    meta.update({
        "horizon": horizon,
        "replications": reps,
        "successful_replications": result.replications,
        "failed_replications": result.failures,
        "method": method,
        "block_len": block_len if method == "mbb" else None,
        "seed": seed,
        "cumulated_variables": [panel.names[i] for i in rows],
    })
    _write_meta(out / "irf_bands.meta.json", meta)
    print(f"wrote {out / 'irf_bands.csv'} "
          f"({method}, R={result.replications}, H={horizon})")
    return 0


def cmd_hd(args) -> int:
    cfg = load_config(args.config)
    model, panel, _ = _fit_model(args, cfg)
    decomp = historical_decomposition(model)
    err = decomp.reconstruction_error()
    if err > _RECONSTRUCTION_TOL:
        raise OilSvarError(
            f"historical decomposition does not add back to the data "
            f"(max error {err:.3e})"
        )
    out = _out_dir(args)
    decomp.to_csv(out / "hd_contributions.csv", out / "hd_baseline.csv")
    meta = _common_meta(args, panel, model)
    meta["reconstruction_error"] = err
    meta["decomposition_window"] = f"{decomp.start}:{decomp.months()[-1]}"
    _write_meta(out / "hd.meta.json", meta)
    print(f"wrote {out / 'hd_contributions.csv'} and "
          f"{out / 'hd_baseline.csv'} (additivity {err:.1e})")
    return 0


def _stage2_targets(cfg: dict[str, str]) -> list[str]:
    targets = sorted({
        key.split(".")[1]
        for key in cfg
        if key.startswith("stage2.") and key.count(".") >= 2
    })
    if not targets:
        raise ConfigError("config defines no stage2.<target>.* entries")
    return targets


def _load_stage2_series(cfg, target, base_dir):
    prefix = f"stage2.{target}."
    path = cfg.get(prefix + "path")
    if path is None:
        raise ConfigError(f"config is missing {prefix}path")
    frequency = cfg.get(prefix + "frequency", "monthly")
    resolved = resolve_path(path, base_dir)
    if frequency == "quarterly":
        series = read_quarterly_csv(resolved, id=target)
    elif frequency == "monthly":
        series = read_series_csv(resolved, id=target)
        if _parse_bool(cfg.get(prefix + "seasonal_adjust", "false"),
                       prefix + "seasonal_adjust"):
            series = seasonal_adjust(series)
        if cfg.get(prefix + "transform", "none") == "log_diff":
            series = log_diff(series)
    else:
        raise ConfigError(
            f"{prefix}frequency must be 'monthly' or 'quarterly', "
            f"got {frequency!r}"
        )
    return series, frequency


def cmd_stage2(args) -> int:
    cfg = load_config(args.config)
    seed = _require_seed(args)
    model, panel, _ = _fit_model(args, cfg)
    shock_panel = model.shock_panel()
    quarterly_shocks = None
    base_dir = Path(args.config).resolve().parent
    out = _out_dir(args)
    written = []
    for target in _stage2_targets(cfg):
        prefix = f"stage2.{target}."
        series, frequency = _load_stage2_series(cfg, target, base_dir)
        spec = Stage2Spec(
            lags=_config_int(cfg, prefix + "lags", None, 12),
            block_len=_config_int(
                cfg, prefix + "block_len", args.block_len, 6
            ),
            replications=_config_int(cfg, prefix + "reps", args.reps, 1000),
            seed=seed,
            cumulative=_parse_bool(cfg.get(prefix + "cumulative", "false"),
                                   prefix + "cumulative"),
        )
        if frequency == "quarterly":
            if quarterly_shocks is None:
                quarterly_shocks = shocks_to_quarterly(shock_panel)
            regressors = quarterly_shocks
        else:
            regressors = tuple(shock_panel.columns())
        results = [
            block_bootstrap_bands(series, shock, spec, shock_name=shock.id)
            for shock in regressors
        ]
        path = out / f"stage2_{target}.csv"
        write_stage2_csv(path, results)
        meta = _common_meta(args, panel, model)
        meta.update({
            "target": target,
            "frequency": frequency,
            "lags": int(spec.lags),
            "block_len": int(spec.block_len),
            "replications": int(spec.replications),
            "seed": seed,
            "cumulative": bool(spec.cumulative),
        })
        _write_meta(out / f"stage2_{target}.meta.json", meta)
        written.append(str(path))
    print("wrote " + ", ".join(written))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oilsvar",
        description="Structural oil-market VAR pipeline: fetch data, "
                    "estimate, and export shocks, response bands, "
                    "decompositions, and second-stage regressions as CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="flat key=value config file")
        p.add_argument("--out", default=".",
                       help="output directory (created if needed)")
        p.add_argument("--seed", type=int, default=None,
                       help="bootstrap seed (required when resampling)")
        p.add_argument("--sample", default=None, metavar="FROM:TO",
                       help="panel window, e.g. 1973-02:2007-12")
        p.add_argument("--lags", type=int, default=None,
                       help="VAR lag order (default from config, else 24)")
        p.add_argument("--horizon", type=int, default=None,
                       help="IRF horizon (default from config, else 15)")
        p.add_argument("--reps", type=int, default=None,
                       help="bootstrap replications (default 1000)")
        p.add_argument("--method", choices=("wild", "mbb"), default=None,
                       help="bootstrap scheme (default wild)")
        p.add_argument("--block-len", type=int, default=None, dest="block_len",
                       help="block length for mbb/stage2 bootstraps")
        p.add_argument("--offline", action="store_true",
                       help="serve everything from cache/fixtures; "
                            "any network need is an error")
        p.add_argument("--cumulate", default=None,
                       help="comma-separated variables to report as running "
                            "sums, or 'none' (default: log-differenced columns)")
        p.add_argument("--demean", default=None, metavar="FROM:TO",
                       help="demeaning window for the real price")
        p.set_defaults(func=func)
        return p

    add("fetch", cmd_fetch, "build and write the estimation panel CSV")
    add("estimate", cmd_estimate, "fit the structural VAR, write model JSON")
    add("shocks", cmd_shocks, "write the structural shock series CSV")
    add("irf", cmd_irf, "write impulse-response bands CSV (bootstrap)")
    add("hd", cmd_hd, "write the historical decomposition CSVs")
    add("stage2", cmd_stage2, "write distributed-lag regression bands CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OilSvarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())
