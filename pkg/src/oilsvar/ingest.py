"""Data acquisition: EIA/FRED clients, an on-disk cache, and panel assembly.

Every network call goes through one injectable transport, a callable
``(url, params) -> (status_code, body_bytes)``. Tests inject fakes; the
default transport wraps ``requests``. Downloaded series land in a cache
directory (``SVAR_CACHE_DIR`` or ``~/.cache/oilsvar``) as ordinary series
CSV files next to a ``.meta`` JSON carrying the fetch time, a checksum, and
the source URL (with the API key stripped). Cache writes are atomic and
guarded by an advisory file lock, so concurrent fetches of the same series
do not interleave.

Provider quirks handled here: EIA and FRED both mark unavailable months
(``null`` / ``"."``); runs of those at either end of a series are dropped,
but one in the middle is a hard :class:`~oilsvar.exceptions.GapError`;
silent interpolation would corrupt everything downstream.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from urllib.parse import urlencode

import numpy as np
from filelock import FileLock

from .exceptions import (
    CacheMissError,
    GapError,
    HttpError,
    MissingApiKeyError,
    NonPositiveValueError,
    ParseError,
)
from .timeseries import (
    Month,
    MonthlySeries,
    Panel,
    align,
    demean,
    log_diff,
    read_series_csv,
    write_series_csv,
)

__all__ = [
    "SourceSpec",
    "PanelConfig",
    "fetch",
    "build_real_price",
    "build_panel",
    "resolve_path",
    "default_cache_dir",
]

EIA_BASE_URL = "https://api.eia.gov/v2/"
FRED_BASE_URL = "https://api.stlouisfed.org/fred/series/observations"

_DEFAULT_KEY_ENV = {"eia": "EIA_API_KEY", "fred": "FRED_API_KEY"}


def _requests_transport(url: str, params: dict):
    import requests

    reply = requests.get(url, params=params, timeout=60)
    return reply.status_code, reply.content


# Module-level so the test suite can replace it wholesale and make any
# accidental real network call a loud failure.
default_transport = _requests_transport


@dataclass(frozen=True)
class SourceSpec:
    """Where one series comes from.

    ``provider`` is ``eia``, ``fred``, or ``csv``. EIA sources need a
    ``route`` (v2 route path ending in ``/data``) and facet ``params``;
    FRED sources use ``series_id`` directly; CSV sources need a ``path``
    (``pkg:`` prefix resolves inside the bundled data directory).
    ``series_id`` also names the cache entry and the output column.
    """

    provider: str
    series_id: str
    route: str = ""
    params: tuple = ()
    path: str | None = None
    api_key_env: str | None = None
    cache_ttl: float = 24.0
    units: str = ""

    def __post_init__(self) -> None:
        if self.provider not in ("eia", "fred", "csv"):
            raise ValueError(f"unknown provider {self.provider!r}")
        if not self.series_id:
            raise ValueError("series_id must be non-empty")
        if "/" in self.series_id or "\\" in self.series_id:
            raise ValueError(
                f"series_id {self.series_id!r} must not contain path separators"
            )
        if self.provider == "csv" and not self.path:
            raise ValueError(f"csv source {self.series_id!r} needs a path")
        if self.provider == "eia" and not self.route:
            raise ValueError(f"eia source {self.series_id!r} needs a route")
        object.__setattr__(self, "params",
                           tuple((str(k), str(v)) for k, v in self.params))

    def key_env(self) -> str:
        return self.api_key_env or _DEFAULT_KEY_ENV[self.provider]


def default_cache_dir() -> Path:
    env = os.environ.get("SVAR_CACHE_DIR")
    if env:
        return Path(env).expanduser()
    return Path("~/.cache/oilsvar").expanduser()


def resolve_path(path: str, base_dir=None) -> Path:
    """Resolve a data path; ``pkg:rest`` points into the bundled data
    directory, anything else is taken relative to ``base_dir``."""
    if path.startswith("pkg:"):
        root = resources.files("oilsvar") / "data"
        return Path(str(root)) / path[4:]
    p = Path(path).expanduser()
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    return p


# ---------------------------------------------------------------------------
# provider responses -> (month, value-or-None) rows


def _parse_eia(body: bytes, context: str):
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{context}: response is not JSON") from exc
    data = payload.get("response", {}).get("data")
    if not isinstance(data, list):
        raise ParseError(f"{context}: missing response.data array")
    rows = []
    for entry in data:
        period = entry.get("period")
        if not isinstance(period, str):
            raise ParseError(f"{context}: row without a period: {entry!r}")
        value = entry.get("value")
        rows.append((Month.parse(period[:7]),
                     None if value is None else float(value)))
    return rows


def _parse_fred(body: bytes, context: str):
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{context}: response is not JSON") from exc
    observations = payload.get("observations")
    if not isinstance(observations, list):
        raise ParseError(f"{context}: missing observations array")
    rows = []
    for entry in observations:
        date = entry.get("date")
        if not isinstance(date, str) or len(date) < 7:
            raise ParseError(f"{context}: row without a date: {entry!r}")
        raw = entry.get("value")
        value = None if raw in (None, ".", "") else float(raw)
        rows.append((Month.parse(date[:7]), value))
    return rows


def _rows_to_series(rows, series_id: str, units: str,
                    context: str) -> MonthlySeries:
    """Sort, trim null runs at both ends, and refuse interior holes."""
    if not rows:
        raise ParseError(f"{context}: no observations returned")
    rows = sorted(rows, key=lambda r: r[0].index)
    for (a, _), (b, _) in zip(rows, rows[1:]):
        if a == b:
            raise ParseError(f"{context}: duplicate period {a}")
    lo, hi = 0, len(rows)
    while lo < hi and rows[lo][1] is None:
        lo += 1
    while hi > lo and rows[hi - 1][1] is None:
        hi -= 1
    rows = rows[lo:hi]
    if not rows:
        raise ParseError(f"{context}: every observation is null")
    values = []
    month = rows[0][0]
    for m, v in rows:
        if m != month:
            raise GapError(f"{context}: missing month {month}",
                           missing=str(month))
        if v is None:
            raise GapError(f"{context}: null value at {m}", missing=str(m))
        values.append(v)
        month = month + 1
    return MonthlySeries(series_id, rows[0][0], values, units)


def _request(spec: SourceSpec, transport):
    key_env = spec.key_env()
    api_key = os.environ.get(key_env, "").strip()
    if not api_key:
        raise MissingApiKeyError(key_env)
    if spec.provider == "eia":
        url = EIA_BASE_URL + spec.route.strip("/")
        params = {
            "frequency": "monthly",
            "data[0]": "value",
            "sort[0][column]": "period",
            "sort[0][direction]": "asc",
        }
        params.update(dict(spec.params))
        public = dict(params)
        params["api_key"] = api_key
    else:
        url = FRED_BASE_URL
        params = {"series_id": spec.series_id, "file_type": "json"}
        params.update(dict(spec.params))
        public = dict(params)
        params["api_key"] = api_key
    status, body = transport(url, params)
    source_url = f"{url}?{urlencode(public)}"
    if status != 200:
        raise HttpError(source_url, status, body)
    context = f"{spec.provider}:{spec.series_id}"
    if spec.provider == "eia":
        rows = _parse_eia(body, context)
    else:
        rows = _parse_fred(body, context)
    return _rows_to_series(rows, spec.series_id, spec.units, context), source_url


# ---------------------------------------------------------------------------
# cache


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_cache(csv_path: Path, meta_path: Path, spec: SourceSpec):
    """Return ``(series, age_seconds)`` or None when absent or corrupt."""
    if not csv_path.exists() or not meta_path.exists():
        return None
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, OSError):
        return None
    if meta.get("checksum") != _sha256(csv_path):
        return None          # truncated or tampered cache entry
    series = read_series_csv(csv_path, id=spec.series_id, units=spec.units)
    age = time.time() - float(meta.get("fetched_at_unix", 0.0))
    return series, age


def _write_cache(csv_path: Path, meta_path: Path, series: MonthlySeries,
                 source_url: str) -> None:
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = csv_path.with_suffix(".csv.tmp")
    write_series_csv(series, tmp)
    os.replace(tmp, csv_path)
    stamp = time.time()
    meta = {
        "series_id": series.id,
        "source_url": source_url,
        "fetched_at_unix": stamp,
        "fetched_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(stamp)),
        "checksum": _sha256(csv_path),
    }
    tmp_meta = meta_path.with_suffix(".meta.tmp")
    tmp_meta.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp_meta, meta_path)


def fetch(spec: SourceSpec, *, cache_dir=None, transport=None,
          offline: bool = False, base_dir=None) -> MonthlySeries:
    """Resolve one source to a gap-free monthly series.

    CSV sources read directly. API sources consult the cache first: a
    fresh entry (younger than ``spec.cache_ttl`` hours) is served without
    any network call, and ``offline=True`` serves any intact entry
    regardless of age or raises :class:`CacheMissError`.
    """
    if spec.provider == "csv":
        return read_series_csv(resolve_path(spec.path, base_dir),
                               id=spec.series_id, units=spec.units)
    root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    entry_dir = root / spec.provider
    csv_path = entry_dir / f"{spec.series_id}.csv"
    meta_path = entry_dir / f"{spec.series_id}.meta"
    entry_dir.mkdir(parents=True, exist_ok=True)
    with FileLock(str(entry_dir / f"{spec.series_id}.lock")):
        cached = _read_cache(csv_path, meta_path, spec)
        if cached is not None:
            series, age = cached
            if offline or age < float(spec.cache_ttl) * 3600.0:
                return series
        elif offline:
            raise CacheMissError(
                f"offline, and no cached copy of {spec.provider}:"
                f"{spec.series_id} under {root}"
            )
        series, source_url = _request(
            spec, transport if transport is not None else default_transport
        )
        _write_cache(csv_path, meta_path, series, source_url)
        return series


# ---------------------------------------------------------------------------
# series construction


def build_real_price(nominal: MonthlySeries, cpi: MonthlySeries,
                     demean_window=None, id: str = "real_price") -> MonthlySeries:
    """Log real price: ``ln(nominal/cpi)`` demeaned over ``demean_window``
    (default: the whole overlap)."""
    panel = align([nominal, cpi])
    nom, defl = panel.values[:, 0], panel.values[:, 1]
    if (nom <= 0).any() or (defl <= 0).any():
        raise NonPositiveValueError(
            "real price needs strictly positive nominal and deflator values"
        )
    series = MonthlySeries(id, panel.start, np.log(nom / defl))
    return demean(series, demean_window)


@dataclass(frozen=True)
class PanelConfig:
    """Recipe for the canonical three-column estimation panel."""

    production: SourceSpec
    activity: SourceSpec
    price: SourceSpec
    cpi: SourceSpec
    activity_transform: str = "none"        # "none" or "log_diff"
    demean_window: tuple | None = None      # (Month, Month) for the price
    sample: tuple | None = None             # (Month, Month) panel window
    names: tuple = ("prod_growth", "activity", "real_price")

    def __post_init__(self) -> None:
        if self.activity_transform not in ("none", "log_diff"):
            raise ValueError(
                f"activity_transform must be 'none' or 'log_diff', "
                f"got {self.activity_transform!r}"
            )
        if len(self.names) != 3:
            raise ValueError("panel names must have exactly 3 entries")


def build_panel(config: PanelConfig, *, cache_dir=None, transport=None,
                offline: bool = False, base_dir=None) -> Panel:
    """Fetch, transform, and align the three estimation columns.

    Column order is fixed (production growth, activity, real price); it
    encodes the recursive identification and must not be shuffled.
    """
    opts = dict(cache_dir=cache_dir, transport=transport, offline=offline,
                base_dir=base_dir)
    production = fetch(config.production, **opts)
    activity = fetch(config.activity, **opts)
    nominal = fetch(config.price, **opts)
    cpi = fetch(config.cpi, **opts)

    growth = log_diff(production)
    growth = growth.replace_values(growth.values, id=config.names[0])
    if config.activity_transform == "log_diff":
        activity = log_diff(activity)
    activity = activity.replace_values(activity.values, id=config.names[1])
    price = build_real_price(nominal, cpi, config.demean_window,
                             id=config.names[2])

    panel = align([growth, activity, price])
    if config.sample is not None:
        panel = panel.window(config.sample[0], config.sample[1])
    return panel
