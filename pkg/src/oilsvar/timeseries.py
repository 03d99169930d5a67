"""Monthly time-series containers, calendar alignment, and data transforms.

The containers are deliberately small: a month is a ``(year, month)`` pair
with integer arithmetic, a series is a start month plus a gap-free vector of
values, and a panel is a set of series forced onto one common month range.
Values are immutable after construction so instances can be shared freely
across threads.

Missing observations are never represented in-memory; a gap in a source file
is a load-time error (:class:`~oilsvar.exceptions.GapError`), never something
to interpolate over.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    EmptyWindowError,
    GapError,
    NoCompleteQuarterError,
    NonPositiveValueError,
    NoOverlapError,
    ParseError,
    TooShortError,
)

__all__ = [
    "Month",
    "Quarter",
    "MonthlySeries",
    "QuarterlySeries",
    "Panel",
    "log_diff",
    "demean",
    "align",
    "quarterly_average",
    "seasonal_adjust",
    "read_series_csv",
    "write_series_csv",
    "read_quarterly_csv",
    "write_quarterly_csv",
]


@dataclass(frozen=True, order=True)
class Month:
    """A calendar month, no day or timezone semantics.

    Supports integer arithmetic: ``month + 3`` steps forward three months,
    ``a - b`` counts months between two dates.
    """

    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def parse(cls, text: str) -> "Month":
        """Parse ``YYYY-MM``."""
        parts = text.strip().split("-")
        if len(parts) != 2:
            raise ParseError(f"expected YYYY-MM, got {text!r}")
        try:
            year, month = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"expected YYYY-MM, got {text!r}") from exc
        if not 1 <= month <= 12:
            raise ParseError(f"month out of range in {text!r}")
        return cls(year, month)

    @classmethod
    def from_index(cls, index: int) -> "Month":
        return cls(index // 12, index % 12 + 1)

    @property
    def index(self) -> int:
        """Months since year 0, used for all arithmetic."""
        return self.year * 12 + self.month - 1

    @property
    def quarter(self) -> "Quarter":
        return Quarter(self.year, (self.month - 1) // 3 + 1)

    def __add__(self, months: int) -> "Month":
        return Month.from_index(self.index + months)

    def __sub__(self, other):
        if isinstance(other, Month):
            return self.index - other.index
        return Month.from_index(self.index - other)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


@dataclass(frozen=True, order=True)
class Quarter:
    """A calendar quarter, printed ``YYYY-Qn``."""

    year: int
    quarter: int

    def __post_init__(self) -> None:
        if not 1 <= self.quarter <= 4:
            raise ValueError(f"quarter must be in 1..4, got {self.quarter}")

    @classmethod
    def parse(cls, text: str) -> "Quarter":
        parts = text.strip().upper().split("-Q")
        if len(parts) != 2:
            raise ParseError(f"expected YYYY-Qn, got {text!r}")
        try:
            return cls(int(parts[0]), int(parts[1]))
        except ValueError as exc:
            raise ParseError(f"expected YYYY-Qn, got {text!r}") from exc

    @classmethod
    def from_index(cls, index: int) -> "Quarter":
        return cls(index // 4, index % 4 + 1)

    @property
    def index(self) -> int:
        return self.year * 4 + self.quarter - 1

    @property
    def first_month(self) -> Month:
        return Month(self.year, (self.quarter - 1) * 3 + 1)

    def __add__(self, quarters: int) -> "Quarter":
        return Quarter.from_index(self.index + quarters)

    def __sub__(self, other):
        if isinstance(other, Quarter):
            return self.index - other.index
        return Quarter.from_index(self.index - other)

    def __str__(self) -> str:
        return f"{self.year:04d}-Q{self.quarter}"


def _freeze(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MonthlySeries:
    """One monthly observation vector with no gaps.

    Parameters
    ----------
    id : str
        Short label, used in filenames, panels and error messages.
    start : Month
        Month of ``values[0]``. The end month follows from the length.
    values : array-like of float
        One value per month. Non-finite entries are rejected.
    units : str
        Free-text units, carried along for provenance only.
    """

    id: str
    start: Month
    values: np.ndarray
    units: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise ValueError(f"series {self.id!r}: values must be 1-D")
        if arr.size == 0:
            raise ValueError(f"series {self.id!r}: values must be non-empty")
        if not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise GapError(
                f"series {self.id!r}: non-finite value at {self.start + bad}",
                missing=str(self.start + bad),
            )
        object.__setattr__(self, "values", _freeze(arr))

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> Month:
        return self.start + (len(self) - 1)

    def index_of(self, month: Month) -> int:
        offset = month - self.start
        if not 0 <= offset < len(self):
            raise KeyError(f"{month} outside series {self.id!r} range "
                           f"{self.start}..{self.end}")
        return offset

    def value_at(self, month: Month) -> float:
        return float(self.values[self.index_of(month)])

    def window(self, start: Month, end: Month) -> "MonthlySeries":
        """Sub-series covering ``start..end`` inclusive; must lie inside."""
        if start > end:
            raise EmptyWindowError(f"window {start}..{end} is empty")
        if start < self.start or end > self.end:
            raise EmptyWindowError(
                f"window {start}..{end} outside series {self.id!r} range "
                f"{self.start}..{self.end}"
            )
        lo = start - self.start
        return MonthlySeries(self.id, start,
                             self.values[lo:lo + (end - start) + 1], self.units)

    def replace_values(self, values, id: str | None = None) -> "MonthlySeries":
        return MonthlySeries(id if id is not None else self.id,
                             self.start, values, self.units)

    def months(self) -> list[Month]:
        return [self.start + t for t in range(len(self))]


@dataclass(frozen=True)
class QuarterlySeries:
    """Quarterly observation vector, built only from complete quarters."""

    id: str
    start: Quarter
    values: np.ndarray
    units: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError(f"series {self.id!r}: values must be non-empty 1-D")
        if not np.isfinite(arr).all():
            raise GapError(f"series {self.id!r}: non-finite quarterly value")
        object.__setattr__(self, "values", _freeze(arr))

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> Quarter:
        return self.start + (len(self) - 1)

    def quarters(self) -> list[Quarter]:
        return [self.start + t for t in range(len(self))]


@dataclass(frozen=True)
class Panel:
    """K monthly series on one common month range.

    Column order is significant: it fixes the recursive ordering used by the
    structural identification downstream.
    """

    start: Month
    values: np.ndarray          # (T, K), read-only
    names: tuple[str, ...]
    units: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise ValueError("panel values must be 2-D (months x columns)")
        if arr.shape[1] != len(self.names):
            raise ValueError("panel names do not match column count")
        if not np.isfinite(arr).all():
            raise GapError("panel contains non-finite values")
        object.__setattr__(self, "values", _freeze(arr))
        object.__setattr__(self, "names", tuple(self.names))
        if not self.units:
            object.__setattr__(self, "units", ("",) * arr.shape[1])
        else:
            object.__setattr__(self, "units", tuple(self.units))

    @classmethod
    def from_series(cls, series: Sequence[MonthlySeries]) -> "Panel":
        """Assemble columns that already share an identical month range."""
        if not series:
            raise ValueError("panel needs at least one column")
        first = series[0]
        for s in series[1:]:
            if s.start != first.start or len(s) != len(first):
                raise ValueError(
                    f"column {s.id!r} spans {s.start}..{s.end}, "
                    f"expected {first.start}..{first.end}; align() first"
                )
        values = np.column_stack([s.values for s in series])
        return cls(first.start, values,
                   tuple(s.id for s in series), tuple(s.units for s in series))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    @property
    def end(self) -> Month:
        return self.start + (len(self) - 1)

    def column(self, key: int | str) -> MonthlySeries:
        idx = self.names.index(key) if isinstance(key, str) else key
        return MonthlySeries(self.names[idx], self.start,
                             self.values[:, idx], self.units[idx])

    def columns(self) -> list[MonthlySeries]:
        return [self.column(i) for i in range(self.n_columns)]

    def window(self, start: Month, end: Month) -> "Panel":
        if start > end:
            raise EmptyWindowError(f"window {start}..{end} is empty")
        if start < self.start or end > self.end:
            raise EmptyWindowError(
                f"window {start}..{end} outside panel range "
                f"{self.start}..{self.end}"
            )
        lo = start - self.start
        return Panel(start, self.values[lo:lo + (end - start) + 1],
                     self.names, self.units)

    def months(self) -> list[Month]:
        return [self.start + t for t in range(len(self))]


# ---------------------------------------------------------------------------
# transforms


def log_diff(s: MonthlySeries) -> MonthlySeries:
    """First difference of the natural log.

    ``out[t] = ln(s[t+1]) - ln(s[t])``; the start month advances by one and
    the length shrinks by one.

    Raises
    ------
    NonPositiveValueError
        If any input value is <= 0.
    TooShortError
        If the series has fewer than 2 observations.
    """
    if len(s) < 2:
        raise TooShortError(f"series {s.id!r}: log_diff needs >= 2 observations")
    if np.any(s.values <= 0.0):
        bad = int(np.flatnonzero(s.values <= 0.0)[0])
        raise NonPositiveValueError(
            f"series {s.id!r}: non-positive value {s.values[bad]} at "
            f"{s.start + bad}"
        )
    logs = np.log(s.values)
    return MonthlySeries(s.id, s.start + 1, np.diff(logs), s.units)


def demean(s: MonthlySeries,
           window: tuple[Month, Month] | None = None) -> MonthlySeries:
    """Subtract the sample mean computed over ``window`` from every value.

    ``window`` is an inclusive ``(start, end)`` month pair and defaults to
    the full range. Demeaning twice over the same window is idempotent.
    """
    if window is None:
        mean = float(s.values.mean())
    else:
        lo_m, hi_m = window
        if lo_m > hi_m:
            raise EmptyWindowError(f"window {lo_m}..{hi_m} is empty")
        if lo_m < s.start or hi_m > s.end:
            raise EmptyWindowError(
                f"window {lo_m}..{hi_m} outside series {s.id!r} range "
                f"{s.start}..{s.end}"
            )
        lo = lo_m - s.start
        mean = float(s.values[lo:lo + (hi_m - lo_m) + 1].mean())
    return s.replace_values(s.values - mean)


def align(series: Sequence[MonthlySeries]) -> Panel:
    """Truncate every series to the common intersection range and stack.

    Column order follows the input order. Raises
    :class:`~oilsvar.exceptions.NoOverlapError` when the intersection is
    empty.
    """
    if not series:
        raise ValueError("align() needs at least one series")
    start = max(s.start for s in series)
    end = min(s.end for s in series)
    if start > end:
        ranges = ", ".join(f"{s.id}: {s.start}..{s.end}" for s in series)
        raise NoOverlapError(f"series ranges do not overlap ({ranges})")
    return Panel.from_series([s.window(start, end) for s in series])


def quarterly_average(s: MonthlySeries) -> QuarterlySeries:
    """Average each fully-covered calendar quarter of a monthly series.

    Partial quarters at either end are dropped. Raises
    :class:`~oilsvar.exceptions.NoCompleteQuarterError` if no quarter is
    fully covered.
    """
    first_q = s.start.quarter
    if s.start != first_q.first_month:
        first_q = first_q + 1
    last_q = s.end.quarter
    if s.end != last_q.first_month + 2:
        last_q = last_q - 1
    n_quarters = last_q - first_q + 1
    if n_quarters < 1:
        raise NoCompleteQuarterError(
            f"series {s.id!r} ({s.start}..{s.end}) covers no complete quarter"
        )
    offset = first_q.first_month - s.start
    block = s.values[offset:offset + 3 * n_quarters].reshape(n_quarters, 3)
    return QuarterlySeries(s.id, first_q, block.mean(axis=1), s.units)


def seasonal_adjust(s: MonthlySeries) -> MonthlySeries:
    """Remove a month-of-year pattern by dummy regression.

    The series is regressed on a constant and 11 monthly dummies; the output
    is the residual plus the overall sample mean, so the level is preserved
    and the output range equals the input range.

    Needs at least 24 observations so every month of the year is seen twice.
    """
    n = len(s)
    if n < 24:
        raise TooShortError(
            f"series {s.id!r}: seasonal adjustment needs >= 24 observations, "
            f"got {n}"
        )
    month_of_year = (s.start.month - 1 + np.arange(n)) % 12
    X = np.ones((n, 12))
    for m in range(1, 12):
        X[:, m] = month_of_year == m
    beta, *_ = np.linalg.lstsq(X, s.values, rcond=None)
    resid = s.values - X @ beta
    return s.replace_values(resid + s.values.mean())


# ---------------------------------------------------------------------------
# CSV round-trip
#
# Format: header "date,value", dates YYYY-MM, plain decimal values, UTF-8,
# LF line endings. Quarterly files use YYYY-Qn dates with the same layout.


def write_series_csv(s: MonthlySeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "value"])
        for month, value in zip(s.months(), s.values):
            writer.writerow([str(month), repr(float(value))])


def read_series_csv(path, id: str | None = None, units: str = "") -> MonthlySeries:
    """Load one monthly series; interior month gaps are a hard error."""
    months: list[Month] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "value"]:
            raise ParseError(f"{path}: expected header 'date,value', got {header}")
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: malformed row {row}")
            months.append(Month.parse(row[0]))
            try:
                values.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(f"{path}: bad value {row[1]!r} at {row[0]}") from exc
    if not months:
        raise ParseError(f"{path}: no observations")
    for prev, cur in zip(months, months[1:]):
        if cur - prev != 1:
            missing = prev + 1
            raise GapError(f"{path}: missing month {missing}", missing=str(missing))
    name = id if id is not None else _stem(path)
    return MonthlySeries(name, months[0], values, units)


def write_quarterly_csv(s: QuarterlySeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "value"])
        for quarter, value in zip(s.quarters(), s.values):
            writer.writerow([str(quarter), repr(float(value))])


def read_quarterly_csv(path, id: str | None = None, units: str = "") -> QuarterlySeries:
    quarters: list[Quarter] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "value"]:
            raise ParseError(f"{path}: expected header 'date,value', got {header}")
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: malformed row {row}")
            quarters.append(Quarter.parse(row[0]))
            try:
                values.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(f"{path}: bad value {row[1]!r} at {row[0]}") from exc
    if not quarters:
        raise ParseError(f"{path}: no observations")
    for prev, cur in zip(quarters, quarters[1:]):
        if cur - prev != 1:
            raise GapError(f"{path}: missing quarter {prev + 1}",
                           missing=str(prev + 1))
    name = id if id is not None else _stem(path)
    return QuarterlySeries(name, quarters[0], values, units)


def write_panel_csv(panel: Panel, path) -> None:
    """Wide CSV: ``date`` column plus one column per panel variable."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *panel.names])
        for t, month in enumerate(panel.months()):
            writer.writerow([str(month),
                             *(repr(float(v)) for v in panel.values[t])])


def read_panel_csv(path) -> Panel:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip().lower() != "date" or len(header) < 2:
            raise ParseError(f"{path}: expected header 'date,<names...>'")
        names = tuple(h.strip() for h in header[1:])
        months: list[Month] = []
        rows: list[list[float]] = []
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(names) + 1:
                raise ParseError(f"{path}: malformed row {row}")
            months.append(Month.parse(row[0]))
            rows.append([float(v) for v in row[1:]])
    if not months:
        raise ParseError(f"{path}: no observations")
    for prev, cur in zip(months, months[1:]):
        if cur - prev != 1:
            raise GapError(f"{path}: missing month {prev + 1}",
                           missing=str(prev + 1))
    return Panel(months[0], np.asarray(rows, dtype=float), names)


def _stem(path) -> str:
    text = str(path)
    base = text.rsplit("/", 1)[-1]
    return base.rsplit(".", 1)[0] if "." in base else base
