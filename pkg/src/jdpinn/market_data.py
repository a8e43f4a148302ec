"""Market data ingestion: closing prices, trend values, log-returns, descriptive stats.

CSV conventions: UTF-8, comma separated, two columns. Prices use
``date,close`` and trend files use ``date,value``; a single header line is
detected by a non-numeric second field and skipped. Dates are ISO-8601
calendar days and must be strictly increasing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .errors import DataError

DAYS_PER_YEAR_CRYPTO = 365
DAYS_PER_YEAR_EQUITY = 252


@dataclass(frozen=True)
class PriceSeries:
    """Daily closing prices, sorted by date, all strictly positive."""

    dates: tuple[date, ...]
    closes: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.closes):
            raise DataError("dates and closes length mismatch")
        if len(self.dates) < 2:
            raise DataError("price series needs at least 2 observations")
        if np.any(np.asarray(self.closes) <= 0.0):
            raise DataError("non-positive price")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise DataError(f"dates not strictly increasing at {b}")

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class TrendSeries:
    """Search-interest values on a 0..100 scale, sorted by date."""

    dates: tuple[date, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise DataError("dates and values length mismatch")
        vals = np.asarray(self.values)
        if np.any(vals < 0.0) or np.any(vals > 100.0):
            raise DataError("trend value outside [0, 100]")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise DataError(f"dates not strictly increasing at {b}")

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    """Log-returns between consecutive observations plus the calendar span."""

    values: np.ndarray
    period_years: float

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class DescriptiveStats:
    count: int
    mean: float
    min: float
    q1: float
    median: float
    q3: float
    max: float
    std_dev: float
    skewness: float
    kurtosis: float


def _read_two_column_csv(path, value_label):
    """Parse (date, float) rows; returns (dates, values). Errors carry line numbers."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    dates, values = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            raw_date, raw_value = row[0].strip(), row[1].strip()
            if lineno == 1:
                try:
                    float(raw_value)
                except ValueError:
                    continue  # header line
            try:
                day = date.fromisoformat(raw_date)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed date {raw_date!r}") from None
            try:
                value = float(raw_value)
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: malformed {value_label} {raw_value!r}"
                ) from None
            if day in set(dates):
                raise DataError(f"{path}:{lineno}: duplicate date {day}")
            dates.append(day)
            values.append(value)
    order = np.argsort([d.toordinal() for d in dates], kind="stable")
    return tuple(dates[i] for i in order), np.array([values[i] for i in order])


def load_price_csv(path) -> PriceSeries:
    """Load a ``date,close`` CSV into a PriceSeries (rows sorted by date)."""
    dates, closes = _read_two_column_csv(path, "close")
    return PriceSeries(dates=dates, closes=closes)


def load_trend_csv(path) -> TrendSeries:
    """Load a ``date,value`` CSV into a TrendSeries (rows sorted by date)."""
    dates, values = _read_two_column_csv(path, "value")
    return TrendSeries(dates=dates, values=values)


def log_returns(series, day_count: int = DAYS_PER_YEAR_CRYPTO) -> ReturnSeries:
    """Continuously compounded returns ln(x[i+1] / x[i]) between consecutive rows.

    Works on PriceSeries and TrendSeries alike; trend values must be strictly
    positive to be convertible. ``period_years`` is the calendar span over 365
    for the crypto day count, and the observation count over 252 for the
    equity convention (consecutive rows are then taken to be trading days).
    """
    values = np.asarray(series.closes if hasattr(series, "closes") else series.values, dtype=float)
    if len(values) < 2:
        raise DataError("need at least 2 observations for returns")
    if np.any(values <= 0.0):
        raise DataError("non-positive value in source series")
    rets = np.log(values[1:] / values[:-1])
    if day_count == DAYS_PER_YEAR_EQUITY:
        period = len(rets) / DAYS_PER_YEAR_EQUITY
    else:
        span_days = (series.dates[-1] - series.dates[0]).days
        period = span_days / DAYS_PER_YEAR_CRYPTO
    return ReturnSeries(values=rets, period_years=period)


def describe(returns: ReturnSeries) -> DescriptiveStats:
    """Descriptive statistics of a return sample.

    Conventions: std_dev uses the n-1 denominator; skewness is m3 / m2^1.5 and
    kurtosis is m4 / m2^2 (raw, so normal = 3), with m_k the central moments
    over n. Quartiles interpolate linearly between closest ranks of the sorted
    sample: q(p) = x_(k) + (h - k) * (x_(k+1) - x_(k)) with h = (n - 1) * p.
    A zero-variance sample reports NaN skewness and kurtosis.
    """
    x = np.asarray(returns.values, dtype=float)
    n = len(x)
    if n < 4:
        raise DataError("insufficient data: need at least 4 returns")
    mean = float(np.mean(x))
    centered = x - mean
    m2 = float(np.mean(centered**2))
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    if m2 > 0.0:
        skew = m3 / m2**1.5
        kurt = m4 / m2**2
    else:
        skew = math.nan
        kurt = math.nan
    q1, med, q3 = np.percentile(x, [25.0, 50.0, 75.0])
    return DescriptiveStats(
        count=n,
        mean=mean,
        min=float(np.min(x)),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        max=float(np.max(x)),
        std_dev=float(np.std(x, ddof=1)),
        skewness=float(skew),
        kurtosis=float(kurt),
    )
