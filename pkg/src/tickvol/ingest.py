"""Parsing and cleaning of raw tick files.

Raw format (UTF-8 CSV): header ``timestamp,price,condition`` where the
timestamp is seconds since midnight (one-second resolution allowed), the
price is a positive trade price in currency units, and the condition is an
optional sale-condition code.

Cleaning pipeline: keep the regular session, drop abnormal sale conditions
(and, optionally, rolling-median outliers), spread same-timestamp groups
into equally spaced times, rebase the clock so the session starts at 0, and
map prices to natural logs.

Cleaned series format: a comment line ``# tickvol horizon_T=<T> clean=<0|1>``
followed by a ``time,log_price`` CSV body written with shortest round-trip
precision.
"""

from __future__ import annotations

import csv
import os
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySeriesError, FormatError
from .series import TickSeries

SESSION_START = 34200.0   # 09:30:00
SESSION_END = 57600.0     # 16:00:00

RAW_HEADER = ["timestamp", "price", "condition"]


@dataclass(frozen=True)
class RawTickRecord:
    timestamp: float
    price: float
    condition: str | None = None


@dataclass
class CleaningReport:
    """Counts of records dropped per rule, JSON-serializable."""

    total: int = 0
    kept: int = 0
    dropped_session: int = 0
    dropped_condition: int = 0
    dropped_outlier: int = 0
    dropped_boundary: int = 0
    spread_groups: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# ---------------------------------------------------------------------------
# Raw parsing
# ---------------------------------------------------------------------------

def parse_tick_csv(stream, max_malformed_frac: float = 0.01):
    """Parse raw tick CSV into records, collecting malformed rows.

    Returns ``(records, malformed)`` where ``malformed`` is a list of
    ``(line_number, reason)`` pairs.  A missing/garbled header or more than
    ``max_malformed_frac`` bad rows aborts with :class:`FormatError`.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, str):
        stream = io.StringIO(stream)

    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty input: missing 'timestamp,price,condition' header")
    if [h.strip().lower() for h in header] != RAW_HEADER:
        raise FormatError(
            f"bad header {header!r}; expected {','.join(RAW_HEADER)!r}"
        )

    records: list[RawTickRecord] = []
    malformed: list[tuple[int, str]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < 2 or len(row) > 3:
            malformed.append((lineno, f"expected 2-3 fields, got {len(row)}"))
            continue
        try:
            ts = float(row[0])
            price = float(row[1])
        except ValueError:
            malformed.append((lineno, f"non-numeric timestamp/price: {row[:2]!r}"))
            continue
        if not (math.isfinite(ts) and math.isfinite(price)) or price <= 0:
            malformed.append((lineno, f"timestamp/price out of domain: {row[:2]!r}"))
            continue
        cond = row[2].strip() if len(row) == 3 and row[2].strip() else None
        records.append(RawTickRecord(ts, price, cond))

    n_rows = len(records) + len(malformed)
    if n_rows and len(malformed) > max_malformed_frac * n_rows:
        preview = "; ".join(f"line {ln}: {why}" for ln, why in malformed[:5])
        raise FormatError(
            f"{len(malformed)}/{n_rows} malformed rows exceeds the "
            f"{max_malformed_frac:.0%} threshold ({preview} ...)"
        )
    return records, malformed


# ---------------------------------------------------------------------------
# Cleaning
# ---------------------------------------------------------------------------

def spread_same_timestamp(second: float, k: int) -> np.ndarray:
    """k distinct times for k trades sharing one timestamp.

    Offsets are j/k for j = 0..k-1, rendered at 0.01-second resolution
    (half-even rounding reproduces e.g. 34210, 34210.33, 34210.67 for k=3).
    When k > 100 the 0.01 grid cannot keep k offsets distinct, so the
    unrounded offsets are used instead.
    """
    if k < 1:
        raise ValueError(f"group size must be >= 1, got {k}")
    if k == 1:
        return np.array([float(second)])
    if k > 100:
        return second + np.arange(k) / k
    return np.array([round(second + j / k, 2) for j in range(k)])


def _rolling_median_outliers(prices: np.ndarray, window: int, multiplier: float) -> np.ndarray:
    """Boolean mask of outliers: |p - median| > multiplier * MAD over a
    centered rolling window."""
    n = prices.size
    mask = np.zeros(n, dtype=bool)
    half = window // 2
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        neighborhood = prices[lo:hi]
        med = np.median(neighborhood)
        mad = np.median(np.abs(neighborhood - med))
        if abs(prices[i] - med) > multiplier * mad:
            mask[i] = True
    return mask


def clean_records(
    records,
    session_start: float = SESSION_START,
    session_end: float = SESSION_END,
    bad_conditions=frozenset(),
    outlier_window: int | None = None,
    outlier_multiplier: float = 10.0,
):
    """Record-level cleaning: session filter, condition filter, optional
    outlier filter, same-timestamp spreading, and rebasing to t=0 at the
    session start.

    Returns ``(times, prices, report)`` with strictly increasing times in
    (0, session_end - session_start].  Idempotent: feeding back an already
    cleaned series (with session (0, T]) reproduces it.
    """
    report = CleaningReport(total=len(records))
    bad_conditions = frozenset(bad_conditions)

    kept: list[RawTickRecord] = []
    for rec in records:
        if not (session_start <= rec.timestamp <= session_end):
            report.dropped_session += 1
            continue
        if rec.condition is not None and rec.condition in bad_conditions:
            report.dropped_condition += 1
            continue
        kept.append(rec)

    if outlier_window is not None and kept:
        prices = np.array([r.price for r in kept])
        mask = _rolling_median_outliers(prices, outlier_window, outlier_multiplier)
        report.dropped_outlier = int(mask.sum())
        kept = [r for r, bad in zip(kept, mask) if not bad]

    # Spread groups of equal timestamps (order within a group is preserved).
    times: list[float] = []
    prices_out: list[float] = []
    i = 0
    while i < len(kept):
        j = i
        while j < len(kept) and kept[j].timestamp == kept[i].timestamp:
            j += 1
        group = kept[i:j]
        if len(group) > 1:
            report.spread_groups += 1
        spread = spread_same_timestamp(group[0].timestamp, len(group))
        times.extend(spread.tolist())
        prices_out.extend(r.price for r in group)
        i = j

    t = np.asarray(times) - session_start
    p = np.asarray(prices_out)
    horizon = session_end - session_start
    inside = (t > 0) & (t <= horizon)
    report.dropped_boundary = int(t.size - inside.sum())
    t, p = t[inside], p[inside]
    report.kept = int(t.size)
    return t, p, report


def clean_ticks(
    records,
    session_start: float = SESSION_START,
    session_end: float = SESSION_END,
    bad_conditions=frozenset(),
    outlier_window: int | None = None,
    outlier_multiplier: float = 10.0,
):
    """Full cleaning into a :class:`TickSeries` of log-prices.

    Raises :class:`EmptySeriesError` when nothing survives.
    """
    t, p, report = clean_records(
        records,
        session_start=session_start,
        session_end=session_end,
        bad_conditions=bad_conditions,
        outlier_window=outlier_window,
        outlier_multiplier=outlier_multiplier,
    )
    if t.size == 0:
        raise EmptySeriesError("no records survived cleaning")
    series = TickSeries(
        horizon_T=session_end - session_start,
        times=t,
        log_prices=np.log(p),
        clean_flag=True,
    )
    return series, report


# ---------------------------------------------------------------------------
# Cleaned-series CSV
# ---------------------------------------------------------------------------

def write_series_csv(series: TickSeries, path) -> None:
    """Write a series with shortest round-trip decimals (bit-exact reload).

    Writes a temp file and renames, so readers never observe a partial file.
    """
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# tickvol horizon_T={float(series.horizon_T)!r} clean={int(series.clean_flag)}\n")
        fh.write("time,log_price\n")
        for t, y in zip(series.times, series.log_prices):
            fh.write(f"{float(t)!r},{float(y)!r}\n")
    os.replace(tmp, path)


def read_series_csv(path) -> TickSeries:
    """Read a cleaned/simulated series written by :func:`write_series_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        meta = fh.readline().strip()
        if not meta.startswith("# tickvol"):
            raise FormatError(f"{path}: missing '# tickvol ...' metadata line")
        fields = dict(part.split("=", 1) for part in meta[len("# tickvol"):].split())
        try:
            horizon = float(fields["horizon_T"])
            clean = bool(int(fields.get("clean", "0")))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path}: bad metadata line {meta!r}") from exc
        header = fh.readline().strip()
        if header != "time,log_price":
            raise FormatError(f"{path}: expected 'time,log_price' header, got {header!r}")
        times: list[float] = []
        prices: list[float] = []
        for lineno, line in enumerate(fh, start=3):
            line = line.strip()
            if not line:
                continue
            try:
                t_str, y_str = line.split(",")
                times.append(float(t_str))
                prices.append(float(y_str))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad row {line!r}") from exc
    if not times:
        raise EmptySeriesError(f"{path}: series file has no observations")
    return TickSeries(horizon_T=horizon, times=np.array(times),
                      log_prices=np.array(prices), clean_flag=clean)
